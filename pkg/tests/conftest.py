"""Shared fixtures and helpers for the test suite."""

import sys

import numpy as np
import pytest

from randcech.pointproc import substream


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance criteria pass/fail lines at the end of the run."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    """Fixed-seed generator so every test is deterministic."""
    return substream(2024, 0)


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random rotation matrix via QR with positive diagonal."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
