"""Limit constants for critical-point counts of random distance functions.

With r_n = c * n^(-beta), the scaled counts of index-k critical points
converge to constants determined by the regime of n * r_n^d:

* subcritical (beta > 1/d): E[N_k,n] ~ mu_k * n^(k+1) r_n^(dk); the
  critical index k_c = floor(1/(d beta - 1)) separates the indices whose
  counts diverge from those that vanish.
* critical (beta = 1/d, lambda = c^d): E[N_k,n]/n -> gamma_k(lambda),
  Var[N_k,n]/n -> sigma2_k(lambda) with a CLT.
* the global count (no radius restriction) scales with gamma_k(inf).

All constants are integrals of geometric indicator functions:
h(0, y) asks that the circumcenter of the k+1 points (0, y) lie in
their open convex hull, and h_1 additionally bounds the circumradius
by 1.  Closed forms are used where they exist (k = 1, uniform
densities); everything else is seeded Monte Carlo with reported
standard errors.

For the lambda = inf constants the radial part of the integral is done
analytically: the indicators are scale-invariant and the exponential
weights are homogeneous of degree d, so writing y = rho * u with u on
the unit sphere of the full coordinate space reduces each integral to a
bounded expectation over the sphere.  This removes all truncation error
and leaves an integrand bounded above and below on its support.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .geometry import (
    circumspheres_batch,
    two_ball_union_volumes_batch,
    unit_ball_volume,
)
from .pointproc import Density

INF = math.inf

DEFAULT_SAMPLES = 200_000
_CHUNK = 100_000


class WrongRegime(ValueError):
    pass


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo estimate with its standard error."""

    value: float
    std_err: float
    samples: int = 0

    def agrees(self, other, n_sigma: float = 3.0) -> bool:
        """Within n_sigma combined standard errors of a float or Estimate."""
        if isinstance(other, Estimate):
            se = math.hypot(self.std_err, other.std_err)
            other = other.value
        else:
            se = self.std_err
        return abs(self.value - float(other)) <= n_sigma * max(se, 1e-300)


def exact(value: float) -> Estimate:
    return Estimate(float(value), 0.0, 0)


@dataclass(frozen=True)
class RegimeSpec:
    """Radius rule r_n = c * n^(-beta) in dimension d."""

    c: float
    beta: float
    d: int

    def __post_init__(self):
        if self.c <= 0 or self.beta <= 0 or self.d < 1:
            raise ValueError("need c > 0, beta > 0, d >= 1")

    def radius(self, n: float) -> float:
        return self.c * n ** (-self.beta)

    @property
    def classification(self) -> str:
        if self.beta > 1.0 / self.d:
            return "subcritical"
        if self.beta == 1.0 / self.d:
            return "critical"
        return "supercritical"

    @property
    def lam(self) -> float:
        """Limit of n r_n^d: 0, c^d, or inf by regime."""
        if self.classification == "critical":
            return self.c**self.d
        return 0.0 if self.classification == "subcritical" else INF


@dataclass(frozen=True)
class CriticalIndex:
    value: int
    clamped: bool


def critical_index(spec: RegimeSpec) -> CriticalIndex:
    """Largest index whose expected count diverges in the subcritical
    regime: floor(alpha) with alpha = 1/(d beta - 1), clamped to [0, d]."""
    if spec.classification != "subcritical":
        raise WrongRegime(f"critical index needs beta > 1/d, got {spec.classification}")
    alpha = 1.0 / (spec.d * spec.beta - 1.0)
    kc = math.floor(alpha)
    if kc > spec.d:
        return CriticalIndex(spec.d, True)
    if kc < 1:
        return CriticalIndex(0, True)
    return CriticalIndex(kc, False)


# ---------------------------------------------------------------------------
# closed forms


def mu_1_closed(f: Density) -> Estimate:
    """mu_1 = 2^(d-1) * omega_d * int f^2."""
    d = f.dim
    f2 = f.integral_f_power(2.0)
    if f2 is None:
        raise ValueError("no closed form for int f^2; use mu_k_estimate")
    return exact(2.0 ** (d - 1) * unit_ball_volume(d) * f2)


def gamma_1_closed_uniform(d: int, lam: float, vol_D: float) -> float:
    """gamma_1(lambda) for the uniform density on a set of volume vol_D:
    2^(d-1) * (1 - exp(-lambda omega_d / vol_D))."""
    if vol_D <= 0:
        raise ValueError("vol_D must be > 0")
    if math.isinf(lam):
        return 2.0 ** (d - 1)
    return 2.0 ** (d - 1) * (1.0 - math.exp(-lam * unit_ball_volume(d) / vol_D))


def eta_1_closed_uniform(d: int, lam: float, vol_D: float) -> float:
    """eta_1(lambda) for the uniform density, by direct integration of
    the radial profile: 2^(d-1) * (1 - e^(-c)(1 + c)), c = lambda omega_d / vol_D."""
    if math.isinf(lam):
        return 2.0 ** (d - 1)
    c = lam * unit_ball_volume(d) / vol_D
    return 2.0 ** (d - 1) * (1.0 - math.exp(-c) * (1.0 + c))


def sphere_area(dim: int) -> float:
    """Surface area of the unit sphere S^(dim-1) in R^dim."""
    return float(np.exp(math.log(2.0) + 0.5 * dim * math.log(math.pi) - gammaln(0.5 * dim)))


# ---------------------------------------------------------------------------
# Monte Carlo plumbing


def _mc_mean(fn, samples: int, rng) -> Estimate:
    """Chunked streaming mean/variance; deterministic given (rng state,
    samples) and independent of the chunking."""
    done = 0
    s = 0.0
    s2 = 0.0
    while done < samples:
        m = min(_CHUNK, samples - done)
        v = np.asarray(fn(rng, m), dtype=float)
        s += float(v.sum())
        s2 += float((v * v).sum())
        done += m
    mean = s / samples
    var = max(s2 / samples - mean * mean, 0.0)
    return Estimate(mean, math.sqrt(var / samples), samples)


def _sample_ball(rng, m: int, count: int, d: int, radius: float = 2.0):
    """(m, count, d) i.i.d. points uniform in the ball of given radius."""
    u = rng.normal(size=(m, count, d))
    norms = np.linalg.norm(u, axis=2, keepdims=True)
    dirs = u / np.where(norms > 0, norms, 1.0)
    radii = radius * rng.random((m, count, 1)) ** (1.0 / d)
    return dirs * radii


def _sample_sphere(rng, m: int, dim: int):
    """(m, dim) uniform on the unit sphere S^(dim-1)."""
    u = rng.normal(size=(m, dim))
    norms = np.linalg.norm(u, axis=1, keepdims=True)
    return u / np.where(norms > 0, norms, 1.0)


def _with_origin(y: np.ndarray) -> np.ndarray:
    """Prepend the origin to each (m, k, d) tuple -> (m, k+1, d)."""
    m, _, d = y.shape
    return np.concatenate([np.zeros((m, 1, d)), y], axis=1)


def _hull_indicator(stacks: np.ndarray):
    """h on point tuples: circumcenter strictly inside the open hull.

    Returns (mask, radii, centers)."""
    centers, radii, bary, ok = circumspheres_batch(stacks)
    h = ok & np.all(bary > 0.0, axis=1)
    return h, radii, centers


def _density_power_integral(f: Density, p: float, samples: int, rng) -> Estimate:
    """int f^p dx: closed form when declared, else E_f[f^(p-1)]."""
    closed = f.integral_f_power(p)
    if closed is not None:
        return exact(closed)

    def draw(r, m):
        x = f.sample(r, m)
        return f.pdf(x) ** (p - 1.0)

    return _mc_mean(draw, samples, rng)


def _combine_product(a: Estimate, b: Estimate, factor: float = 1.0) -> Estimate:
    """Product of independent estimates with first-order error propagation."""
    value = factor * a.value * b.value
    se = factor * math.hypot(a.std_err * b.value, b.std_err * a.value)
    return Estimate(value, se, max(a.samples, b.samples))


# ---------------------------------------------------------------------------
# mean constants


def structure_integral(k: int, d: int, samples: int, rng) -> Estimate:
    """I_k = int over (R^d)^k of h_1(0, y) dy, by radial reduction.

    With y = rho * u, |u| = 1 in R^(dk): the hull indicator is
    scale-invariant and the radius constraint integrates to
    R(0, u)^(-dk) / (dk), so I_k = S_dk/(dk) * E_u[h R^(-dk)].
    On the support of h, 1/(2 sqrt(k)) <= R(0, u) <= 1 holds, so the
    integrand is bounded.
    """
    dim = d * k
    factor = sphere_area(dim) / dim

    def draw(r, m):
        u = _sample_sphere(r, m, dim).reshape(m, k, d)
        h, radii, _ = _hull_indicator(_with_origin(u))
        vals = np.zeros(m)
        vals[h] = radii[h] ** (-dim)
        return factor * vals

    return _mc_mean(draw, samples, rng)


def mu_k_estimate(k: int, d: int, f: Density, samples: int = DEFAULT_SAMPLES,
                  rng=None) -> Estimate:
    """mu_k = (1/(k+1)!) * int f^(k+1) * I_k, with I_k estimated by
    uniform sampling of y in B(0, 2)^k (the support of h_1)."""
    if not 1 <= k <= d:
        raise ValueError("need 1 <= k <= d")
    rng = np.random.default_rng(0) if rng is None else rng
    w = (2.0**d * unit_ball_volume(d)) ** k

    def draw(r, m):
        y = _sample_ball(r, m, k, d)
        h, radii, _ = _hull_indicator(_with_origin(y))
        return w * (h & (radii <= 1.0))

    ik = _mc_mean(draw, samples, rng)
    fk = _density_power_integral(f, k + 1.0, samples, rng)
    return _combine_product(ik, fk, 1.0 / math.factorial(k + 1))


def gamma_k_inf_estimate(k: int, d: int, samples: int = DEFAULT_SAMPLES,
                         rng=None) -> Estimate:
    """gamma_k(inf) = (1/(k+1)!) int h(0,y) e^(-omega_d R^d(0,y)) dy,
    density-independent, by exact radial reduction:

        gamma_k(inf) = S_dk Gamma(k) / (d omega_d^k (k+1)!)
                       * E_u[h(0,u) R(0,u)^(-dk)].
    """
    if not 1 <= k <= d:
        raise ValueError("need 1 <= k <= d")
    rng = np.random.default_rng(0) if rng is None else rng
    dim = d * k
    factor = (
        sphere_area(dim)
        * math.gamma(k)
        / (d * unit_ball_volume(d) ** k * math.factorial(k + 1))
    )

    def draw(r, m):
        u = _sample_sphere(r, m, dim).reshape(m, k, d)
        h, radii, _ = _hull_indicator(_with_origin(u))
        vals = np.zeros(m)
        vals[h] = radii[h] ** (-dim)
        return factor * vals

    return _mc_mean(draw, samples, rng)


def gamma_k_estimate(k: int, d: int, f: Density | None, lam: float,
                     samples: int = DEFAULT_SAMPLES, rng=None) -> Estimate:
    """gamma_k(lambda) by Monte Carlo.

    Finite lambda: sample x from f and y uniform in B(0,2)^k, average
    lambda^k f^k(x) h_1(0,y) e^(-lambda omega_d R^d f(x)) times the
    sampling volume over (k+1)!.  lambda = inf needs no density.
    """
    if not 1 <= k <= d:
        raise ValueError("need 1 <= k <= d")
    rng = np.random.default_rng(0) if rng is None else rng
    if math.isinf(lam):
        return gamma_k_inf_estimate(k, d, samples, rng)
    if f is None:
        raise ValueError("finite lambda needs a density")
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    omega = unit_ball_volume(d)
    w = (2.0**d * omega) ** k
    pref = lam**k * w / math.factorial(k + 1)

    def draw(r, m):
        x = f.sample(r, m)
        fx = f.pdf(x)
        y = _sample_ball(r, m, k, d)
        h, radii, _ = _hull_indicator(_with_origin(y))
        good = h & (radii <= 1.0)
        vals = np.zeros(m)
        vals[good] = (
            fx[good] ** k * np.exp(-lam * omega * radii[good] ** d * fx[good])
        )
        return pref * vals

    return _mc_mean(draw, samples, rng)


# ---------------------------------------------------------------------------
# variance constants


def eta_k_estimate(k: int, d: int, f: Density | None, lam: float,
                   samples: int = DEFAULT_SAMPLES, rng=None) -> Estimate:
    """eta_k(lambda): the expected loss of critical points when one
    cloud point is removed, entering the de-Poissonized variance.

    The inner z-integral over the circumball is omega_d R^d exactly, so

        eta_k(lambda) = lambda^(k+1)/(k+1)! * int f^(k+2)(x) h_1(0,y)
                        omega_d R^d e^(-lambda omega_d R^d f(x)) dy dx.

    For lambda = inf the same scaling that gives gamma_k(inf) yields
    eta_k(inf) = k * gamma_k(inf) exactly.
    """
    if not 1 <= k <= d:
        raise ValueError("need 1 <= k <= d")
    rng = np.random.default_rng(0) if rng is None else rng
    if math.isinf(lam):
        g = gamma_k_inf_estimate(k, d, samples, rng)
        return Estimate(k * g.value, k * g.std_err, g.samples)
    if f is None:
        raise ValueError("finite lambda needs a density")
    omega = unit_ball_volume(d)
    w = (2.0**d * omega) ** k
    pref = lam ** (k + 1) * w / math.factorial(k + 1)

    def draw(r, m):
        x = f.sample(r, m)
        fx = f.pdf(x)
        y = _sample_ball(r, m, k, d)
        h, radii, _ = _hull_indicator(_with_origin(y))
        good = h & (radii <= 1.0)
        vals = np.zeros(m)
        vol = omega * radii[good] ** d
        vals[good] = fx[good] ** (k + 1) * vol * np.exp(-lam * vol * fx[good])
        return pref * vals

    return _mc_mean(draw, samples, rng)


def gamma_k_j_estimate(k: int, j: int, d: int, f: Density | None, lam: float,
                       samples: int = DEFAULT_SAMPLES, rng=None) -> Estimate:
    """gamma_k^(j)(lambda), 1 <= j <= k: contribution of pairs of
    generating subsets sharing j points (the origin plus j-1 common
    coordinates), with the union of the two circumballs in the exponent.
    """
    if not 1 <= j <= k <= d:
        raise ValueError("need 1 <= j <= k <= d")
    rng = np.random.default_rng(0) if rng is None else rng
    omega = unit_ball_volume(d)
    free = 2 * k + 1 - j  # free d-dimensional coordinates
    pref_comb = 1.0 / (
        math.factorial(j) * math.factorial(k + 1 - j) ** 2
    )
    if math.isinf(lam):
        # radial reduction on the full coordinate space
        dim = d * free
        factor = sphere_area(dim) * math.gamma(free) / d * pref_comb

        def draw(r, m):
            u = _sample_sphere(r, m, dim).reshape(m, free, d)
            return factor * _shared_pair_values(u, k, j, d, None, None, omega)

        return _mc_mean(draw, samples, rng)
    if f is None:
        raise ValueError("finite lambda needs a density")
    w = (2.0**d * omega) ** free
    pref = lam**free * w * pref_comb

    def draw(r, m):
        x = f.sample(r, m)
        fx = f.pdf(x)
        u = _sample_ball(r, m, free, d)
        return pref * _shared_pair_values(u, k, j, d, lam, fx, omega)

    return _mc_mean(draw, samples, rng)


def _outside_ball(points, centers, radii) -> np.ndarray:
    """All of the (m, t, d) points at distance >= radius from the center."""
    dist = np.linalg.norm(points - centers[:, None, :], axis=2)
    return np.all(dist >= radii[:, None], axis=1)


def _shared_pair_values(u, k, j, d, lam, fx, omega):
    """Integrand of gamma_k^(j) on (m, 2k+1-j, d) coordinate blocks.

    Layout: y1 = u[:, :k+1-j], y2 = u[:, k+1-j:2k+2-2j], z = rest.
    Both subsets are (0, y_i, z).  Besides the two hull indicators, each
    subset's private generators must lie outside the other subset's open
    circumball -- otherwise the two critical points cannot coexist.
    With lam=None (the inf case, u on the unit sphere) the value is
    h1 h2 V_union^-(2k+1-j); else h_1 h_1 e^(-lam V_union fx) with
    radius caps at 1.
    """
    m = len(u)
    a = k + 1 - j
    y1, y2, z = u[:, :a], u[:, a : 2 * a], u[:, 2 * a :]
    s1 = _with_origin(np.concatenate([y1, z], axis=1))
    s2 = _with_origin(np.concatenate([y2, z], axis=1))
    h1, r1, c1 = _hull_indicator(s1)
    h2, r2, c2 = _hull_indicator(s2)
    good = h1 & h2
    if lam is not None:
        good &= (r1 <= 1.0) & (r2 <= 1.0)
    good &= _outside_ball(y2, c1, r1) & _outside_ball(y1, c2, r2)
    vals = np.zeros(m)
    if not np.any(good):
        return vals
    vol = two_ball_union_volumes_batch(c1[good], r1[good], c2[good], r2[good], d)
    if lam is None:
        vals[good] = vol ** (-(2 * k + 1 - j))
    else:
        vals[good] = fx[good] ** (2 * k + 1 - j) * np.exp(-lam * vol * fx[good])
    return vals


def gamma_k_0_estimate(k: int, d: int, f: Density | None, lam: float,
                       samples: int = DEFAULT_SAMPLES, rng=None) -> Estimate:
    """gamma_k^(0)(lambda): pairs of disjoint generating subsets whose
    circumballs overlap.

    The joint term carries the union-volume exponential together with the
    indicator that neither subset's points fall inside the other's open
    circumball (both cannot be critical otherwise); the product term is
    subtracted on common random numbers.  The difference vanishes exactly
    when the balls are disjoint, so the offset z is importance-sampled
    from the ball where overlap is possible (center c1 - c2, radius
    R1 + R2).  The value may be negative: close disjoint critical pairs
    are anti-correlated by the exclusion condition.
    """
    if not 1 <= k <= d:
        raise ValueError("need 1 <= k <= d")
    rng = np.random.default_rng(0) if rng is None else rng
    omega = unit_ball_volume(d)
    pref_comb = 1.0 / math.factorial(k + 1) ** 2

    if math.isinf(lam):
        free = 2 * k + 1
        dim = d * free
        factor = sphere_area(dim) * math.gamma(free) / d * pref_comb

        def draw(r, m):
            u = _sample_sphere(r, m, dim).reshape(m, free, d)
            y1, y2, z = u[:, :k], u[:, k : 2 * k], u[:, 2 * k, :]
            h1, r1, c1 = _hull_indicator(_with_origin(y1))
            h2, r2, c2 = _hull_indicator(_with_origin(y2))
            good = h1 & h2
            vals = np.zeros(m)
            if not np.any(good):
                return vals
            zg = z[good]
            c2g = zg + c2[good]
            p1 = _with_origin(y1[good])
            p2 = np.concatenate([zg[:, None, :], zg[:, None, :] + y2[good]], axis=1)
            cross = _outside_ball(p2, c1[good], r1[good])
            cross &= _outside_ball(p1, c2g, r2[good])
            a = two_ball_union_volumes_batch(c1[good], r1[good], c2g, r2[good], d)
            b = omega * (r1[good] ** d + r2[good] ** d)
            vals[good] = np.where(cross, a ** (-free), 0.0) - b ** (-free)
            return factor * vals

        return _mc_mean(draw, samples, rng)

    if f is None:
        raise ValueError("finite lambda needs a density")
    w = (2.0**d * omega) ** (2 * k)
    pref = lam ** (2 * k + 1) * w * pref_comb

    def draw(r, m):
        x = f.sample(r, m)
        fx = f.pdf(x)
        y1 = _sample_ball(r, m, k, d)
        y2 = _sample_ball(r, m, k, d)
        zu = _sample_ball(r, m, 1, d, radius=1.0)[:, 0, :]
        h1, r1, c1 = _hull_indicator(_with_origin(y1))
        h2, r2, c2 = _hull_indicator(_with_origin(y2))
        good = h1 & h2 & (r1 <= 1.0) & (r2 <= 1.0)
        vals = np.zeros(m)
        if not np.any(good):
            return vals
        # z uniform in B(c1 - c2, R1 + R2): exactly where balls can meet
        rsum = r1[good] + r2[good]
        z = (c1[good] - c2[good]) + zu[good] * rsum[:, None]
        wz = omega * rsum**d
        c2g = z + c2[good]
        p1 = _with_origin(y1[good])
        p2 = np.concatenate([z[:, None, :], z[:, None, :] + y2[good]], axis=1)
        cross = _outside_ball(p2, c1[good], r1[good])
        cross &= _outside_ball(p1, c2g, r2[good])
        a = two_ball_union_volumes_batch(c1[good], r1[good], c2g, r2[good], d)
        b = omega * (r1[good] ** d + r2[good] ** d)
        fg = fx[good]
        diff = np.where(cross, np.exp(-lam * a * fg), 0.0) - np.exp(-lam * b * fg)
        vals[good] = fg ** (2 * k + 1) * wz * diff
        return pref * vals

    return _mc_mean(draw, samples, rng)


class NegativeVarianceEstimate(UserWarning):
    pass


@dataclass
class VarianceConstants:
    """All variance-related constants for one (k, lambda)."""

    k: int
    d: int
    lam: float
    gamma_k: Estimate
    gamma_k_j: dict  # j -> Estimate, j = 0..k
    eta_k: Estimate
    alpha_k: Estimate
    sigma2_hat: Estimate
    sigma2: Estimate
    negative_variance: bool = False


def variance_constants_estimate(k: int, d: int, f: Density | None, lam: float,
                                samples: int = DEFAULT_SAMPLES,
                                rng=None) -> VarianceConstants:
    """All constants of the variance limit for index k at intensity lam:

        sigma2_hat_k = gamma_k + sum_j gamma_k^(j)      (Poisson input)
        alpha_k      = (k+1) gamma_k - eta_k
        sigma2_k     = sigma2_hat_k - alpha_k^2         (i.i.d. input)

    A negative sigma2_k estimate is flagged, never clamped.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    g = gamma_k_estimate(k, d, f, lam, samples, rng)
    gj = {j: gamma_k_j_estimate(k, j, d, f, lam, samples, rng) for j in range(1, k + 1)}
    gj[0] = gamma_k_0_estimate(k, d, f, lam, samples, rng)
    eta = eta_k_estimate(k, d, f, lam, samples, rng)
    alpha = Estimate(
        (k + 1) * g.value - eta.value,
        math.hypot((k + 1) * g.std_err, eta.std_err),
        samples,
    )
    s2h_val = g.value + sum(e.value for e in gj.values())
    s2h_se = math.sqrt(g.std_err**2 + sum(e.std_err**2 for e in gj.values()))
    s2h = Estimate(s2h_val, s2h_se, samples)
    s2_val = s2h_val - alpha.value**2
    s2_se = math.sqrt(s2h_se**2 + (2.0 * abs(alpha.value) * alpha.std_err) ** 2)
    s2 = Estimate(s2_val, s2_se, samples)
    return VarianceConstants(
        k=k, d=d, lam=lam, gamma_k=g, gamma_k_j=gj, eta_k=eta,
        alpha_k=alpha, sigma2_hat=s2h, sigma2=s2,
        negative_variance=s2_val < 0.0,
    )


# ---------------------------------------------------------------------------
# export


def constants_table(entries: list, seed: int | None = None) -> dict:
    """JSON-ready table keyed by (constant, k, j, lambda).

    ``entries`` holds (name, k, j, lam, Estimate) tuples; j and lam may
    be None.
    """
    out = {}
    for name, k, j, lam, est in entries:
        key = f"{name}|k={k}|j={'-' if j is None else j}|lambda={lam}"
        out[key] = {
            "value": est.value,
            "std_err": est.std_err,
            "samples": est.samples,
            "seed": seed,
        }
    return out


def save_constants(entries: list, path, seed: int | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(constants_table(entries, seed), fh, indent=2, sort_keys=True)
