"""Enumeration of critical points of the distance function of a cloud.

A subset Y of k+1 points (1 <= k <= d) generates an index-k critical
point iff its circumcenter lies strictly inside the open convex hull of
Y (CP1) and no cloud point lies strictly inside the open circumball
(CP2).  Radius-restricted enumeration additionally requires the
circumradius to be at most epsilon (CP3).  Minima (index 0) are the
cloud points themselves.

Three enumeration paths produce identical results:

* ``enumerate_brute``   -- exhaustive over all (k+1)-subsets; the oracle.
* ``enumerate_grid``    -- candidate subsets pruned by a uniform grid
  (any subset with circumradius <= eps has diameter <= 2 eps).
* Delaunay pruning      -- any subset whose open circumball is empty is
  a face of the Delaunay complex, so for large clouds candidates can be
  drawn from Delaunay faces instead (d <= 3, via scipy/Qhull).

CP2 is verified against the full cloud in every path, so the pruning
strategy only affects speed, never the result.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, QhullError, cKDTree

from .geometry import TAU_GEOM, TAU_HULL, affine_rank, circumspheres_batch
from .pointproc import PointCloud

GLOBAL = math.inf

# Quantization step for deduplicating coincident critical points.
DEDUP_QUANTUM = 1e-7

BRUTE_CAP_RESTRICTED = 300
BRUTE_CAP_GLOBAL = 25
GLOBAL_CAP = 200_000


class OracleCapExceeded(ValueError):
    pass


class GlobalCapExceeded(ValueError):
    pass


class CliqueBudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class CriticalPoint:
    index: int
    center: np.ndarray
    value: float
    generators: tuple


@dataclass
class CriticalCounts:
    by_index: np.ndarray
    radius: float  # eps, or math.inf for global counts
    n: int

    def alternating_sum(self) -> int:
        signs = (-1) ** np.arange(len(self.by_index))
        return int(np.sum(signs * self.by_index))


# ---------------------------------------------------------------------------
# uniform grid candidate generation


def grid_pairs(points: np.ndarray, rmax: float, cell: float | None = None):
    """Index pairs (i, j), i < j, with ||x_i - x_j|| <= rmax.

    Points are bucketed into a uniform grid (cell side rmax/2 by
    default, i.e. eps when rmax = 2 eps); candidate pairs are drawn from
    cells within the matching Chebyshev neighborhood and then filtered
    by exact distance.
    """
    points = np.asarray(points, dtype=float)
    n, d = points.shape
    empty = np.empty((0, 2), dtype=np.int64)
    if n < 2 or rmax <= 0:
        return empty
    if cell is None:
        cell = rmax / 2.0
    cidx = np.floor(points / cell).astype(np.int64)
    cidx -= cidx.min(axis=0)
    dims = cidx.max(axis=0) + 1
    strides = np.concatenate([[1], np.cumprod(dims[:-1])]).astype(np.int64)
    key = cidx @ strides
    order = np.argsort(key, kind="stable")
    skey = key[order]
    ukeys, starts, counts = np.unique(skey, return_index=True, return_counts=True)
    urep = cidx[order[starts]]

    out_i, out_j = [], []

    # within-cell pairs
    multi = np.nonzero(counts >= 2)[0]
    for c in multi:
        members = order[starts[c] : starts[c] + counts[c]]
        ii, jj = np.triu_indices(len(members), k=1)
        out_i.append(members[ii])
        out_j.append(members[jj])

    # cross-cell pairs: lexicographically positive offsets only, so each
    # unordered cell pair is visited once
    q = int(np.ceil(rmax / cell - 1e-12))
    offsets = [
        o
        for o in itertools.product(range(-q, q + 1), repeat=d)
        if next((v for v in o if v != 0), 0) > 0
    ]
    for o in offsets:
        nc = urep + np.asarray(o, dtype=np.int64)
        valid = np.all((nc >= 0) & (nc < dims), axis=1)
        if not np.any(valid):
            continue
        nkey = nc[valid] @ strides
        pos = np.searchsorted(ukeys, nkey)
        pos = np.minimum(pos, len(ukeys) - 1)
        found = ukeys[pos] == nkey
        a_cells = np.nonzero(valid)[0][found]
        b_cells = pos[found]
        if len(a_cells) == 0:
            continue
        la, lb = counts[a_cells], counts[b_cells]
        tot = la * lb
        total = int(tot.sum())
        if total == 0:
            continue
        pair_id = np.repeat(np.arange(len(a_cells)), tot)
        base = np.concatenate([[0], np.cumsum(tot)[:-1]])
        within = np.arange(total) - base[pair_id]
        ai = within // lb[pair_id]
        bi = within % lb[pair_id]
        out_i.append(order[starts[a_cells][pair_id] + ai])
        out_j.append(order[starts[b_cells][pair_id] + bi])

    if not out_i:
        return empty
    i = np.concatenate(out_i)
    j = np.concatenate(out_j)
    keep = np.linalg.norm(points[i] - points[j], axis=1) <= rmax
    i, j = i[keep], j[keep]
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    return np.stack([lo, hi], axis=1)


def expand_clique_level(simplices: np.ndarray, higher_nbrs: list,
                        max_new: int | None = None) -> np.ndarray:
    """Expand j-cliques to (j+1)-cliques of the pair graph.

    ``higher_nbrs[v]`` is the set of neighbors of v with index > v;
    candidates for extending a clique are common higher neighbors of
    all its vertices beyond the last one.  ``max_new`` aborts a
    combinatorial blow-up before it exhausts memory.
    """
    if len(simplices) == 0:
        return np.empty((0, simplices.shape[1] + 1), dtype=np.int64)
    rows = []
    for simplex in simplices:
        common = higher_nbrs[simplex[0]]
        for v in simplex[1:]:
            common = common & higher_nbrs[v]
            if not common:
                break
        last = simplex[-1]
        for w in common:
            if w > last:
                rows.append((*simplex, w))
        if max_new is not None and len(rows) > max_new:
            raise CliqueBudgetExceeded(
                f"clique expansion produced more than {max_new} simplices"
            )
    if not rows:
        return np.empty((0, simplices.shape[1] + 1), dtype=np.int64)
    return np.asarray(rows, dtype=np.int64)


def clique_subsets(n: int, pairs: np.ndarray, max_size: int) -> dict:
    """All cliques of the pair graph, by size, up to max_size vertices."""
    out = {2: pairs}
    higher = [set() for _ in range(n)]
    for i, j in pairs:
        higher[int(i)].add(int(j))
    level = pairs
    for size in range(3, max_size + 1):
        level = expand_clique_level(level, higher)
        out[size] = level
        if len(level) == 0:
            break
    return out


def delaunay_subsets(points: np.ndarray, k_max: int) -> dict:
    """Candidate (k+1)-subsets from the faces of the Delaunay complex."""
    tri = Delaunay(points, qhull_options="QJ Pp")
    cells = np.sort(tri.simplices, axis=1)
    out = {}
    for k in range(1, k_max + 1):
        size = k + 1
        if size > cells.shape[1]:
            out[size] = np.empty((0, size), dtype=np.int64)
            continue
        faces = []
        for combo in itertools.combinations(range(cells.shape[1]), size):
            faces.append(cells[:, combo])
        allf = np.sort(np.concatenate(faces, axis=0), axis=1)
        out[size] = np.unique(allf, axis=0).astype(np.int64)
    return out


# ---------------------------------------------------------------------------
# candidate evaluation


@dataclass
class _Candidate:
    k: int
    center: np.ndarray
    value: float
    generators: tuple
    strict: bool


def _evaluate_batch(points, subsets, eps, tree, keep_weak=True):
    """Apply CP1-CP3 to an (m, k+1) array of candidate subsets.

    Returns passing candidates (CP2, CP3 and at least the relaxed hull
    test); ``strict`` marks genuine CP1 passes, relaxed-only passes are
    retained for the cospherical tie rule.
    """
    subsets = np.asarray(subsets, dtype=np.int64)
    if subsets.size == 0:
        return []
    centers, radii, bary, ok = circumspheres_batch(points[subsets])
    strict = ok & np.all(bary > TAU_HULL, axis=1)
    weak = ok & np.all(bary > -TAU_GEOM, axis=1)
    mask = weak if keep_weak else strict
    if eps is not None and np.isfinite(eps):
        mask = mask & (radii <= eps + TAU_GEOM)
    idx = np.nonzero(mask)[0]
    if len(idx) == 0:
        return []
    # CP2: the nearest cloud point to the center must be no closer than
    # R - tau (the generators themselves lie at distance exactly R).
    dmin, _ = tree.query(centers[idx], k=1)
    cp2 = dmin >= radii[idx] - TAU_GEOM
    idx = idx[cp2]
    return [
        _Candidate(
            k=subsets.shape[1] - 1,
            center=centers[i],
            value=float(radii[i]),
            generators=tuple(int(v) for v in subsets[i]),
            strict=bool(strict[i]),
        )
        for i in idx
    ]


def _resolve_ties(points: np.ndarray, candidates: list) -> list:
    """Collapse cospherical degeneracies.

    Candidates are grouped by quantized (center, value).  A group emits
    a single critical point iff some member passes the strict open-hull
    test; degenerate groups (several generating subsets sharing one
    center) emit one point whose index is the affine dimension of the
    union of the generators.
    """
    groups: dict = {}
    for cand in candidates:
        qc = tuple(np.round(cand.center / DEDUP_QUANTUM).astype(np.int64))
        qv = int(round(cand.value / DEDUP_QUANTUM))
        groups.setdefault((qc, qv), []).append(cand)
    out = []
    for members in groups.values():
        strict_members = [c for c in members if c.strict]
        if not strict_members:
            continue
        if len(members) == 1:
            c = members[0]
            out.append(CriticalPoint(c.k, c.center.copy(), c.value, c.generators))
            continue
        union = sorted(set(itertools.chain.from_iterable(m.generators for m in members)))
        index = affine_rank(points[union])
        rep = strict_members[0]
        out.append(CriticalPoint(index, rep.center.copy(), rep.value, tuple(union)))
    out.sort(key=lambda c: (c.index, c.value, c.generators))
    return out


def _minima(points: np.ndarray) -> list:
    return [
        CriticalPoint(0, points[i].copy(), 0.0, (i,)) for i in range(len(points))
    ]


def _as_points(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    return np.asarray(cloud, dtype=float)


def is_generating(generators, cloud, eps=GLOBAL) -> bool:
    """CP1 + CP2 (+ CP3 unless eps is GLOBAL) for one subset of indices."""
    points = _as_points(cloud)
    subset = np.asarray(sorted(int(i) for i in generators), dtype=np.int64)
    if len(set(subset)) != len(subset):
        raise ValueError("generator indices must be distinct")
    tree = cKDTree(points)
    e = None if eps is None or math.isinf(eps) else float(eps)
    found = _evaluate_batch(points, subset[None, :], e, tree, keep_weak=False)
    return len(found) == 1


# ---------------------------------------------------------------------------
# enumeration paths


def enumerate_brute(cloud, eps=GLOBAL, k_max=None, cap=None):
    """Exhaustive oracle over all (k+1)-subsets, 1 <= k <= k_max."""
    points = _as_points(cloud)
    n, d = points.shape if points.size else (len(points), 0)
    if n == 0:
        return []
    d = points.shape[1]
    k_max = d if k_max is None else min(k_max, d)
    is_global = eps is None or math.isinf(eps)
    limit = cap if cap is not None else (
        BRUTE_CAP_GLOBAL if is_global else BRUTE_CAP_RESTRICTED
    )
    if n > limit:
        raise OracleCapExceeded(f"n={n} exceeds brute-force cap {limit}")
    e = None if is_global else float(eps)
    tree = cKDTree(points)
    candidates = []
    for k in range(1, k_max + 1):
        combos = itertools.combinations(range(n), k + 1)
        while True:
            chunk = np.array(list(itertools.islice(combos, 100_000)), dtype=np.int64)
            if chunk.size == 0:
                break
            candidates.extend(_evaluate_batch(points, chunk, e, tree))
    return _minima(points) + _resolve_ties(points, candidates)


def _grid_candidates(points, eps, k_max):
    pairs = grid_pairs(points, 2.0 * eps + 2.0 * TAU_GEOM, cell=eps)
    return clique_subsets(len(points), pairs, k_max + 1)


def enumerate_grid(cloud, eps, k_max=None, candidates="auto"):
    """Radius-restricted enumeration, identical in output to the oracle.

    ``candidates`` picks the pruning strategy: "grid" (uniform grid,
    subsets of diameter <= 2 eps), "delaunay" (faces of the Delaunay
    complex, d <= 3), or "auto".
    """
    points = _as_points(cloud)
    if len(points) == 0:
        return []
    if eps is not None and math.isinf(eps):
        eps = None
    if eps is not None and eps <= 0:
        raise ValueError("eps must be > 0")
    d = points.shape[1]
    k_max = d if k_max is None else min(k_max, d)
    strategy = _pick_strategy(points, eps, candidates)
    tree = cKDTree(points)
    if strategy == "delaunay":
        subsets = delaunay_subsets(points, k_max)
    else:
        e = eps if eps is not None else _global_radius_bound(points, tree)
        subsets = _grid_candidates(points, e, k_max)
    cands = []
    for size, arr in subsets.items():
        if size - 1 > k_max or len(arr) == 0:
            continue
        cands.extend(_evaluate_batch(points, arr, eps, tree))
    return _minima(points) + _resolve_ties(points, cands)


def _pick_strategy(points, eps, candidates) -> str:
    if candidates in ("grid", "delaunay"):
        return candidates
    n, d = points.shape
    if d > 3 or n <= d + 2:
        return "grid"
    if eps is None:
        return "delaunay" if n > 40 else "grid"
    # rough expected pair count under a uniform-ish spread
    span = points.max(axis=0) - points.min(axis=0)
    vol = float(np.prod(np.maximum(span, 1e-12)))
    from .geometry import unit_ball_volume

    est_pairs = 0.5 * n * n * unit_ball_volume(d) * (2 * eps) ** d / vol
    return "delaunay" if est_pairs > 20.0 * n and n > 200 else "grid"


def _global_radius_bound(points, tree) -> float:
    """Upper bound on any critical value: the bounding-box diameter."""
    span = points.max(axis=0) - points.min(axis=0)
    return float(np.linalg.norm(span)) + TAU_GEOM


def enumerate_global(cloud, k_max=None, cap=GLOBAL_CAP, candidates="auto"):
    """All critical points, no radius restriction."""
    points = _as_points(cloud)
    if len(points) > cap:
        raise GlobalCapExceeded(f"n={len(points)} exceeds global cap {cap}")
    return enumerate_grid(cloud, None, k_max=k_max, candidates=candidates)


def counts(critical_points, n: int, eps: float, d: int | None = None) -> CriticalCounts:
    """Tally critical points by index; index 0 is always the n minima."""
    if d is None:
        d = max((c.index for c in critical_points), default=1)
    by_index = np.zeros(d + 1, dtype=np.int64)
    by_index[0] = n
    for c in critical_points:
        if c.index >= 1:
            by_index[c.index] += 1
    return CriticalCounts(by_index, eps, n)


def verify_critical_point(cloud, cp: CriticalPoint, tol: float = 1e-6) -> bool:
    """Independent post-hoc audit of one emitted critical point."""
    from .geometry import circumsphere, general_position, in_open_convex_hull

    points = _as_points(cloud)
    gen = np.asarray(cp.generators, dtype=np.int64)
    if cp.index == 0:
        return len(gen) == 1 and cp.value == 0.0
    pts = points[gen]
    if len(gen) != cp.index + 1:
        # degenerate merged point: only check center/value consistency
        dists = np.linalg.norm(pts - cp.center, axis=1)
        return bool(np.all(np.abs(dists - cp.value) < tol))
    if not general_position(pts):
        return False
    sph = circumsphere(pts)
    if np.linalg.norm(sph.center - cp.center) > tol or abs(sph.radius - cp.value) > tol:
        return False
    if not in_open_convex_hull(sph.center, pts):
        return False
    others = np.delete(points, gen, axis=0)
    if len(others):
        dmin = np.min(np.linalg.norm(others - sph.center, axis=1))
        if dmin < sph.radius - TAU_GEOM:
            return False
    return True


# ---------------------------------------------------------------------------
# fast counting paths for experiments


def count_index1(points: np.ndarray, eps: float, tree: cKDTree | None = None) -> int:
    """Number of index-1 critical points with value <= eps.

    For k = 1 the circumcenter is the midpoint (CP1 always holds), so
    the whole check vectorizes: pairs at distance <= 2 eps whose
    midpoint has no cloud point strictly inside the diametral ball.
    """
    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        return 0
    if tree is None:
        tree = cKDTree(points)
    pairs = tree.query_pairs(2.0 * eps + 2.0 * TAU_GEOM, output_type="ndarray")
    if len(pairs) == 0:
        return 0
    a = points[pairs[:, 0]]
    b = points[pairs[:, 1]]
    radii = 0.5 * np.linalg.norm(a - b, axis=1)
    keep = radii <= eps + TAU_GEOM
    if not np.any(keep):
        return 0
    mids = 0.5 * (a[keep] + b[keep])
    dmin, _ = tree.query(mids, k=1, workers=-1)
    return int(np.sum(dmin >= radii[keep] - TAU_GEOM))


def critical_values_by_index(points: np.ndarray, k_max: int | None = None,
                             candidates: str = "auto") -> dict:
    """Sorted critical values per index from a global enumeration.

    One enumeration serves every radius: N_k(eps) is the number of
    values <= eps and the global count is the array length.
    """
    cps = enumerate_global(points, k_max=k_max, candidates=candidates)
    points = _as_points(points)
    d = points.shape[1]
    k_max = d if k_max is None else min(k_max, d)
    out = {k: [] for k in range(1, k_max + 1)}
    for c in cps:
        if 1 <= c.index <= k_max:
            out[c.index].append(c.value)
    return {k: np.sort(np.asarray(v)) for k, v in out.items()}


# -- serialization ------------------------------------------------------------

def save_critical_csv(critical_points, path) -> None:
    """CSV: index k, value R, center coords..., generators joined by '|'."""
    with open(path, "w") as fh:
        for c in critical_points:
            coords = ",".join(repr(float(v)) for v in np.atleast_1d(c.center))
            gens = "|".join(str(g) for g in c.generators)
            fh.write(f"{c.index},{c.value!r},{coords},{gens}\n")


def load_critical_csv(path) -> list:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            k = int(fields[0])
            value = float(fields[1])
            gens = tuple(int(g) for g in fields[-1].split("|"))
            center = np.asarray([float(v) for v in fields[2:-1]])
            out.append(CriticalPoint(k, center, value, gens))
    return out
