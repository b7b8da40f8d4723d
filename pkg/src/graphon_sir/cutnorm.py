"""Cut norm of signed step kernels, exactly and by alternating ascent.

A step kernel with n x n cell values U has cut norm

    max over S, T subsets of {1..n} of |sum_{j in S, k in T} U_jk| / n^2.

For fixed S the optimal T keeps exactly the columns whose restricted sums
share a sign, so the exact solver only enumerates S (2^n candidates) and
reads the optimum off the column sums.  The supremum over measurable sets
is attained on unions of partition cells, which is why this finite search
is exact for step kernels.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _rng
from . import graphon as _graphon

EXACT_MAX_N = 30
#: dispatch threshold: below this the exact solver is cheap (< ~50 ms)
AUTO_EXACT_N = 20
DEFAULT_RESTARTS = 64


def _values_of(w) -> np.ndarray:
    if isinstance(w, _graphon.StepGraphon):
        return w.values.astype(np.float64, copy=True)
    vals = np.asarray(w, dtype=np.float64)
    if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
        raise ValueError("cut norm needs a square cell-value matrix")
    if not np.all(np.isfinite(vals)):
        raise ValueError("cell values must be finite")
    return vals.copy()


@dataclass(frozen=True)
class CutNormResult:
    """Sandwich bounds for a cut norm, with the witnessing pair of sets."""

    lower: float
    upper: float
    exact: bool
    s_mask: np.ndarray
    t_mask: np.ndarray

    def witness_value(self, w) -> float:
        "Re-evaluate |sum over S x T| / n^2 from the stored witness."
        vals = _values_of(w)
        n = vals.shape[0]
        if not (self.s_mask.size == self.t_mask.size == n):
            raise ValueError("witness size does not match the kernel")
        return abs(vals[np.ix_(self.s_mask, self.t_mask)].sum()) / n**2


@dataclass(frozen=True)
class CutDistanceResult:
    """Permutation cut distance with the best relabeling found."""

    value: float
    permutation: tuple
    exact: bool


def _subset_sums(rows: np.ndarray) -> np.ndarray:
    """All 2^k subset sums of the given rows, in bit-pattern order."""
    k, n = rows.shape
    out = np.zeros((1 << k, n))
    for bit in range(k):
        size = 1 << bit
        out[size : 2 * size] = out[:size] + rows[bit]
    return out


def cut_norm_exact(w, _low_bits: int = 15) -> CutNormResult:
    """Enumerate all row subsets; optimal columns follow from sign selection.

    Cost grows as 2^n; sizes near the n = 30 ceiling take minutes.  The
    subset space is swept in blocks of 2^_low_bits vectorized candidates.
    """
    vals = _values_of(w)
    n = vals.shape[0]
    if n > EXACT_MAX_N:
        raise ValueError(
            f"exact cut norm enumerates 2^n subsets and n={n} exceeds {EXACT_MAX_N}; "
            "use cut_norm_heuristic"
        )
    low_bits = min(n, _low_bits)
    lows = _subset_sums(vals[:low_bits])
    high_rows = vals[low_bits:]
    highs = _subset_sums(high_rows) if high_rows.shape[0] else np.zeros((1, n))

    best = -1.0
    best_high = best_low = 0
    best_positive = True
    for h in range(highs.shape[0]):
        sums = highs[h] + lows
        pos = np.maximum(sums, 0.0).sum(axis=1)
        neg = np.maximum(-sums, 0.0).sum(axis=1)
        ip, iv = int(np.argmax(pos)), int(np.argmax(neg))
        if pos[ip] >= best:
            best, best_high, best_low, best_positive = float(pos[ip]), h, ip, True
        if neg[iv] > best:
            best, best_high, best_low, best_positive = float(neg[iv]), h, iv, False

    bits = best_high << low_bits | best_low
    s_mask = np.array([(bits >> j) & 1 == 1 for j in range(n)])
    col = vals[s_mask].sum(axis=0) if s_mask.any() else np.zeros(n)
    t_mask = col > 0 if best_positive else col < 0
    value = best / n**2
    return CutNormResult(value, value, True, s_mask, t_mask)


def _indicator_ascent(vals: np.ndarray, s0: np.ndarray, max_iter: int = 100):
    """Alternate {rows given cols, cols given rows} until a fixed point.

    At the fixed point no single-index flip on either side can improve,
    because each half-step re-optimizes one side completely.
    """
    s = s0.copy()
    t = np.zeros(s.size, dtype=bool)
    for _ in range(max_iter):
        col = s @ vals
        t_new = col > 0
        row = vals @ t_new
        s_new = row > 0
        if np.array_equal(s_new, s) and np.array_equal(t_new, t):
            break
        s, t = s_new, t_new
    value = float(vals[np.ix_(s, t)].sum()) if s.any() and t.any() else 0.0
    return value, s, t


def _sign_ascent(vals: np.ndarray, g0: np.ndarray, max_iter: int = 100) -> float:
    g = g0.copy()
    f = np.where(vals @ g >= 0, 1.0, -1.0)
    for _ in range(max_iter):
        g_new = np.where(vals.T @ f >= 0, 1.0, -1.0)
        f_new = np.where(vals @ g_new >= 0, 1.0, -1.0)
        if np.array_equal(f_new, f) and np.array_equal(g_new, g):
            break
        f, g = f_new, g_new
    return abs(float(f @ vals @ g))


def cut_norm_heuristic(w, restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> CutNormResult:
    """Certified-by-witness lower bound and a bilinear-ascent upper estimate.

    ``lower`` is always achieved by the returned (S, T).  ``upper`` estimates
    the [-1,1]-bilinear supremum, which dominates the cut norm and exceeds it
    by at most a factor 4; it is clamped below by ``lower`` so the sandwich
    ordering always holds.
    """
    vals = _values_of(w)
    n = vals.shape[0]
    rng = _rng.generator(seed, "cutnorm:heuristic")
    starts = [np.ones(n, dtype=bool)]
    starts += [rng.random(n) < 0.5 for _ in range(max(restarts - 1, 0))]

    best = 0.0
    s_best = np.zeros(n, dtype=bool)
    t_best = np.zeros(n, dtype=bool)
    for s0 in starts:
        for signed in (vals, -vals):
            value, s, t = _indicator_ascent(signed, s0)
            if value > best:
                best, s_best, t_best = value, s, t

    bilinear = 0.0
    for s0 in starts:
        g0 = np.where(s0, 1.0, -1.0)
        bilinear = max(bilinear, _sign_ascent(vals, g0))

    lower = best / n**2
    upper = max(bilinear / n**2, lower)
    return CutNormResult(lower, upper, False, s_best, t_best)


def cut_norm(w, seed: int = 0) -> CutNormResult:
    """Exact for small kernels, alternating-ascent bounds otherwise."""
    vals = _values_of(w)
    if vals.shape[0] <= AUTO_EXACT_N:
        return cut_norm_exact(vals)
    return cut_norm_heuristic(vals, seed=seed)


# ---------------------------------------------------------------------------
# permutation cut distance
# ---------------------------------------------------------------------------

EXACT_PERMUTATION_N = 10


def _permuted(vals: np.ndarray, perm) -> np.ndarray:
    idx = np.asarray(perm)
    return vals[np.ix_(idx, idx)]


def _alignment_candidates(vu: np.ndarray, vw: np.ndarray) -> list:
    n = vu.shape[0]
    identity = np.arange(n)
    order_u = np.argsort(vu.sum(axis=1), kind="stable")
    order_w = np.argsort(vw.sum(axis=1), kind="stable")
    # perm such that w reordered by it matches u's degree ranking
    degree_sorted = np.empty(n, dtype=int)
    degree_sorted[order_u] = order_w
    return [identity, degree_sorted]


def cut_distance_permutation(u, w, exact: bool | None = None, seed: int = 0) -> CutDistanceResult:
    """Minimum cut norm of U - W^phi over vertex relabelings phi of W.

    Relabelings stand in for the measure-preserving maps of the continuum
    distance.  Exhaustive search (n <= 10) when ``exact`` is requested or the
    size allows; otherwise degree-sorted alignment plus pairwise-swap descent.
    """
    vu, vw = _values_of(u), _values_of(w)
    n = vu.shape[0]
    if vw.shape[0] != n:
        raise ValueError("cut distance needs kernels on the same partition")
    if exact is True and n > EXACT_PERMUTATION_N:
        raise ValueError(
            f"exact permutation search is limited to n <= {EXACT_PERMUTATION_N}; got n={n}"
        )

    def norm_of(diff: np.ndarray) -> float:
        if n <= AUTO_EXACT_N:
            return cut_norm_exact(diff).lower
        return cut_norm_heuristic(diff, restarts=16, seed=seed).lower

    best_val = np.inf
    best_perm = None
    for cand in _alignment_candidates(vu, vw):
        val = norm_of(vu - _permuted(vw, cand))
        if val < best_val:
            best_val, best_perm = val, tuple(int(j) for j in cand)
    if best_val == 0.0:
        return CutDistanceResult(0.0, best_perm, True)

    if exact is True or (exact is None and n <= EXACT_PERMUTATION_N):
        for perm in itertools.permutations(range(n)):
            val = norm_of(vu - _permuted(vw, perm))
            if val < best_val:
                best_val, best_perm = val, perm
                if val == 0.0:
                    break
        return CutDistanceResult(float(best_val), best_perm, True)

    # pairwise-swap descent from the best candidate alignment
    perm = np.array(best_perm)
    improved = True
    while improved:
        improved = False
        for a in range(n - 1):
            for b in range(a + 1, n):
                perm[a], perm[b] = perm[b], perm[a]
                val = norm_of(vu - _permuted(vw, perm))
                if val < best_val - 1e-15:
                    best_val = val
                    improved = True
                else:
                    perm[a], perm[b] = perm[b], perm[a]
        if best_val == 0.0:
            break
    return CutDistanceResult(float(best_val), tuple(int(j) for j in perm), False)


# ---------------------------------------------------------------------------
# time-integrated distance
# ---------------------------------------------------------------------------


def _segments_of(w, t_end: float) -> list:
    """Normalize to [(t_start, graphon-at-that-time)] covering [0, t_end)."""
    if isinstance(w, _graphon.TimeSchedule):
        if t_end > w.t_end + 1e-12:
            raise ValueError(f"schedule covers [0, {w.t_end}] but t_end={t_end} requested")
        return [(ts, g) for ts, g in w.segments if ts < t_end]
    return [(0.0, w)]


def time_integrated_cut_distance(
    wn,
    w,
    t_end: float,
    refine: int = 4,
    seed: int = 0,
) -> float:
    """Integral over [0, t_end] of the cut norm of (Wn(t) - W(t)).

    Both sides are restricted to a common partition with ``refine`` cells per
    Wn-cell: the step side refines exactly, the limit side is cell-averaged.
    Both inputs are piecewise constant in time, so the time integral is an
    exact sum over the union of their switch intervals.
    """
    if t_end <= 0.0:
        raise ValueError("t_end must be positive")
    if refine < 1:
        raise ValueError("refine must be >= 1")
    wn_segs = _segments_of(wn, t_end)
    w_segs = _segments_of(w, t_end)
    steps = [g for _, g in wn_segs]
    if not all(isinstance(g, _graphon.StepGraphon) for g in steps):
        raise ValueError("the discrete side must consist of step kernels")
    n = steps[0].n
    if any(g.n != n for g in steps):
        raise ValueError("all step kernels in the schedule must share one resolution")
    m = refine * n

    cuts = sorted({0.0, t_end} | {ts for ts, _ in wn_segs} | {ts for ts, _ in w_segs})
    cuts = [t for t in cuts if 0.0 <= t <= t_end]
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        if b <= a:
            continue
        gn = next(g for ts, g in reversed(wn_segs) if ts <= a)
        gw = next(g for ts, g in reversed(w_segs) if ts <= a)
        diff = gn.cell_average_grid(m) - gw.cell_average_grid(m, a)
        total += (b - a) * cut_norm(diff, seed=seed).lower
    return total
