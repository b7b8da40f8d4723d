"""Samplers that turn a kernel into an adjacency matrix.

Four families: deterministic cell averages (the Galerkin matrix), weighted
point evaluation, Bernoulli edges, and the sparse n^alpha-valued variants
(scaled, trimmed comparator, averaged).  Random samplers share one sorted
point draw per matrix and key every stream by (seed, role) so results are
reproducible and independent of fill order.  Also provides per-node cell
averages of coefficient fields (infection/recovery rates).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _rng
from .graphon import (
    SINGULAR_CLAMP,
    Graphon,
    _adaptive_line_quad,
    _cell_edges,
    _row_gl,
    trim,
)
from .graphs import AdjacencyMatrix

QUAD_TOL = 1e-10


@dataclass(frozen=True)
class SamplePoints:
    """One shared draw of sorted i.i.d. uniform points in (0,1)."""

    n: int
    x: np.ndarray
    seed: int

    @classmethod
    def draw(cls, n: int, seed: int) -> "SamplePoints":
        rng = _rng.generator(seed, "sampling:points")
        x = np.sort(rng.uniform(0.0, 1.0, size=n))
        # keep singular kernels evaluable at the sample points
        x = np.clip(x, SINGULAR_CLAMP, 1.0 - SINGULAR_CLAMP)
        return cls(n=n, x=x, seed=seed)


def _require_static(w: Graphon, scheme: str) -> None:
    if w.time_dependent:
        raise ValueError(
            f"{scheme} sampling requires a time-independent kernel; "
            "got a time schedule"
        )


def _pair_uniforms(n: int, seed: int, scheme: str) -> np.ndarray:
    """Upper-triangle pair coins in canonical (row-major) order."""
    rng = _rng.generator(seed, f"sampling:{scheme}:pairs")
    return rng.random(n * (n - 1) // 2)


def _symmetrize_from_upper(upper_vals: np.ndarray, n: int, dtype=np.float64) -> np.ndarray:
    a = np.zeros((n, n), dtype=dtype)
    iu = np.triu_indices(n, k=1)
    a[iu] = upper_vals
    a = a + a.T
    return a


# ---------------------------------------------------------------------------
# schemes
# ---------------------------------------------------------------------------


def galerkin(w: Graphon, t: float, n: int) -> AdjacencyMatrix:
    """Deterministic matrix of cell averages of W(t,.,.)."""
    if n < 1:
        raise ValueError("galerkin size must be >= 1")
    grid = w.cell_average_grid(n, t)
    return AdjacencyMatrix(grid, {"kind": "galerkin", "n": n, "t": t})


def weighted_random(w: Graphon, n: int, seed: int) -> AdjacencyMatrix:
    """A_jk = W(x_j, x_k) on shared sorted points; diagonal kept."""
    _require_static(w, "weighted_random")
    pts = SamplePoints.draw(n, seed)
    a = np.asarray(w.eval(pts.x[:, None], pts.x[None, :]), dtype=np.float64)
    return AdjacencyMatrix(a, {"kind": "weighted_random", "n": n, "seed": seed})


def bernoulli_random(w: Graphon, n: int, seed: int) -> AdjacencyMatrix:
    """Simple graph with independent edges P(j~k) = W(x_j, x_k)."""
    _require_static(w, "bernoulli_random")
    pts = SamplePoints.draw(n, seed)
    probs = np.asarray(w.eval(pts.x[:, None], pts.x[None, :]), dtype=np.float64)
    iu = np.triu_indices(n, k=1)
    upper = probs[iu]
    bad = np.nonzero(upper > 1.0)[0]
    if len(bad):
        j, k = iu[0][bad[0]] + 1, iu[1][bad[0]] + 1
        raise ValueError(
            f"bernoulli_random needs W <= 1; W(x_{j}, x_{k}) = {upper[bad[0]]!r}"
        )
    coins = _pair_uniforms(n, seed, "bernoulli")
    a = _symmetrize_from_upper((coins < upper).astype(np.float64), n)
    return AdjacencyMatrix(a, {"kind": "bernoulli_random", "n": n, "seed": seed})


def scaled_sparse(w: Graphon, n: int, alpha: float, seed: int) -> AdjacencyMatrix:
    """Sparse-regime sample: edges carry weight n^alpha and appear with
    probability min(1, n^-alpha W(x_j, x_k))."""
    _require_static(w, "scaled_sparse")
    if not 0.0 < alpha < 1.0:
        raise ValueError("sparse exponent alpha must lie in (0,1)")
    pts = SamplePoints.draw(n, seed)
    vals = np.asarray(w.eval(pts.x[:, None], pts.x[None, :]), dtype=np.float64)
    iu = np.triu_indices(n, k=1)
    probs = np.minimum(1.0, float(n) ** (-alpha) * vals[iu])
    coins = _pair_uniforms(n, seed, "scaled_sparse")
    upper = np.where(coins < probs, float(n) ** alpha, 0.0)
    a = _symmetrize_from_upper(upper, n)
    return AdjacencyMatrix(
        a, {"kind": "scaled_sparse", "n": n, "alpha": alpha, "seed": seed}
    )


def trimmed_weighted(w: Graphon, n: int, alpha: float, seed: int) -> AdjacencyMatrix:
    """Deterministic-in-value comparator A_jk = min(n^alpha, W(x_j, x_k))
    on the same shared points a weighted_random draw would use."""
    _require_static(w, "trimmed_weighted")
    if not 0.0 < alpha < 1.0:
        raise ValueError("sparse exponent alpha must lie in (0,1)")
    pts = SamplePoints.draw(n, seed)
    vals = np.asarray(w.eval(pts.x[:, None], pts.x[None, :]), dtype=np.float64)
    a = np.minimum(float(n) ** alpha, vals)
    return AdjacencyMatrix(
        a, {"kind": "trimmed_weighted", "n": n, "alpha": alpha, "seed": seed}
    )


def averaged_random(w: Graphon, n: int, alpha: float, seed: int) -> AdjacencyMatrix:
    """Sparse Bernoulli sample driven by cell averages of the capped
    kernel min(1, n^-alpha W) instead of point evaluations."""
    _require_static(w, "averaged_random")
    if not 0.0 < alpha < 1.0:
        raise ValueError("sparse exponent alpha must lie in (0,1)")
    probs = trim(w, n, alpha, mode="density").cell_average_grid(n)
    iu = np.triu_indices(n, k=1)
    coins = _pair_uniforms(n, seed, "averaged")
    upper = np.where(coins < probs[iu], float(n) ** alpha, 0.0)
    a = _symmetrize_from_upper(upper, n)
    return AdjacencyMatrix(
        a, {"kind": "averaged_random", "n": n, "alpha": alpha, "seed": seed}
    )


SCHEMES = {
    "galerkin": galerkin,
    "weighted_random": weighted_random,
    "bernoulli_random": bernoulli_random,
    "scaled_sparse": scaled_sparse,
    "trimmed_weighted": trimmed_weighted,
    "averaged_random": averaged_random,
}

_ALPHA_SCHEMES = ("scaled_sparse", "trimmed_weighted", "averaged_random")


def sample_matrix(
    w: Graphon,
    scheme: str,
    n: int,
    alpha: float | None = None,
    seed: int | None = None,
    t: float = 0.0,
) -> AdjacencyMatrix:
    """Uniform entry point: dispatch on scheme name with validated options.

    ``alpha`` is required by the sparse schemes and rejected elsewhere;
    ``seed`` is required by every random scheme and rejected for galerkin
    (which instead honours the evaluation time ``t``).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown sampling scheme {scheme!r}; use one of {sorted(SCHEMES)}")
    needs_alpha = scheme in _ALPHA_SCHEMES
    if needs_alpha and alpha is None:
        raise ValueError(f"scheme {scheme!r} requires alpha")
    if not needs_alpha and alpha is not None:
        raise ValueError(f"scheme {scheme!r} does not take alpha")
    if scheme == "galerkin":
        if seed is not None:
            raise ValueError("galerkin sampling is deterministic and takes no seed")
        return galerkin(w, t, n)
    if seed is None:
        raise ValueError(f"scheme {scheme!r} requires a seed")
    if scheme == "weighted_random":
        return weighted_random(w, n, seed)
    if scheme == "bernoulli_random":
        return bernoulli_random(w, n, seed)
    return SCHEMES[scheme](w, n, alpha, seed)


# ---------------------------------------------------------------------------
# coefficient fields
# ---------------------------------------------------------------------------


def _cell_averages_of(profile, n: int) -> np.ndarray:
    """Cell averages of a scalar profile over the uniform partition.

    The profile may be a number (constant field) or a vectorized callable
    of x on (0,1).
    """
    if np.isscalar(profile):
        return np.full(n, float(profile))
    est16 = _row_gl(profile, n, 16)
    vals = _row_gl(profile, n, 32)
    bad = np.abs(vals - est16) > QUAD_TOL / n
    if np.any(bad):
        a, b = _cell_edges(n)
        for j in np.nonzero(bad)[0]:
            vals[j] = _adaptive_line_quad(profile, a[j], b[j], tol=QUAD_TOL / n)
    return n * vals


class NodeField:
    """Per-node coefficient values, piecewise constant in time.

    segments: list of (t_start, profile); the profile active on
    [t_start, next start) is its cell-average vector.  Right-continuous,
    like the kernel time schedules.
    """

    def __init__(self, spec, n: int):
        if isinstance(spec, (list, tuple)) and spec and isinstance(spec[0], (list, tuple)):
            segments = [(float(ts), p) for ts, p in spec]
        else:
            segments = [(0.0, spec)]
        starts = [ts for ts, _ in segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("coefficient switch times must be strictly increasing")
        self.n = n
        self.switch_times = tuple(starts)
        self._starts = np.array(starts)
        self._vectors = [_cell_averages_of(p, n) for _, p in segments]
        for vec in self._vectors:
            if np.any(vec < 0.0):
                raise ValueError("coefficient fields must be nonnegative")

    def values(self, t: float) -> np.ndarray:
        idx = int(np.searchsorted(self._starts, t, side="right")) - 1
        if idx < 0:
            raise ValueError(f"coefficient field queried before its start: t={t}")
        return self._vectors[idx]

    @property
    def constant_in_time(self) -> bool:
        return len(self._vectors) == 1


@dataclass(frozen=True)
class CoefficientField:
    """Infection and recovery coefficients averaged to n nodes."""

    beta: NodeField
    gamma: NodeField

    @property
    def n(self) -> int:
        return self.beta.n


def coefficient_averages(beta, gamma, n: int) -> CoefficientField:
    """Average coefficient profiles over the uniform n-partition.

    Each of beta/gamma may be a constant, a vectorized callable of x, or a
    list of (t_start, constant-or-callable) pairs for piecewise-in-time
    schedules.
    """
    if n < 1:
        raise ValueError("coefficient field size must be >= 1")
    return CoefficientField(beta=NodeField(beta, n), gamma=NodeField(gamma, n))
