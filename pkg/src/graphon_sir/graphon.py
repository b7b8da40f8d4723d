"""Graphon kernels on [0,1]^2: closed-form families, step graphons, and
time schedules, with pointwise evaluation, exact cell averages, trims,
norm estimators and degree diagnostics.

Conventions used throughout the package:

* the unit interval carries the uniform partition I_j = ((j-1)/n, j/n),
  j = 1..n (1-based in the public API, 0-based in ndarray grids);
* a "cell average" over I_j x I_k is n^2 * double integral of W over the
  cell, so averaging a constant returns the constant;
* every kernel is symmetric and nonnegative; evaluation is vectorized
  over numpy arrays and broadcasts like a ufunc.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

# Clamp applied to random sample points so that kernels with an integrable
# singularity at the origin (power-law families) are never evaluated at 0
# or 1.  Uniform draws land exactly on an endpoint with probability zero,
# so the clamp does not bias averages measurably.
SINGULAR_CLAMP = 1e-12

# Default resolution of grid-based norm / degree-sup estimators.
DEFAULT_NORM_GRID = 1000
DEFAULT_DEGREE_GRID = 10_000

QUAD_TOL = 1e-10


class QuadratureError(ArithmeticError):
    """Adaptive cell quadrature failed to reach the requested tolerance."""

    def __init__(self, achieved: float, requested: float):
        self.achieved = achieved
        self.requested = requested
        super().__init__(
            f"cell quadrature did not converge: achieved {achieved:.3e}, "
            f"requested {requested:.3e}"
        )


@dataclass(frozen=True)
class UniformPartition:
    """The uniform partition of (0,1) into n open intervals I_j."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("partition size must be >= 1")

    def interval(self, j: int) -> tuple[float, float]:
        """Endpoints of I_j for 1 <= j <= n."""
        if not 1 <= j <= self.n:
            raise IndexError(f"interval index {j} outside 1..{self.n}")
        return ((j - 1) / self.n, j / self.n)

    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n + 1)

    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) / self.n


# ---------------------------------------------------------------------------
# base class
# ---------------------------------------------------------------------------


class Graphon:
    """Base class for symmetric nonnegative kernels on [0,1]^2.

    Subclasses implement ``_eval(x, y, t)`` on validated inputs and may
    override ``cell_average`` / ``cell_average_grid`` / ``degree`` with
    closed forms.  The default cell average is adaptive tensor quadrature
    with absolute tolerance ``QUAD_TOL``.
    """

    kind = "graphon"
    #: evaluation must stay strictly inside (0,1) (singular at endpoints)
    singular = False
    #: time-dependent kinds override
    time_dependent = False
    #: for kernels taking exactly two values {lo, hi}: the pair, else None.
    #: Lets trims of indicator-like kernels keep closed-form cell averages.
    levels: tuple[float, float] | None = None

    # -- evaluation ---------------------------------------------------------

    def eval(self, x, y, t: float = 0.0):
        """Evaluate W(t,x,y).  Accepts scalars or broadcastable arrays."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.singular:
            if np.any(x <= 0.0) or np.any(x >= 1.0) or np.any(y <= 0.0) or np.any(y >= 1.0):
                raise ValueError(
                    f"{self.kind} graphon evaluated at a singular/boundary point; "
                    "arguments must lie strictly inside (0,1)"
                )
        else:
            if np.any(x < 0.0) or np.any(x > 1.0) or np.any(y < 0.0) or np.any(y > 1.0):
                raise ValueError("graphon arguments must lie in [0,1]")
        out = self._eval(x, y, float(t))
        if np.ndim(out) == 0:
            return float(out)
        return out

    def _eval(self, x, y, t):  # pragma: no cover - abstract
        raise NotImplementedError

    # -- cell averages ------------------------------------------------------

    def cell_average(self, n: int, j: int, k: int, t: float = 0.0) -> float:
        """n^2 * integral of W(t,.,.) over I_j x I_k (1-based j,k)."""
        if not (1 <= j <= n and 1 <= k <= n):
            raise IndexError(f"cell ({j},{k}) outside 1..{n}")
        a, b = (j - 1) / n, j / n
        c, d = (k - 1) / n, k / n
        val = _adaptive_cell_quad(lambda xx, yy: self._eval(xx, yy, t), a, b, c, d)
        return n * n * val

    def cell_average_grid(self, n: int, t: float = 0.0) -> np.ndarray:
        """All cell averages as an (n, n) array.  Subclasses vectorize."""
        grid = np.empty((n, n))
        for j in range(1, n + 1):
            for k in range(j, n + 1):
                v = self.cell_average(n, j, k, t)
                grid[j - 1, k - 1] = v
                grid[k - 1, j - 1] = v
        return grid

    # -- degree -------------------------------------------------------------

    def degree(self, x: float, t: float = 0.0) -> float:
        """The degree function: integral of W(t,x,y) dy over (0,1)."""
        return _adaptive_line_quad(lambda yy: self._eval(np.asarray(x, dtype=float), yy, t))

    def degree_grid(self, xs: np.ndarray, t: float = 0.0) -> np.ndarray:
        """Degree function on an array of points.  The default is a
        4096-point midpoint rule in y, vectorized; closed-form kinds
        override with the exact expression."""
        xs = np.asarray(xs, dtype=float)
        m = 4096
        ymid = (np.arange(m) + 0.5) / m
        out = np.empty(xs.shape)
        for sl in _chunks(len(xs), 256):
            out[sl] = self._eval(xs[sl, None], ymid[None, :], t).mean(axis=1)
        return out

    def _cell_value_bounds(self, n: int, t: float = 0.0):
        """Per-cell (inf, sup) grids of the kernel values, or None when
        unavailable.  Used to localize trim quadrature to the cells where
        a cap actually crosses the kernel."""
        return None

    # -- misc ---------------------------------------------------------------

    def _resolve(self, t: float) -> "Graphon":
        """The active static kernel at time t (self for static kinds)."""
        return self

    def __repr__(self):
        return f"<{type(self).__name__}>"


# ---------------------------------------------------------------------------
# adaptive quadrature fallback
# ---------------------------------------------------------------------------

# 7-point Gauss-Legendre nodes/weights on [-1, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(7)

_QUAD_MAX_PANELS = 20_000


def _gl_cell(f, a, b, c, d):
    """Tensor 7x7 Gauss-Legendre estimate of the integral over [a,b]x[c,d]."""
    hx, hy = (b - a) / 2.0, (d - c) / 2.0
    xs = a + hx * (_GL_X + 1.0)
    ys = c + hy * (_GL_X + 1.0)
    vals = f(xs[:, None], ys[None, :])
    return hx * hy * float(_GL_W @ vals @ _GL_W)


def _adaptive_cell_quad(f, a, b, c, d, tol=QUAD_TOL):
    """Globally adaptive tensor quadrature over [a,b]x[c,d].

    Keeps a worst-first heap of rectangles, splitting the one with the
    largest error estimate (one-panel rule vs its four quarters) until
    the summed estimate meets the absolute tolerance.  Raises
    QuadratureError when the panel budget runs out or a panel can no
    longer be split in floating point.
    """

    def measure(a, b, c, d):
        xm, ym = (a + b) / 2.0, (c + d) / 2.0
        coarse = _gl_cell(f, a, b, c, d)
        fine = (
            _gl_cell(f, a, xm, c, ym)
            + _gl_cell(f, xm, b, c, ym)
            + _gl_cell(f, a, xm, ym, d)
            + _gl_cell(f, xm, b, ym, d)
        )
        return fine, abs(fine - coarse)

    val, err = measure(a, b, c, d)
    heap = [(-err, a, b, c, d, val, err)]
    total, total_err = val, err
    for _ in range(_QUAD_MAX_PANELS):
        if total_err <= max(tol, 1e-15 * (1.0 + abs(total))):
            return total
        _, pa, pb, pc, pd, pv, pe = heapq.heappop(heap)
        xm, ym = (pa + pb) / 2.0, (pc + pd) / 2.0
        if xm - pa <= 1e-16 * (1.0 + abs(pa)) or ym - pc <= 1e-16 * (1.0 + abs(pc)):
            raise QuadratureError(achieved=total_err, requested=tol)
        total -= pv
        total_err -= pe
        for q in ((pa, xm, pc, ym), (xm, pb, pc, ym), (pa, xm, ym, pd), (xm, pb, ym, pd)):
            v, e = measure(*q)
            total += v
            total_err += e
            heapq.heappush(heap, (-e, *q, v, e))
    raise QuadratureError(achieved=total_err, requested=tol)


_LEGGAUSS_CACHE: dict = {}


def _leggauss(order):
    if order not in _LEGGAUSS_CACHE:
        _LEGGAUSS_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _LEGGAUSS_CACHE[order]


def _row_gl(f, n, order):
    """Per-cell Gauss-Legendre integrals of f over the uniform n-partition."""
    gx, gw = _leggauss(order)
    starts = np.arange(n) / n
    h = 1.0 / (2.0 * n)
    ys = starts[:, None] + h * (gx[None, :] + 1.0)
    return h * (f(ys) @ gw)


def _adaptive_line_quad(f, a=0.0, b=1.0, tol=QUAD_TOL):
    """Globally adaptive 1-d quadrature; same worst-first strategy as the
    2-d version."""

    def measure(lo, hi):
        h = (hi - lo) / 2.0
        coarse = h * float(_GL_W @ f(lo + h * (_GL_X + 1.0)))
        h2 = h / 2.0
        mid = lo + h
        fine = h2 * float(_GL_W @ f(lo + h2 * (_GL_X + 1.0))) + h2 * float(
            _GL_W @ f(mid + h2 * (_GL_X + 1.0))
        )
        return fine, abs(fine - coarse)

    val, err = measure(a, b)
    heap = [(-err, a, b, val, err)]
    total, total_err = val, err
    for _ in range(_QUAD_MAX_PANELS):
        if total_err <= max(tol, 1e-15 * (1.0 + abs(total))):
            return total
        _, lo, hi, pv, pe = heapq.heappop(heap)
        mid = (lo + hi) / 2.0
        if mid - lo <= 1e-16 * (1.0 + abs(lo)):
            raise QuadratureError(achieved=total_err, requested=tol)
        total -= pv
        total_err -= pe
        for seg in ((lo, mid), (mid, hi)):
            v, e = measure(*seg)
            total += v
            total_err += e
            heapq.heappush(heap, (-e, *seg, v, e))
    raise QuadratureError(achieved=total_err, requested=tol)


# ---------------------------------------------------------------------------
# geometric helpers for indicator kernels
# ---------------------------------------------------------------------------


def _halfplane_area(t, a, b, c, d):
    """Area of {(x,y) in [a,b]x[c,d] : y - x >= t}; vectorized in a,b,c,d."""
    L = b - a
    u0 = c - t - a
    u1 = d - t - a

    def H(u):
        # integral of clamp(v, 0, L) dv from 0 to u
        u = np.asarray(u, dtype=float)
        below = np.clip(u, 0.0, L)
        return 0.5 * below * below + np.maximum(u - L, 0.0) * L

    return H(u1) - H(u0)


def _ring_band_area(r, a, b, c, d):
    """Area of {min(|x-y|, 1-|x-y|) <= r} inside [a,b]x[c,d] for r < 1/2."""
    band = _halfplane_area(-r, a, b, c, d) - _halfplane_area(r, a, b, c, d)
    wrap_up = _halfplane_area(1.0 - r, a, b, c, d)  # y - x >= 1-r
    wrap_dn = _halfplane_area(1.0 - r, c, d, a, b)  # x - y >= 1-r
    return band + wrap_up + wrap_dn


def _overlap(a, b, lo, hi):
    """Length of [a,b] intersected with [lo,hi]; vectorized."""
    return np.maximum(0.0, np.minimum(b, hi) - np.maximum(a, lo))


def _cell_edges(n):
    """(a, b) arrays of cell endpoints for the uniform n-partition."""
    e = np.linspace(0.0, 1.0, n + 1)
    return e[:-1], e[1:]


def _chunks(total, size):
    for lo in range(0, total, size):
        yield slice(lo, min(lo + size, total))


def _decreasing_cell_bounds(w: Graphon, n: int, t: float):
    """(inf, sup) cell-value grids for kernels decreasing in each
    coordinate: inf at the upper-right corner, sup at the lower-left
    (clamped away from a singular origin, where the sup is +inf)."""
    a, b = _cell_edges(n)
    inf_grid = w._eval(b[:, None], b[None, :], t)
    # Clamping a singular corner slightly inward underestimates an infinite
    # sup, but the value is still so large that the binding decision (and
    # hence which cells get quadrature) is unaffected for any useful cap.
    a_safe = np.maximum(a, SINGULAR_CLAMP) if w.singular else a
    sup_grid = w._eval(a_safe[:, None], a_safe[None, :], t)
    return inf_grid, sup_grid


# ---------------------------------------------------------------------------
# closed-form kinds
# ---------------------------------------------------------------------------


class Constant(Graphon):
    """W == p.  With Bernoulli sampling this is the Erdos-Renyi model."""

    kind = "constant"

    def __init__(self, p: float):
        if not 0.0 <= p:
            raise ValueError("constant graphon requires p >= 0")
        self.p = float(p)
        self.levels = (self.p, self.p)

    def _eval(self, x, y, t):
        return np.broadcast_to(np.float64(self.p), np.broadcast_shapes(x.shape, y.shape)).copy()

    def cell_average(self, n, j, k, t=0.0):
        if not (1 <= j <= n and 1 <= k <= n):
            raise IndexError(f"cell ({j},{k}) outside 1..{n}")
        return self.p

    def cell_average_grid(self, n, t=0.0):
        return np.full((n, n), self.p)

    def degree(self, x, t=0.0):
        return self.p

    def degree_grid(self, xs, t=0.0):
        return np.full(np.shape(xs), self.p)

    def __repr__(self):
        return f"Constant(p={self.p})"


class Bipartite(Graphon):
    """Indicator of the two off-diagonal blocks split at theta:
    W(x,y) = 1 iff exactly one of x,y lies below theta."""

    kind = "bipartite"
    levels = (0.0, 1.0)

    def __init__(self, theta: float):
        if not 0.0 < theta < 1.0:
            raise ValueError("bipartite split theta must lie in (0,1)")
        self.theta = float(theta)

    def _eval(self, x, y, t):
        return ((x < self.theta) ^ (y < self.theta)).astype(float)

    def cell_average(self, n, j, k, t=0.0):
        if not (1 <= j <= n and 1 <= k <= n):
            raise IndexError(f"cell ({j},{k}) outside 1..{n}")
        g = self.cell_average_grid(n)
        return float(g[j - 1, k - 1])

    def cell_average_grid(self, n, t=0.0):
        a, b = _cell_edges(n)
        lx = _overlap(a, b, 0.0, self.theta)  # mass below the split
        rx = (b - a) - lx
        # cross terms only: below x above + above x below
        grid = np.outer(lx, rx) + np.outer(rx, lx)
        return (n * n) * grid

    def degree(self, x, t=0.0):
        return 1.0 - self.theta if x < self.theta else self.theta

    def degree_grid(self, xs, t=0.0):
        xs = np.asarray(xs, dtype=float)
        return np.where(xs < self.theta, 1.0 - self.theta, self.theta)

    def __repr__(self):
        return f"Bipartite(theta={self.theta})"


class BlockDiagonal(Graphon):
    """Indicator of union of diagonal blocks D_k x D_k cut at the given
    strictly increasing interior breakpoints."""

    kind = "block_diagonal"
    levels = (0.0, 1.0)

    def __init__(self, breakpoints):
        bp = [float(s) for s in breakpoints]
        if any(not 0.0 < s < 1.0 for s in bp) or any(
            b2 <= b1 for b1, b2 in zip(bp, bp[1:])
        ):
            raise ValueError("breakpoints must be strictly increasing inside (0,1)")
        self.breakpoints = tuple(bp)
        self._edges = np.array([0.0, *bp, 1.0])

    def _eval(self, x, y, t):
        bx = np.searchsorted(self._edges, x, side="left")
        by = np.searchsorted(self._edges, y, side="left")
        # points exactly on a breakpoint belong to the left block (null set)
        bx = np.clip(bx, 1, len(self._edges) - 1)
        by = np.clip(by, 1, len(self._edges) - 1)
        return (bx == by).astype(float)

    def cell_average(self, n, j, k, t=0.0):
        if not (1 <= j <= n and 1 <= k <= n):
            raise IndexError(f"cell ({j},{k}) outside 1..{n}")
        g = self.cell_average_grid(n)
        return float(g[j - 1, k - 1])

    def cell_average_grid(self, n, t=0.0):
        a, b = _cell_edges(n)
        grid = np.zeros((n, n))
        for lo, hi in zip(self._edges[:-1], self._edges[1:]):
            o = _overlap(a, b, lo, hi)
            grid += np.outer(o, o)
        return (n * n) * grid

    def degree(self, x, t=0.0):
        idx = int(np.clip(np.searchsorted(self._edges, x, side="left"), 1, len(self._edges) - 1))
        return float(self._edges[idx] - self._edges[idx - 1])

    def degree_grid(self, xs, t=0.0):
        idx = np.clip(
            np.searchsorted(self._edges, np.asarray(xs, dtype=float), side="left"),
            1,
            len(self._edges) - 1,
        )
        return self._edges[idx] - self._edges[idx - 1]

    def __repr__(self):
        return f"BlockDiagonal(breakpoints={self.breakpoints})"


class KNearestRing(Graphon):
    """Ring-neighbourhood indicator: W = 1 iff the circle distance
    min(|x-y|, 1-|x-y|) is <= r (closed inequality; ties inside)."""

    kind = "k_nearest_ring"
    levels = (0.0, 1.0)

    def __init__(self, r: float):
        if not 0.0 < r < 1.0:
            raise ValueError("ring radius r must lie in (0,1)")
        self.r = float(r)

    def _eval(self, x, y, t):
        d = np.abs(x - y)
        return (np.minimum(d, 1.0 - d) <= self.r).astype(float)

    def cell_average(self, n, j, k, t=0.0):
        if not (1 <= j <= n and 1 <= k <= n):
            raise IndexError(f"cell ({j},{k}) outside 1..{n}")
        if self.r >= 0.5:
            return 1.0
        a, b = (j - 1) / n, j / n
        c, d = (k - 1) / n, k / n
        return n * n * float(_ring_band_area(self.r, a, b, c, d))

    def cell_average_grid(self, n, t=0.0):
        if self.r >= 0.5:
            return np.ones((n, n))
        a, b = _cell_edges(n)
        A = a[:, None]
        B = b[:, None]
        C = a[None, :]
        D = b[None, :]
        return (n * n) * _ring_band_area(self.r, A, B, C, D)

    def degree(self, x, t=0.0):
        # the ring wraps, so every point sees the same band of width 2r
        return min(1.0, 2.0 * self.r)

    def degree_grid(self, xs, t=0.0):
        return np.full(np.shape(xs), min(1.0, 2.0 * self.r))

    def __repr__(self):
        return f"KNearestRing(r={self.r})"


class SmallWorld(Graphon):
    """Rewiring mixture of the ring indicator: (1-p) on the ring band and
    p off it, so values are the two levels {p, 1-p}."""

    kind = "small_world"

    def __init__(self, p: float, r: float):
        if not 0.0 <= p <= 0.5:
            raise ValueError("small-world rewiring probability p must lie in [0, 0.5]")
        self.p = float(p)
        self.ring = KNearestRing(r)
        self.r = self.ring.r
        self.levels = (self.p, 1.0 - self.p)

    def _eval(self, x, y, t):
        band = self.ring._eval(x, y, t)
        return self.p + (1.0 - 2.0 * self.p) * band

    def cell_average(self, n, j, k, t=0.0):
        return self.p + (1.0 - 2.0 * self.p) * self.ring.cell_average(n, j, k)

    def cell_average_grid(self, n, t=0.0):
        return self.p + (1.0 - 2.0 * self.p) * self.ring.cell_average_grid(n)

    def degree(self, x, t=0.0):
        return self.p + (1.0 - 2.0 * self.p) * self.ring.degree(x)

    def degree_grid(self, xs, t=0.0):
        return self.p + (1.0 - 2.0 * self.p) * self.ring.degree_grid(xs)

    def __repr__(self):
        return f"SmallWorld(p={self.p}, r={self.r})"


class UniformAttachment(Graphon):
    """W(x,y) = 1 - max(x,y)."""

    kind = "uniform_attachment"

    def _eval(self, x, y, t):
        return 1.0 - np.maximum(x, y)

    @staticmethod
    def _max_integral(a, b, c, d):
        """Integral of max(x,y) over [a,b]x[c,d]; vectorized."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        c = np.asarray(c, dtype=float)
        d = np.asarray(d, dtype=float)
        # segment x < c : integrand (d^2 - c^2)/2 per unit x
        len1 = np.maximum(0.0, np.minimum(b, c) - a)
        part1 = len1 * (d * d - c * c) / 2.0
        # segment c <= x <= d : antiderivative x^3/6 - c x^2/2 + d^2 x / 2
        lo = np.clip(a, c, d)
        hi = np.clip(b, c, d)

        def F2(x):
            return x**3 / 6.0 - c * x * x / 2.0 + d * d * x / 2.0

        part2 = F2(hi) - F2(lo)
        # segment x > d : integrand x (d - c)
        lo3 = np.maximum(a, d)
        len3 = np.maximum(0.0, b - lo3)
        part3 = np.where(len3 > 0.0, (d - c) * (b * b - lo3 * lo3) / 2.0, 0.0)
        return part1 + part2 + part3

    def cell_average(self, n, j, k, t=0.0):
        if not (1 <= j <= n and 1 <= k <= n):
            raise IndexError(f"cell ({j},{k}) outside 1..{n}")
        a, b = (j - 1) / n, j / n
        c, d = (k - 1) / n, k / n
        area = (b - a) * (d - c)
        return n * n * float(area - self._max_integral(a, b, c, d))

    def cell_average_grid(self, n, t=0.0):
        a, b = _cell_edges(n)
        A, B = a[:, None], b[:, None]
        C, D = a[None, :], b[None, :]
        area = (B - A) * (D - C)
        return (n * n) * (area - self._max_integral(A, B, C, D))

    def degree(self, x, t=0.0):
        return (1.0 - x * x) / 2.0

    def degree_grid(self, xs, t=0.0):
        xs = np.asarray(xs, dtype=float)
        return (1.0 - xs * xs) / 2.0

    def _cell_value_bounds(self, n, t=0.0):
        return _decreasing_cell_bounds(self, n, t)

    def __repr__(self):
        return "UniformAttachment()"


class PreferentialAttachment(Graphon):
    """W(x,y) = 1 - exp(-c log(x) log(y)), c > 0."""

    kind = "preferential_attachment"
    singular = True

    def __init__(self, c: float):
        if not c > 0.0:
            raise ValueError("preferential-attachment parameter c must be > 0")
        self.c = float(c)

    def _eval(self, x, y, t):
        # group log(x)*log(y) so rounding is symmetric in the arguments
        return 1.0 - np.exp(-self.c * (np.log(x) * np.log(y)))

    def _row_profile(self, a, b):
        """q(y) = integral of x^(-c log y) dx over [a,b], vectorized in y.

        Reduces every cell integral to one dimension:
        cell integral = area - integral of q over [c,d].
        """

        def q(y):
            e = 1.0 - self.c * np.log(y)
            return (b**e - np.asarray(a, dtype=float) ** e) / e

        return q

    def cell_average(self, n, j, k, t=0.0):
        if not (1 <= j <= n and 1 <= k <= n):
            raise IndexError(f"cell ({j},{k}) outside 1..{n}")
        a, b = (j - 1) / n, j / n
        c, d = (k - 1) / n, k / n
        q = self._row_profile(a, b)
        inner = _adaptive_line_quad(q, c, d, tol=QUAD_TOL / n**2)
        return n * n * ((b - a) * (d - c) - inner)

    def cell_average_grid(self, n, t=0.0):
        edges_a, edges_b = _cell_edges(n)
        grid = np.empty((n, n))
        for j in range(n):
            a, b = edges_a[j], edges_b[j]
            q = self._row_profile(a, b)
            # fixed-order rule per y-cell, vectorized across the row;
            # cells failing the order comparison fall back to adaptive.
            # Only k >= j is computed; the mirror keeps exact symmetry.
            est16 = _row_gl(q, n, 16)[j:]
            inner = _row_gl(q, n, 32)[j:]
            bad = np.abs(inner - est16) > QUAD_TOL / n
            for k in np.nonzero(bad)[0]:
                inner[k] = _adaptive_line_quad(
                    q, edges_a[j + k], edges_b[j + k], tol=QUAD_TOL / n**2
                )
            row = n * n * (1.0 / n**2 - inner)
            grid[j, j:] = row
            grid[j:, j] = row
        return grid

    def degree(self, x, t=0.0):
        # integral of y^(-c log x) dy = 1 / (1 - c log x) for x in (0,1)
        if not 0.0 < x < 1.0:
            raise ValueError("degree requires x inside (0,1)")
        return 1.0 - 1.0 / (1.0 - self.c * math.log(x))

    def degree_grid(self, xs, t=0.0):
        xs = np.asarray(xs, dtype=float)
        return 1.0 - 1.0 / (1.0 - self.c * np.log(xs))

    def _cell_value_bounds(self, n, t=0.0):
        return _decreasing_cell_bounds(self, n, t)

    def __repr__(self):
        return f"PreferentialAttachment(c={self.c})"


class PowerLaw(Graphon):
    """W(x,y) = d_nu (xy)^(-nu) with d_nu = (1-2 nu)^2, nu in (0, 1/2)."""

    kind = "power_law"
    singular = True

    def __init__(self, nu: float):
        if not 0.0 < nu < 0.5:
            raise ValueError("power-law exponent nu must lie in (0, 1/2)")
        self.nu = float(nu)
        self.d_nu = (1.0 - 2.0 * nu) ** 2

    def _eval(self, x, y, t):
        return self.d_nu * (x * y) ** (-self.nu)

    def _edge_integrals(self, n):
        """Integral of x^(-nu) over each cell of the n-partition."""
        e = np.linspace(0.0, 1.0, n + 1)
        anti = e ** (1.0 - self.nu) / (1.0 - self.nu)
        return np.diff(anti)

    def cell_average(self, n, j, k, t=0.0):
        if not (1 <= j <= n and 1 <= k <= n):
            raise IndexError(f"cell ({j},{k}) outside 1..{n}")
        u = self._edge_integrals(n)
        return self.d_nu * n * n * float(u[j - 1] * u[k - 1])

    def cell_average_grid(self, n, t=0.0):
        u = self._edge_integrals(n)
        return self.d_nu * (n * n) * np.outer(u, u)

    def degree(self, x, t=0.0):
        if not 0.0 < x < 1.0:
            raise ValueError("degree requires x inside (0,1)")
        return self.d_nu * x ** (-self.nu) / (1.0 - self.nu)

    def degree_grid(self, xs, t=0.0):
        xs = np.asarray(xs, dtype=float)
        return self.d_nu * xs ** (-self.nu) / (1.0 - self.nu)

    def _cell_value_bounds(self, n, t=0.0):
        return _decreasing_cell_bounds(self, n, t)

    def __repr__(self):
        return f"PowerLaw(nu={self.nu})"


class SumPowerLaw(Graphon):
    """W(x,y) = d_mu (x+y)^(-mu), mu in (0,1), normalized to unit L1 norm.

    The normalizer is computed from the exact double antiderivative
    s^(2-mu) / ((1-mu)(2-mu)) of s^(-mu).
    """

    kind = "sum_power_law"
    singular = True

    def __init__(self, mu: float):
        if not 0.0 < mu < 1.0:
            raise ValueError("sum-power-law exponent mu must lie in (0,1)")
        self.mu = float(mu)
        raw_l1 = (2.0 ** (2.0 - mu) - 2.0) / ((1.0 - mu) * (2.0 - mu))
        self.d_mu = 1.0 / raw_l1

    def _eval(self, x, y, t):
        return self.d_mu * (x + y) ** (-self.mu)

    def _F(self, s):
        return s ** (2.0 - self.mu) / ((1.0 - self.mu) * (2.0 - self.mu))

    def cell_average(self, n, j, k, t=0.0):
        if not (1 <= j <= n and 1 <= k <= n):
            raise IndexError(f"cell ({j},{k}) outside 1..{n}")
        a, b = (j - 1) / n, j / n
        c, d = (k - 1) / n, k / n
        raw = self._F(b + d) - self._F(a + d) - self._F(b + c) + self._F(a + c)
        return self.d_mu * n * n * float(raw)

    def cell_average_grid(self, n, t=0.0):
        a, b = _cell_edges(n)
        A, B = a[:, None], b[:, None]
        C, D = a[None, :], b[None, :]
        raw = self._F(B + D) - self._F(A + D) - self._F(B + C) + self._F(A + C)
        return self.d_mu * (n * n) * raw

    def degree(self, x, t=0.0):
        if not 0.0 < x < 1.0:
            raise ValueError("degree requires x inside (0,1)")
        e = 1.0 - self.mu
        return self.d_mu * ((x + 1.0) ** e - x**e) / e

    def degree_grid(self, xs, t=0.0):
        xs = np.asarray(xs, dtype=float)
        e = 1.0 - self.mu
        return self.d_mu * ((xs + 1.0) ** e - xs**e) / e

    def _cell_value_bounds(self, n, t=0.0):
        return _decreasing_cell_bounds(self, n, t)

    def __repr__(self):
        return f"SumPowerLaw(mu={self.mu})"


# ---------------------------------------------------------------------------
# step graphons
# ---------------------------------------------------------------------------


class StepGraphon(Graphon):
    """Piecewise-constant kernel with value values[j,k] on I_j x I_k.

    The values grid may be signed when the object represents a difference
    of kernels (cut-norm diagnostics); generators always produce
    nonnegative grids.
    """

    kind = "step"

    def __init__(self, values):
        v = np.array(values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("step graphon needs a square value grid")
        if not np.allclose(v, v.T, atol=0.0, rtol=0.0, equal_nan=False):
            raise ValueError("step graphon values must be symmetric")
        v.flags.writeable = False
        self.values = v
        self.n = v.shape[0]

    def _cell_index(self, z):
        # left-closed indexing; the boundary set has measure zero
        return np.minimum((np.asarray(z) * self.n).astype(int), self.n - 1)

    def _eval(self, x, y, t):
        return self.values[self._cell_index(x), self._cell_index(y)].astype(float)

    def _refinement_weights(self, m: int) -> np.ndarray:
        """(m, n) matrix of overlap lengths between target and own cells."""
        ta, tb = _cell_edges(m)
        sa, sb = _cell_edges(self.n)
        return _overlap(ta[:, None], tb[:, None], sa[None, :], sb[None, :])

    def cell_average(self, n, j, k, t=0.0):
        if not (1 <= j <= n and 1 <= k <= n):
            raise IndexError(f"cell ({j},{k}) outside 1..{n}")
        g = self.cell_average_grid(n)
        return float(g[j - 1, k - 1])

    def cell_average_grid(self, n, t=0.0):
        if n == self.n:
            return self.values.copy()
        if n % self.n == 0:
            return np.kron(self.values, np.ones((n // self.n, n // self.n)))
        L = self._refinement_weights(n)
        return (n * n) * (L @ self.values @ L.T)

    def degree(self, x, t=0.0):
        j = int(self._cell_index(np.asarray(x)))
        return float(self.values[j].sum()) / self.n

    def degree_grid(self, xs, t=0.0):
        rows = self.values.sum(axis=1) / self.n
        return rows[self._cell_index(np.asarray(xs, dtype=float))]

    def lp_norm_exact(self, p) -> float:
        if p == math.inf:
            return float(np.max(np.abs(self.values)))
        return float((np.sum(np.abs(self.values) ** p) / self.n**2) ** (1.0 / p))

    def __repr__(self):
        return f"StepGraphon(n={self.n})"


def step_graphon_to_csv(w: StepGraphon, path) -> None:
    """Dense CSV: first line is the partition size n, then n rows of
    n comma-separated values (row-major)."""
    with open(path, "w") as fh:
        fh.write(f"{w.n}\n")
        for row in w.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def step_graphon_from_csv(path) -> StepGraphon:
    with open(path) as fh:
        header = fh.readline().strip()
        try:
            n = int(header)
        except ValueError as exc:
            raise ValueError(
                f"step graphon CSV must start with the partition size, got {header!r}"
            ) from exc
        rows = [
            [float(tok) for tok in line.strip().split(",")]
            for line in fh
            if line.strip()
        ]
    v = np.array(rows)
    if v.shape != (n, n):
        raise ValueError(f"step graphon CSV declared n={n} but carries shape {v.shape}")
    return StepGraphon(v)


# ---------------------------------------------------------------------------
# time schedules
# ---------------------------------------------------------------------------


class TimeSchedule(Graphon):
    """Piecewise-constant-in-time kernel: a list of (t_start, graphon)
    segments active on [t_start, next t_start), right-continuous, covering
    [t0, t_end].  The active kernel at a switch time is the new one."""

    kind = "time_schedule"
    time_dependent = True

    def __init__(self, segments, t_end: float):
        segs = [(float(ts), g) for ts, g in segments]
        if not segs:
            raise ValueError("time schedule needs at least one segment")
        starts = [ts for ts, _ in segs]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("schedule switch times must be strictly increasing")
        if not t_end > starts[-1]:
            raise ValueError("schedule horizon must extend past the last switch")
        for _, g in segs:
            if g.time_dependent:
                raise ValueError("nested time schedules are not supported")
        self.segments = tuple(segs)
        self.t_end = float(t_end)
        self._starts = np.array(starts)
        self.singular = any(g.singular for _, g in segs)

    def active(self, t: float) -> Graphon:
        if t < self._starts[0] or t > self.t_end:
            raise ValueError(
                f"time {t} outside the schedule horizon "
                f"[{self._starts[0]}, {self.t_end}]"
            )
        idx = int(np.searchsorted(self._starts, t, side="right")) - 1
        return self.segments[idx][1]

    def _resolve(self, t):
        return self.active(t)

    def _eval(self, x, y, t):
        return self.active(t)._eval(x, y, t)

    def eval(self, x, y, t: float = 0.0):
        return self.active(t).eval(x, y, t)

    def cell_average(self, n, j, k, t=0.0):
        return self.active(t).cell_average(n, j, k, t)

    def cell_average_grid(self, n, t=0.0):
        return self.active(t).cell_average_grid(n, t)

    def degree(self, x, t=0.0):
        return self.active(t).degree(x, t)

    def degree_grid(self, xs, t=0.0):
        return self.active(t).degree_grid(xs, t)

    def _cell_value_bounds(self, n, t=0.0):
        return self.active(t)._cell_value_bounds(n, t)

    def __repr__(self):
        return f"TimeSchedule({len(self.segments)} segments, t_end={self.t_end})"


# ---------------------------------------------------------------------------
# trims
# ---------------------------------------------------------------------------


class _TrimmedGraphon(Graphon):
    """Pointwise capped transform of a base kernel.

    Both trim modes are the same map up to scaling,
        g(v) = outer * min(inner, v),
    with (outer, inner) = (1, cap) for a level trim min(cap, W) and
    (scale, 1/scale) for a density trim min(1, scale * W).  Cell averages
    restrict quadrature to the cells whose value range actually straddles
    the cap; everywhere else the capped average has a closed form.
    """

    def __init__(self, base: Graphon, kind: str, outer: float, inner: float):
        self.base = base
        self.kind = kind
        self.outer = float(outer)
        self.inner = float(inner)
        self.singular = base.singular
        self.time_dependent = base.time_dependent
        if base.levels is not None:
            lo, hi = base.levels
            self.levels = (float(self._g(lo)), float(self._g(hi)))

    def _g(self, v):
        return self.outer * np.minimum(self.inner, v)

    def _eval(self, x, y, t):
        return self._g(self.base._eval(x, y, t))

    def cell_average(self, n, j, k, t=0.0):
        if not (1 <= j <= n and 1 <= k <= n):
            raise IndexError(f"cell ({j},{k}) outside 1..{n}")
        base = self.base._resolve(t)
        if base.levels is not None:
            lo, hi = base.levels
            raw = base.cell_average(n, j, k, t)
            if hi == lo:
                return float(self._g(lo))
            frac_hi = (raw - lo) / (hi - lo)
            return float(self._g(lo) + (self._g(hi) - self._g(lo)) * frac_hi)
        if isinstance(base, StepGraphon):
            # the base is constant on each of its own cells, so capping
            # commutes with cell-averaging at any resolution
            return StepGraphon(self._g(base.values)).cell_average(n, j, k)
        bounds = base._cell_value_bounds(n, t)
        if bounds is not None:
            inf_g, sup_g = bounds
            lo_v, hi_v = inf_g[j - 1, k - 1], sup_g[j - 1, k - 1]
            if hi_v <= self.inner:  # cap never binds on this cell
                return self.outer * base.cell_average(n, j, k, t)
            if lo_v >= self.inner:  # cap binds everywhere
                return self.outer * self.inner
        return super().cell_average(n, j, k, t)

    def cell_average_grid(self, n, t=0.0):
        base = self.base._resolve(t)
        if base.levels is not None:
            lo, hi = base.levels
            raw = base.cell_average_grid(n, t)
            if hi == lo:
                return np.full((n, n), float(self._g(lo)))
            frac_hi = (raw - lo) / (hi - lo)
            return self._g(lo) + (self._g(hi) - self._g(lo)) * frac_hi
        if isinstance(base, StepGraphon):
            return StepGraphon(self._g(base.values)).cell_average_grid(n)
        bounds = base._cell_value_bounds(n, t)
        if bounds is None:
            return Graphon.cell_average_grid(self, n, t)
        inf_g, sup_g = bounds
        out = self.outer * base.cell_average_grid(n, t)
        out[inf_g >= self.inner] = self.outer * self.inner
        # only the cells straddling the cap need quadrature
        straddle = (sup_g > self.inner) & (inf_g < self.inner)
        for j, k in zip(*np.nonzero(straddle)):
            if k < j:
                continue
            v = Graphon.cell_average(self, n, int(j) + 1, int(k) + 1, t)
            out[j, k] = v
            out[k, j] = v
        return out

    def degree(self, x, t=0.0):
        if self.base._resolve(t).singular and not 0.0 < x < 1.0:
            raise ValueError("degree requires x inside (0,1)")
        return super().degree(x, t)

    def __repr__(self):
        return f"<{self.kind} of {self.base!r}>"


def trim(w: Graphon, n: int, alpha: float, mode: str = "level") -> Graphon:
    """Cap a kernel for the sparse-regime comparisons.

    mode="level"   -> min(n^alpha, W)
    mode="density" -> min(1, n^(-alpha) W)

    Capping an already-bounded kernel leaves its values unchanged
    (idempotence in value), though a fresh wrapper object is returned.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("trim exponent alpha must lie in [0,1)")
    if n < 1:
        raise ValueError("trim size n must be >= 1")
    if mode == "level":
        cap = float(n) ** alpha
        return _TrimmedGraphon(w, "level_trim", outer=1.0, inner=cap)
    if mode == "density":
        scale = float(n) ** (-alpha)
        return _TrimmedGraphon(w, "density_trim", outer=scale, inner=1.0 / scale)
    raise ValueError(f"unknown trim mode {mode!r}")


# ---------------------------------------------------------------------------
# module-level operations (norms, degree diagnostics)
# ---------------------------------------------------------------------------

#: kinds whose essential supremum is infinite (L-infinity estimator diverges)
_UNBOUNDED_KINDS = ("power_law", "sum_power_law")


def cell_average(w: Graphon, t: float, n: int, j: int, k: int) -> float:
    """Cell average of W(t,.,.) over I_j x I_k, 1-based indices."""
    return w.cell_average(n, j, k, t)


def lp_norm(w: Graphon, t: float = 0.0, p=2, grid: int = DEFAULT_NORM_GRID) -> float:
    """L^p norm of W(t,.,.) for p in {1, 2, inf}.

    Exact for Constant and Step kinds; a grid-midpoint estimator of the
    stated resolution otherwise.  For p = inf on kinds with an unbounded
    singularity the true supremum is infinite and inf is returned as the
    divergence flag.
    """
    if p not in (1, 2, math.inf):
        raise ValueError("p must be 1, 2 or inf")
    if grid < 2:
        raise ValueError("grid resolution must be >= 2")
    w_t = w._resolve(t)
    if isinstance(w_t, StepGraphon):
        return w_t.lp_norm_exact(p)
    if isinstance(w_t, Constant):
        return w_t.p
    if p == math.inf and w_t.kind in _UNBOUNDED_KINDS:
        return math.inf
    mids = (np.arange(grid) + 0.5) / grid
    sup = 0.0
    acc = 0.0
    for row in np.array_split(mids, max(1, grid // 256)):
        vals = np.abs(w_t.eval(row[:, None], mids[None, :], t))
        if p == math.inf:
            sup = max(sup, float(vals.max()))
        else:
            acc += float(np.sum(vals**p))
    if p == math.inf:
        return sup
    return (acc / grid**2) ** (1.0 / p)


def degree_function(w: Graphon, t: float, x: float) -> float:
    """Degree of the kernel at x: integral of W(t,x,y) dy."""
    return w.degree(x, t)


def degree_sup(w: Graphon, t: float = 0.0, grid: int = DEFAULT_DEGREE_GRID) -> float:
    """Sup of the degree function over a midpoint grid; the K_d / K_a
    estimate used by the degree-bound diagnostics.  For kernels whose
    degree diverges at the boundary this grows with the resolution; the
    returned value is the estimate at the stated grid."""
    mids = (np.arange(grid) + 0.5) / grid
    return max(float(w.degree(float(x), t)) for x in mids)


KIND_NAMES = {
    "constant": Constant,
    "bipartite": Bipartite,
    "block_diagonal": BlockDiagonal,
    "k_nearest_ring": KNearestRing,
    "small_world": SmallWorld,
    "uniform_attachment": UniformAttachment,
    "preferential_attachment": PreferentialAttachment,
    "power_law": PowerLaw,
    "sum_power_law": SumPowerLaw,
}
