"""Kernel families: closed-form cell averages, trims, norms, degrees.

Expected values were computed with independent oracles before the closed
forms were written: scipy QAGS quadrature for smooth kernels, exact
polygon clipping (Sutherland-Hodgman + shoelace) for indicator kernels,
and grid-aligned midpoint rules for axis-parallel discontinuities.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from graphon_sir import graphon as G


# ---------------------------------------------------------------------------
# oracles (kept deliberately independent of the package implementation)
# ---------------------------------------------------------------------------


def clip_halfplane(poly, a, b, c):
    # keep the part of the polygon with a*x + b*y <= c
    out = []
    m = len(poly)
    for i in range(m):
        P, Q = poly[i], poly[(i + 1) % m]
        inP = a * P[0] + b * P[1] <= c
        inQ = a * Q[0] + b * Q[1] <= c
        if inP:
            out.append(P)
        if inP != inQ:
            t = (c - a * P[0] - b * P[1]) / (a * (Q[0] - P[0]) + b * (Q[1] - P[1]))
            out.append((P[0] + t * (Q[0] - P[0]), P[1] + t * (Q[1] - P[1])))
    return out


def poly_area(poly):
    s = 0.0
    m = len(poly)
    for i in range(m):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % m]
        s += x1 * y2 - x2 * y1
    return abs(s) / 2.0


def ring_band_fraction(r, n, j, k):
    """Exact fraction of cell (j,k) covered by min(|x-y|,1-|x-y|) <= r."""
    a, b = (j - 1) / n, j / n
    c, d = (k - 1) / n, k / n
    sq = [(a, c), (b, c), (b, d), (a, d)]
    pieces = [
        clip_halfplane(clip_halfplane(sq, -1, 1, r), 1, -1, r),  # |x-y| <= r
        clip_halfplane(sq, 1, -1, r - 1),  # y - x >= 1 - r
        clip_halfplane(sq, -1, 1, r - 1),  # x - y >= 1 - r
    ]
    area = sum(poly_area(p) for p in pieces if len(p) >= 3)
    return area * n * n


def midpoint_cell_average(w, n, j, k, m=512, t=0.0):
    """Plain midpoint rule inside one cell; oracle for smooth kernels and
    (with aligned m) exact for axis-parallel piecewise-constant ones."""
    a = (j - 1) / n
    c = (k - 1) / n
    xs = a + (np.arange(m) + 0.5) / (m * n)
    ys = c + (np.arange(m) + 0.5) / (m * n)
    return float(np.mean(w.eval(xs[:, None], ys[None, :], t)))


# ---------------------------------------------------------------------------
# frozen values
# ---------------------------------------------------------------------------


def test_uniform_attachment_frozen_grid():
    w = G.UniformAttachment()
    grid = w.cell_average_grid(2)
    expect = np.array([[2 / 3, 1 / 4], [1 / 4, 1 / 6]])
    assert np.allclose(grid, expect, atol=1e-14, rtol=0.0)
    # independent check: scipy dblquad on each cell
    for (j, k), want in [((1, 1), 2 / 3), ((1, 2), 1 / 4), ((2, 2), 1 / 6)]:
        got, _ = integrate.dblquad(
            lambda y, x: 1 - max(x, y),
            (j - 1) / 2, j / 2, (k - 1) / 2, k / 2, epsabs=1e-13,
        )
        assert abs(4 * got - want) < 1e-8
        assert abs(w.cell_average(2, j, k) - want) < 1e-14


def test_power_law_frozen_values():
    w = G.PowerLaw(0.249)
    assert w.d_nu == pytest.approx(0.252004, abs=1e-15)
    # frozen from d * 0.25 ** (-nu)
    assert w.eval(0.5, 0.5) == pytest.approx(0.3558937589225758, abs=1e-15)
    # singular cell: frozen from scipy QAGS product quadrature
    assert w.cell_average(2, 1, 1) == pytest.approx(0.6310161842311902, abs=1e-12)
    # the L2 norm comes out to 1 - 2 nu exactly; oracle: 1-d quadrature
    I, _ = integrate.quad(lambda x: x ** (-2 * 0.249), 0.0, 1.0)
    assert w.d_nu * I == pytest.approx(0.502, abs=1e-12)
    assert G.lp_norm(w, p=2, grid=2000) == pytest.approx(0.502, abs=5e-3)
    assert G.lp_norm(w, p=math.inf) == math.inf


def test_sum_power_law_frozen_values():
    w = G.SumPowerLaw(0.9)
    assert w.d_mu == pytest.approx(0.7662999395102134, abs=1e-15)
    # frozen from scipy dblquad (its own error estimate was ~4e-8)
    assert w.cell_average(2, 1, 1) == pytest.approx(1.8660659830736153, abs=1e-6)
    # normalized to unit mass: the mean of cell averages telescopes to the
    # full double integral
    for n in (1, 3, 7):
        assert np.mean(w.cell_average_grid(n)) == pytest.approx(1.0, abs=1e-12)
    assert G.lp_norm(w, p=1, grid=2000) == pytest.approx(1.0, abs=5e-3)
    # degree grows like d_mu/(1-mu) toward the left edge
    assert w.degree(1e-4) == pytest.approx(4.612381014510681, abs=1e-12)


def test_preferential_attachment_cell_averages():
    w = G.PreferentialAttachment(0.3)
    # frozen from scipy dblquad at epsabs=1e-12 (reported errors < 7e-9)
    frozen = {(1, 1): 0.4962635638224707, (1, 2): 0.13576157239704248,
              (2, 2): 0.02746817257569564}
    for (j, k), want in frozen.items():
        assert w.cell_average(2, j, k) == pytest.approx(want, abs=2e-8)
    grid = w.cell_average_grid(2)
    assert grid[0, 1] == grid[1, 0]
    for (j, k), want in frozen.items():
        assert grid[j - 1, k - 1] == pytest.approx(want, abs=2e-8)
    # the single-cell and grid routes use different quadrature layouts
    g64 = w.cell_average_grid(64)
    for (j, k) in [(1, 1), (1, 64), (17, 40), (64, 64)]:
        assert g64[j - 1, k - 1] == pytest.approx(
            w.cell_average(64, j, k), abs=1e-9
        )


def test_ring_cell_averages_match_polygon_oracle():
    # aligned case: the band exactly tiles cells
    w = G.KNearestRing(0.25)
    expect = np.array(
        [[1.0, 0.5, 0.0, 0.5],
         [0.5, 1.0, 0.5, 0.0],
         [0.0, 0.5, 1.0, 0.5],
         [0.5, 0.0, 0.5, 1.0]]
    )
    assert np.allclose(w.cell_average_grid(4), expect, atol=1e-12)
    # misaligned case, frozen from the clipping oracle
    w = G.KNearestRing(0.3)
    expect = np.array(
        [[0.99, 0.405, 0.405],
         [0.405, 0.99, 0.405],
         [0.405, 0.405, 0.99]]
    )
    assert np.allclose(w.cell_average_grid(3), expect, atol=1e-12)
    # and against the oracle directly for a handful of (r, n) combinations
    for r in (0.1, 1 / 3, 0.49):
        wr = G.KNearestRing(r)
        for n in (2, 5):
            for j in range(1, n + 1):
                for k in range(1, n + 1):
                    want = ring_band_fraction(r, n, j, k)
                    assert wr.cell_average(n, j, k) == pytest.approx(want, abs=1e-12)


def test_small_world_mixture():
    w = G.SmallWorld(0.2, 0.3)
    expect = np.array(
        [[0.794, 0.443, 0.443],
         [0.443, 0.794, 0.443],
         [0.443, 0.443, 0.794]]
    )
    assert np.allclose(w.cell_average_grid(3), expect, atol=1e-12)
    # two levels only: p off the band, 1-p on it
    assert w.eval(0.1, 0.12) == pytest.approx(0.8)
    assert w.eval(0.1, 0.6) == pytest.approx(0.2)
    # p = 1/2 collapses to the constant kernel
    flat = G.SmallWorld(0.5, 0.3)
    assert flat.eval(0.1, 0.12) == pytest.approx(0.5)
    assert flat.eval(0.1, 0.6) == pytest.approx(0.5)


def test_bipartite_cell_averages():
    w = G.Bipartite(0.2)
    expect = np.array([[0.48, 0.4], [0.4, 0.0]])
    assert np.allclose(w.cell_average_grid(2), expect, atol=1e-14)
    # aligned midpoint oracle (grid multiple of 1/theta and 1/n)
    for n in (2, 4, 8):
        for j in range(1, n + 1):
            for k in range(1, n + 1):
                want = midpoint_cell_average(w, n, j, k, m=40 * 8 // n)
                assert w.cell_average(n, j, k) == pytest.approx(want, abs=1e-12)


def test_block_diagonal_cell_averages():
    w = G.BlockDiagonal([0.25, 0.625])
    for n in (2, 4, 8):
        got = w.cell_average_grid(n)
        for j in range(1, n + 1):
            for k in range(1, n + 1):
                want = midpoint_cell_average(w, n, j, k, m=16 * 8 // n)
                assert got[j - 1, k - 1] == pytest.approx(want, abs=1e-12)
    assert w.degree(0.1) == pytest.approx(0.25)
    assert w.degree(0.5) == pytest.approx(0.375)
    assert w.degree(0.9) == pytest.approx(0.375)


# ---------------------------------------------------------------------------
# quadrature fallback vs closed forms (smooth kernels)
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "w",
    [
        G.Constant(0.37),
        G.UniformAttachment(),
        G.SumPowerLaw(0.5),
        G.PowerLaw(0.249),
    ],
    ids=lambda w: w.kind,
)
def test_quadrature_agrees_with_closed_forms(w):
    for n in (2, 4, 8):
        for j in range(1, n + 1):
            for k in range(j, n + 1):
                if w.singular and (j == 1 or k == 1):
                    continue  # unbounded integrand: quadrature is not used
                via_quad = G.Graphon.cell_average(w, n, j, k)
                assert via_quad == pytest.approx(w.cell_average(n, j, k), abs=1e-8)


def test_quadrature_diverges_on_unbounded_cell():
    w = G.PowerLaw(0.4)
    with pytest.raises(G.QuadratureError):
        G.Graphon.cell_average(w, 2, 1, 1)


# ---------------------------------------------------------------------------
# step graphons
# ---------------------------------------------------------------------------


def test_step_graphon_refinement_and_coarsening():
    rng = np.random.default_rng(7)
    v = rng.uniform(0.0, 1.0, size=(3, 3))
    v = (v + v.T) / 2
    w = G.StepGraphon(v)
    # refinement by an integer factor repeats values
    assert np.allclose(w.cell_average_grid(6), np.kron(v, np.ones((2, 2))), atol=0)
    # incommensurate partition: check against the aligned midpoint oracle
    got = w.cell_average_grid(2)
    for j in (1, 2):
        for k in (1, 2):
            want = midpoint_cell_average(w, 2, j, k, m=27)
            assert got[j - 1, k - 1] == pytest.approx(want, abs=1e-12)
    # norms are exact sums
    assert G.lp_norm(w, p=1) == pytest.approx(np.mean(np.abs(v)))
    assert G.lp_norm(w, p=2) == pytest.approx(math.sqrt(np.mean(v * v)))
    assert G.lp_norm(w, p=math.inf) == pytest.approx(np.max(np.abs(v)))


def test_step_graphon_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(11)
    v = rng.uniform(0.0, 2.0, size=(5, 5))
    v = (v + v.T) / 2
    w = G.StepGraphon(v)
    path = tmp_path / "step.csv"
    G.step_graphon_to_csv(w, path)
    back = G.step_graphon_from_csv(path)
    assert back.n == 5
    assert np.array_equal(back.values, w.values)


def test_step_graphon_validation():
    with pytest.raises(ValueError):
        G.StepGraphon([[0.0, 1.0], [0.5, 0.0]])  # asymmetric
    with pytest.raises(ValueError):
        G.StepGraphon(np.zeros((2, 3)))


# ---------------------------------------------------------------------------
# trims
# ---------------------------------------------------------------------------


def test_trim_pointwise_and_idempotent():
    w = G.PowerLaw(0.3)
    n, alpha = 64, 0.25
    cap = n**alpha
    lt = G.trim(w, n, alpha, mode="level")
    dt = G.trim(w, n, alpha, mode="density")
    xs = np.linspace(0.01, 0.99, 23)
    raw = w.eval(xs[:, None], xs[None, :])
    assert np.allclose(lt.eval(xs[:, None], xs[None, :]), np.minimum(cap, raw))
    assert np.allclose(
        dt.eval(xs[:, None], xs[None, :]), np.minimum(1.0, raw / cap)
    )
    twice = G.trim(lt, n, alpha, mode="level")
    assert np.allclose(
        twice.eval(xs[:, None], xs[None, :]), lt.eval(xs[:, None], xs[None, :])
    )


def test_trim_cell_averages_power_law():
    # cap crosses the kernel inside the lower-left cells; elsewhere the
    # trimmed average must coincide with closed forms
    w = G.PowerLaw(0.249)
    n, alpha = 8, 0.1
    lt = G.trim(w, n, alpha, mode="level")
    grid = lt.cell_average_grid(n)
    assert np.allclose(grid, grid.T, atol=0)
    raw = w.cell_average_grid(n)
    cap = n**alpha
    # away from the singular edges the cap is inactive
    assert np.allclose(grid[1:, 1:], raw[1:, 1:], atol=1e-12)
    # capped averages never exceed the cap; the raw corner one does
    assert np.all(grid <= cap + 1e-12)
    assert raw[0, 0] > cap
    assert grid[0, 1] < raw[0, 1] - 1e-6  # cap bound part of the edge cell
    # independent midpoint oracle on the straddling corner cell
    want = midpoint_cell_average(lt, n, 1, 1, m=4096)
    assert grid[0, 0] == pytest.approx(want, abs=5e-4)
    # single-cell route agrees with the grid route
    assert lt.cell_average(n, 1, 1) == pytest.approx(grid[0, 0], abs=1e-10)


def test_trim_two_level_kernels_closed_form():
    w = G.Bipartite(0.3)
    dt = G.trim(w, 100, 0.5, mode="density")
    # density trim of a 0/1 kernel scales it by n^-alpha
    assert np.allclose(dt.cell_average_grid(4), 0.1 * w.cell_average_grid(4))
    sw = G.SmallWorld(0.2, 0.3)
    lt = G.trim(sw, 100, 0.5, mode="level")  # cap 10 > 1: no-op in value
    assert np.allclose(lt.cell_average_grid(3), sw.cell_average_grid(3), atol=1e-14)


def test_trim_step_graphon_exact():
    v = np.array([[3.0, 0.5], [0.5, 2.0]])
    w = G.StepGraphon(v)
    lt = G.trim(w, 16, 0.25, mode="level")  # cap = 2
    assert np.allclose(lt.cell_average_grid(2), np.minimum(2.0, v), atol=0)
    # incommensurate resolution still exact (values constant per base cell)
    got = lt.cell_average_grid(3)
    want = G.StepGraphon(np.minimum(2.0, v)).cell_average_grid(3)
    assert np.allclose(got, want, atol=0)


def test_trim_validation():
    with pytest.raises(ValueError):
        G.trim(G.Constant(0.5), 10, 1.0)
    with pytest.raises(ValueError):
        G.trim(G.Constant(0.5), 10, 0.5, mode="banana")


# ---------------------------------------------------------------------------
# time schedules
# ---------------------------------------------------------------------------


def test_time_schedule_switching():
    sched = G.TimeSchedule([(0.0, G.Constant(0.2)), (10.0, G.Bipartite(0.5))], t_end=20.0)
    assert sched.eval(0.25, 0.75, t=9.999) == pytest.approx(0.2)
    # right-continuous: the new kernel is active at the switch time
    assert sched.eval(0.25, 0.75, t=10.0) == pytest.approx(1.0)
    assert sched.eval(0.25, 0.75, t=20.0) == pytest.approx(1.0)
    assert sched.cell_average(2, 1, 2, t=0.0) == pytest.approx(0.2)
    assert sched.cell_average(2, 1, 2, t=15.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sched.eval(0.5, 0.5, t=20.5)
    with pytest.raises(ValueError):
        sched.eval(0.5, 0.5, t=-0.1)
    with pytest.raises(ValueError):
        G.TimeSchedule([(0.0, G.Constant(0.2)), (0.0, G.Constant(0.3))], t_end=1.0)
    with pytest.raises(ValueError):
        G.TimeSchedule([(0.0, sched)], t_end=1.0)  # no nesting


# ---------------------------------------------------------------------------
# degrees
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "w",
    [
        G.Constant(0.37),
        G.Bipartite(0.2),
        G.BlockDiagonal([0.25, 0.625]),
        G.KNearestRing(0.3),
        G.SmallWorld(0.2, 0.3),
        G.UniformAttachment(),
        G.PreferentialAttachment(0.3),
        G.PowerLaw(0.249),
        G.SumPowerLaw(0.9),
    ],
    ids=lambda w: w.kind,
)
def test_degree_matches_row_integral(w):
    for x in (0.11, 0.37, 0.9):
        want, _ = integrate.quad(
            lambda y: w.eval(x, min(max(y, 1e-300), 1.0 - 1e-16)), 0.0, 1.0,
            limit=200,
        )
        assert w.degree(x) == pytest.approx(want, abs=1e-7)
    xs = np.array([0.11, 0.37, 0.9])
    got = w.degree_grid(xs)
    want = np.array([w.degree(float(x)) for x in xs])
    assert np.allclose(got, want, atol=1e-12)


def test_degree_sup_estimates():
    assert G.degree_sup(G.KNearestRing(0.3)) == pytest.approx(0.6)
    assert G.degree_sup(G.UniformAttachment(), grid=10_000) == pytest.approx(0.5, abs=1e-8)
    # unbounded degree: the estimate grows with the grid but stays finite
    w = G.SumPowerLaw(0.9)
    d1 = G.degree_sup(w, grid=1000)
    d2 = G.degree_sup(w, grid=10_000)
    assert d1 < d2 < w.d_mu / 0.1  # below the analytic sup


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

ALL_KINDS = [
    G.Constant(0.37),
    G.Bipartite(0.2),
    G.BlockDiagonal([0.25, 0.625]),
    G.KNearestRing(0.3),
    G.SmallWorld(0.2, 0.3),
    G.UniformAttachment(),
    G.PreferentialAttachment(0.3),
    G.PowerLaw(0.249),
    G.SumPowerLaw(0.9),
    G.StepGraphon([[0.2, 1.4], [1.4, 0.0]]),
]

interior = st.floats(min_value=1e-9, max_value=1.0 - 1e-9, exclude_min=False)


@settings(max_examples=60, deadline=None)
@given(x=interior, y=interior)
def test_symmetry_and_nonnegativity(x, y):
    for w in ALL_KINDS:
        vxy = w.eval(x, y)
        vyx = w.eval(y, x)
        assert vxy == vyx
        assert vxy >= 0.0


@settings(max_examples=20, deadline=None)
@given(n=st.integers(min_value=1, max_value=6))
def test_cell_average_grid_is_symmetric(n):
    for w in ALL_KINDS:
        g = w.cell_average_grid(n)
        assert g.shape == (n, n)
        assert np.allclose(g, g.T, atol=1e-12)
        assert np.all(g >= -1e-12)


def test_constant_cell_average_is_p():
    w = G.Constant(0.42)
    for n in (1, 2, 5):
        assert np.allclose(w.cell_average_grid(n), 0.42, atol=0)
    assert G.cell_average(w, 0.0, 4, 2, 3) == pytest.approx(0.42)


def test_uniform_partition():
    p = G.UniformPartition(4)
    assert p.interval(1) == (0.0, 0.25)
    assert p.interval(4) == (0.75, 1.0)
    assert np.allclose(p.midpoints(), [0.125, 0.375, 0.625, 0.875])
    with pytest.raises(IndexError):
        p.interval(0)
    with pytest.raises(IndexError):
        p.interval(5)


def test_validation_errors():
    with pytest.raises(ValueError):
        G.Bipartite(0.0)
    with pytest.raises(ValueError):
        G.KNearestRing(1.0)
    with pytest.raises(ValueError):
        G.SmallWorld(0.6, 0.3)
    with pytest.raises(ValueError):
        G.PowerLaw(0.5)
    with pytest.raises(ValueError):
        G.SumPowerLaw(1.0)
    with pytest.raises(ValueError):
        G.PreferentialAttachment(0.0)
    with pytest.raises(ValueError):
        G.BlockDiagonal([0.5, 0.25])
    with pytest.raises(ValueError):
        G.PowerLaw(0.3).eval(0.0, 0.5)
    with pytest.raises(ValueError):
        G.Constant(0.5).eval(1.2, 0.5)
    with pytest.raises(IndexError):
        G.Constant(0.5).cell_average(4, 0, 1)
    with pytest.raises(IndexError):
        G.cell_average(G.Constant(0.5), 0.0, 4, 1, 5)
    with pytest.raises(ValueError):
        G.lp_norm(G.Constant(0.5), p=3)
