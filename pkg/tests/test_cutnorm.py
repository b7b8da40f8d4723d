"""Cut norm: exact enumeration, ascent bounds, permutation distance."""

import numpy as np
import pytest

from graphon_sir import cutnorm, sampling
from graphon_sir import graphon as G
from graphon_sir.graphs import bipartite


def brute_cut_norm(vals: np.ndarray) -> float:
    """Independent oracle: enumerate every (S, T) pair directly."""
    n = vals.shape[0]
    best = 0.0
    for s_bits in range(1 << n):
        rows = [j for j in range(n) if s_bits >> j & 1]
        if not rows:
            continue
        row_sum = vals[rows].sum(axis=0)
        for t_bits in range(1 << n):
            cols = [k for k in range(n) if t_bits >> k & 1]
            best = max(best, abs(row_sum[cols].sum()))
    return best / n**2


def signed_instance(seed: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, size=(n, n))


def test_two_by_two_literal():
    vals = np.array([[1.0, -1.0], [-1.0, 1.0]])
    res = cutnorm.cut_norm_exact(vals)
    assert res.exact
    assert res.lower == res.upper == 0.25
    assert res.s_mask.sum() == 1 and res.t_mask.sum() == 1
    assert res.witness_value(vals) == 0.25
    assert brute_cut_norm(vals) == 0.25


def test_exact_matches_brute_force():
    for seed in range(5):
        vals = signed_instance(seed, 5)
        assert cutnorm.cut_norm_exact(vals).lower == pytest.approx(
            brute_cut_norm(vals), abs=1e-14
        )


def test_exact_blocked_path_matches_single_block():
    # force the high-bit/low-bit split on a size where brute force still runs
    for seed in (11, 12):
        vals = signed_instance(seed, 6)
        split = cutnorm.cut_norm_exact(vals, _low_bits=3)
        assert split.lower == pytest.approx(brute_cut_norm(vals), abs=1e-14)
        assert split.witness_value(vals) == pytest.approx(split.lower, abs=1e-14)


def test_nonnegative_equals_l1():
    rng = np.random.default_rng(2)
    vals = rng.random((9, 9))
    l1 = vals.mean()
    res = cutnorm.cut_norm_exact(vals)
    assert res.lower == pytest.approx(l1, abs=1e-14)
    heur = cutnorm.cut_norm_heuristic(vals, seed=1)
    assert heur.lower == pytest.approx(l1, abs=1e-14)
    assert heur.upper == pytest.approx(l1, abs=1e-14)
    assert not heur.exact


def test_zero_kernel():
    z = np.zeros((4, 4))
    assert cutnorm.cut_norm_exact(z).lower == 0.0
    assert cutnorm.cut_norm_heuristic(z, seed=0).upper == 0.0


def test_heuristic_sandwich_on_random_instances():
    hits = 0
    for seed in range(200):
        vals = signed_instance(1000 + seed, 12)
        exact = cutnorm.cut_norm_exact(vals).lower
        heur = cutnorm.cut_norm_heuristic(vals, seed=seed)
        assert heur.lower <= exact + 1e-12
        assert exact <= heur.upper + 1e-12
        assert heur.witness_value(vals) == pytest.approx(heur.lower, abs=1e-14)
        if abs(heur.lower - exact) <= 1e-10:
            hits += 1
    assert hits >= 190  # at least 95 percent


def test_negation_symmetry():
    for seed in (3, 4):
        vals = signed_instance(seed, 10)
        a = cutnorm.cut_norm_exact(vals)
        b = cutnorm.cut_norm_exact(-vals)
        assert a.lower == b.lower
        ha = cutnorm.cut_norm_heuristic(vals, seed=7)
        hb = cutnorm.cut_norm_heuristic(-vals, seed=7)
        assert ha.lower == hb.lower
        assert ha.upper == hb.upper


def test_scale_equivariance():
    vals = signed_instance(9, 8)
    base = cutnorm.cut_norm_exact(vals).lower
    assert cutnorm.cut_norm_exact(3.7 * vals).lower == pytest.approx(3.7 * base, rel=1e-12)
    assert cutnorm.cut_norm_exact(-2.0 * vals).lower == pytest.approx(2.0 * base, rel=1e-12)
    h_base = cutnorm.cut_norm_heuristic(vals, seed=5).lower
    h_scaled = cutnorm.cut_norm_heuristic(3.7 * vals, seed=5).lower
    assert h_scaled == pytest.approx(3.7 * h_base, rel=1e-12)


def test_size_guard_directs_to_heuristic():
    with pytest.raises(ValueError, match="heuristic"):
        cutnorm.cut_norm_exact(np.zeros((31, 31)))
    with pytest.raises(ValueError, match="square"):
        cutnorm.cut_norm_exact(np.zeros((3, 4)))


# ---------------------------------------------------------------------------
# permutation distance
# ---------------------------------------------------------------------------


def sym_instance(seed: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    vals = rng.random((n, n))
    return (vals + vals.T) / 2


def test_distance_identity_zero():
    vals = sym_instance(1, 6)
    res = cutnorm.cut_distance_permutation(vals, vals)
    assert res.value == 0.0 and res.exact


def test_distance_recovers_swap():
    vals = sym_instance(2, 5)
    perm = np.array([0, 3, 2, 1, 4])  # swap vertices 1 and 3
    swapped = vals[np.ix_(perm, perm)]
    res = cutnorm.cut_distance_permutation(vals, swapped)
    assert res.value == 0.0
    back = np.array(res.permutation)
    assert np.array_equal(swapped[np.ix_(back, back)], vals)


def test_distance_bipartite_reversed():
    a = bipartite(8, 0.5).as_float()
    reversed_labels = a[::-1, ::-1]
    res = cutnorm.cut_distance_permutation(a, reversed_labels)
    assert res.value == 0.0


def test_distance_heuristic_recovers_reversal():
    vals = sampling.galerkin(G.UniformAttachment(), 0.0, 24).values
    rev = vals[::-1, ::-1]
    res = cutnorm.cut_distance_permutation(vals, rev)
    assert res.value == 0.0
    back = np.array(res.permutation)
    assert np.array_equal(rev[np.ix_(back, back)], vals)


def test_distance_exact_size_guard():
    big = sym_instance(3, 11)
    with pytest.raises(ValueError, match="exact"):
        cutnorm.cut_distance_permutation(big, big, exact=True)
    with pytest.raises(ValueError, match="same partition"):
        cutnorm.cut_distance_permutation(sym_instance(1, 4), sym_instance(1, 5))


def test_distance_nonzero_case():
    u = np.zeros((3, 3))
    w = np.full((3, 3), 0.6)
    res = cutnorm.cut_distance_permutation(u, w)
    assert res.value == pytest.approx(0.6, abs=1e-14)
    assert res.exact


# ---------------------------------------------------------------------------
# time-integrated distance
# ---------------------------------------------------------------------------


def test_time_integrated_zero_for_equal_inputs():
    step = G.StepGraphon(sym_instance(4, 3) / 2)
    assert cutnorm.time_integrated_cut_distance(step, step, t_end=5.0) == 0.0


def test_time_integrated_static_is_horizon_times_norm():
    step = G.StepGraphon(sym_instance(5, 3) / 2)
    w = G.Constant(0.2)
    m = 12
    static = cutnorm.cut_norm_exact(step.cell_average_grid(m) - 0.2).lower
    got = cutnorm.time_integrated_cut_distance(step, w, t_end=3.0)
    assert got == pytest.approx(3.0 * static, rel=1e-13)


def test_time_integrated_schedule_splits_exactly():
    a = G.StepGraphon(sym_instance(6, 3) / 2)
    b = G.StepGraphon(sym_instance(7, 3) / 2)
    sched = G.TimeSchedule([(0.0, a), (1.0, b)], t_end=5.0)
    w = G.Constant(0.2)
    part_a = cutnorm.time_integrated_cut_distance(a, w, t_end=1.0)
    part_b = cutnorm.time_integrated_cut_distance(b, w, t_end=1.0)
    got = cutnorm.time_integrated_cut_distance(sched, w, t_end=2.0)
    assert got == pytest.approx(part_a + part_b, rel=1e-13)
    with pytest.raises(ValueError, match="covers"):
        cutnorm.time_integrated_cut_distance(sched, w, t_end=9.0)


def test_time_integrated_galerkin_decreases():
    w = G.UniformAttachment()
    values = []
    for n in (8, 32, 128):
        step = G.StepGraphon(sampling.galerkin(w, 0.0, n).values)
        values.append(cutnorm.time_integrated_cut_distance(step, w, t_end=1.0))
    assert values[0] > values[1] > values[2] > 0.0


def test_time_integrated_validation():
    step = G.StepGraphon(np.full((2, 2), 0.3))
    with pytest.raises(ValueError, match="positive"):
        cutnorm.time_integrated_cut_distance(step, step, t_end=0.0)
    with pytest.raises(ValueError, match="step kernels"):
        cutnorm.time_integrated_cut_distance(G.Constant(0.3), step, t_end=1.0)
