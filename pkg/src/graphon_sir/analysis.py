"""Step-function error norms, convergence studies, ensembles, pairings.

Discrete node vectors embed into step functions on [0,1] (node j owns the
j-th cell of the uniform partition); all error functionals below are exact
integrals of those step functions.  The continuum reference is never solved
by a separate scheme: it is the same integrator run on the cell-average
matrix at a much finer resolution.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _rng, sampling, sir
from .graphon import Graphon
from .sampling import NodeField

NORMS = {"l1": 1, "l2": 2}


def _map_indexed(fn, count: int, workers: int) -> list:
    """fn(0..count-1), results in index order regardless of worker count.

    Jobs are independent (single-owner state); callers reduce the returned
    list sequentially, so numerical results do not depend on ``workers``.
    """
    if workers <= 1 or count <= 1:
        return [fn(idx) for idx in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


# ---------------------------------------------------------------------------
# step-function embedding and Lp distances
# ---------------------------------------------------------------------------


def step_embed_norm(u: np.ndarray, v: np.ndarray, p: int = 2, allow_refine: bool = False) -> float:
    """Exact Lp(0,1) distance of two step functions given as cell vectors.

    Equal lengths compare directly; if one partition nests in the other the
    coarse vector is refined exactly.  Non-nesting pairs are an error unless
    ``allow_refine`` permits blowing both up to the least common multiple.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = u.size, v.size
    if nu == 0 or nv == 0:
        raise ValueError("empty step vectors")
    if nu != nv:
        if nu % nv == 0:
            v = np.repeat(v, nu // nv)
        elif nv % nu == 0:
            u = np.repeat(u, nv // nu)
        elif allow_refine:
            m = math.lcm(nu, nv)
            u = np.repeat(u, m // nu)
            v = np.repeat(v, m // nv)
        else:
            raise ValueError(
                f"partitions of sizes {nu} and {nv} do not nest; "
                "pass allow_refine=True to use their common refinement"
            )
    diff = np.abs(u - v)
    if p == 1:
        return float(diff.mean())
    return float(math.sqrt(np.mean(diff * diff)))


def initial_from_profiles(s0, i0, n: int) -> sir.SirState:
    """Cell-average s and i profiles; r takes the exact remainder."""
    s = NodeField(s0, n).values(0.0)
    i = NodeField(i0, n).values(0.0)
    r = np.maximum(1.0 - s - i, 0.0)
    return sir.SirState(s, i, r)


# ---------------------------------------------------------------------------
# error reports and convergence studies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorReport:
    """Sup-over-time step-embedding error of one discrete run vs a reference."""

    scheme: str
    n: int
    norm: str
    sup_error: float
    series: np.ndarray
    times: np.ndarray
    reference_n: int

    def __post_init__(self):
        if self.series.size and not np.isclose(
            self.sup_error, float(self.series.max()), rtol=0.0, atol=0.0
        ):
            raise ValueError("sup_error must equal the max of the series")

    @classmethod
    def from_series(cls, scheme, n, norm, series, times, reference_n) -> "ErrorReport":
        series = np.asarray(series, dtype=np.float64)
        return cls(
            scheme=scheme,
            n=int(n),
            norm=norm,
            sup_error=float(series.max()),
            series=series,
            times=np.asarray(times, dtype=np.float64),
            reference_n=int(reference_n),
        )


def _trajectory_error_series(
    traj: sir.SirTrajectory, ref: sir.SirTrajectory, p: int
) -> np.ndarray:
    if traj.times.size != ref.times.size or not np.allclose(
        traj.times, ref.times, atol=1e-12, rtol=0.0
    ):
        raise ValueError("trajectories must share the output time grid")
    out = np.empty(traj.times.size)
    for row in range(traj.times.size):
        out[row] = (
            step_embed_norm(traj.s[row], ref.s[row], p)
            + step_embed_norm(traj.i[row], ref.i[row], p)
            + step_embed_norm(traj.r[row], ref.r[row], p)
        )
    return out


def convergence_study(
    w: Graphon,
    scheme: str,
    ns: list,
    n_ref: int,
    beta,
    gamma,
    s0,
    i0,
    integrator: sir.IntegratorSpec,
    norm: str = "l2",
    alpha: float | None = None,
    seed: int | None = None,
    rhs_kind: str = "standard",
    workers: int = 1,
) -> list:
    """Compare sampled runs at each n against the cell-average run at n_ref.

    All runs share the scenario profiles (cell-averaged per resolution), the
    integrator settings, and the output grid; each report's series is the
    per-output-time sum of the s, i, r step-embedding errors.
    """
    if norm not in NORMS:
        raise ValueError(f"norm must be one of {sorted(NORMS)}")
    ns = [int(n) for n in ns]
    if n_ref < 4 * max(ns):
        raise ValueError(f"reference resolution {n_ref} is below 4*max(ns)={4 * max(ns)}")
    bad = [n for n in ns if n_ref % n != 0]
    if bad:
        raise ValueError(f"sizes {bad} do not divide the reference resolution {n_ref}")
    p = NORMS[norm]

    ref = sir.integrate(
        integrator,
        rhs_kind,
        sampling.galerkin(w, 0.0, n_ref),
        sampling.coefficient_averages(beta, gamma, n_ref),
        initial_from_profiles(s0, i0, n_ref),
    )
    def run_one(idx: int) -> ErrorReport:
        n = ns[idx]
        a = sampling.sample_matrix(w, scheme, n, alpha=alpha, seed=seed)
        traj = sir.integrate(
            integrator,
            rhs_kind,
            a,
            sampling.coefficient_averages(beta, gamma, n),
            initial_from_profiles(s0, i0, n),
        )
        series = _trajectory_error_series(traj, ref, p)
        return ErrorReport.from_series(scheme, n, norm, series, traj.times, n_ref)

    return _map_indexed(run_one, len(ns), workers)


def error_reports_to_csv(reports: list, path) -> None:
    """Summary table with header scheme,n,norm,sup_error."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("scheme,n,norm,sup_error\n")
        for rep in reports:
            fh.write(f"{rep.scheme},{rep.n},{rep.norm},{rep.sup_error!r}\n")


# ---------------------------------------------------------------------------
# Monte Carlo ensembles
# ---------------------------------------------------------------------------


class _TreeAccumulator:
    """Pairwise sum with a shape fixed by the push count alone.

    Partial sums merge like binary-counter carries, so the reduction tree
    (and therefore the floating-point result) is independent of any
    chunking or scheduling of the pushes.
    """

    def __init__(self):
        self._levels = []

    def push(self, x: np.ndarray) -> None:
        carry = x.astype(np.float64, copy=True)
        level = 0
        while level < len(self._levels) and self._levels[level] is not None:
            carry = self._levels[level] + carry
            self._levels[level] = None
            level += 1
        if level == len(self._levels):
            self._levels.append(carry)
        else:
            self._levels[level] = carry

    def total(self) -> np.ndarray:
        acc = None
        for part in self._levels:
            if part is None:
                continue
            acc = part if acc is None else part + acc
        if acc is None:
            raise ValueError("no terms accumulated")
        return acc


@dataclass(frozen=True)
class MontecarloEnsemble:
    """Replica mean and componentwise variance of sampled-graph runs."""

    n: int
    n_replicas: int
    seeds: tuple
    times: np.ndarray
    mean_states: np.ndarray
    variance: np.ndarray
    excluded: tuple  # (replica index, seed, failed step) triples

    @property
    def n_used(self) -> int:
        return self.n_replicas - len(self.excluded)

    @property
    def s(self) -> np.ndarray:
        return self.mean_states[:, : self.n]

    @property
    def i(self) -> np.ndarray:
        return self.mean_states[:, self.n : 2 * self.n]

    @property
    def r(self) -> np.ndarray:
        return self.mean_states[:, 2 * self.n :]


def replica_seeds(master_seed: int, n_replicas: int) -> list:
    """Deterministic per-replica sampler seeds derived from one master seed."""
    return [
        int(_rng.generator(master_seed, f"replica:{idx}").integers(2**63))
        for idx in range(n_replicas)
    ]


def montecarlo(
    w: Graphon,
    scheme: str,
    n: int,
    n_replicas: int,
    beta,
    gamma,
    s0,
    i0,
    integrator: sir.IntegratorSpec,
    seed: int = 0,
    alpha: float | None = None,
    rhs_kind: str = "standard",
    workers: int = 1,
) -> MontecarloEnsemble:
    """Average n_replicas independent sampled-graph integrations.

    A replica whose integration diverges is excluded and reported in
    ``excluded`` instead of aborting the ensemble.  Reductions use a fixed
    pairwise tree in replica order, so results are bit-reproducible for a
    given seed at any worker count.
    """
    if n_replicas < 1:
        raise ValueError("need at least one replica")
    if scheme == "galerkin":
        raise ValueError("montecarlo averaging needs a random sampling scheme")
    coeff = sampling.coefficient_averages(beta, gamma, n)
    init = initial_from_profiles(s0, i0, n)
    seeds = replica_seeds(seed, n_replicas)

    def run_replica(idx: int):
        a = sampling.sample_matrix(w, scheme, n, alpha=alpha, seed=seeds[idx])
        try:
            return sir.integrate(integrator, rhs_kind, a, coeff, init)
        except sir.DivergenceError as err:
            return err

    sums = _TreeAccumulator()
    sq_sums = _TreeAccumulator()
    times = None
    excluded = []
    # bounded batches keep at most `chunk` trajectories alive; pushes stay in
    # replica order, so the reduction tree is the same at any chunking
    chunk = max(2 * workers, 8)
    for start in range(0, n_replicas, chunk):
        batch = min(chunk, n_replicas - start)
        results = _map_indexed(lambda k: run_replica(start + k), batch, workers)
        for off, res in enumerate(results):
            idx = start + off
            if isinstance(res, sir.DivergenceError):
                excluded.append((idx, seeds[idx], res.step))
                continue
            if times is None:
                times = res.times
            sums.push(res.states)
            sq_sums.push(res.states * res.states)
    n_used = n_replicas - len(excluded)
    if n_used == 0:
        raise sir.DivergenceError(0, 0.0)
    mean = sums.total() / n_used
    variance = np.maximum(sq_sums.total() / n_used - mean * mean, 0.0)
    return MontecarloEnsemble(
        n=n,
        n_replicas=n_replicas,
        seeds=tuple(seeds),
        times=times,
        mean_states=mean,
        variance=variance,
        excluded=tuple(excluded),
    )


def ensemble_to_binary(ens: MontecarloEnsemble, path, dt: float) -> None:
    """Mean trajectory in the shared state-block format."""
    sir.write_state_block(ens.times, ens.mean_states, ens.n, dt, path)


def ensemble_variance_to_csv(ens: MontecarloEnsemble, path) -> None:
    """Long-form variance table with header t,j,var_s,var_i,var_r."""
    n = ens.n
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,j,var_s,var_i,var_r\n")
        for row, t in enumerate(ens.times):
            vs = ens.variance[row, :n]
            vi = ens.variance[row, n : 2 * n]
            vr = ens.variance[row, 2 * n :]
            for j in range(n):
                fh.write(
                    f"{float(t)!r},{j + 1},{float(vs[j])!r},{float(vi[j])!r},{float(vr[j])!r}\n"
                )


# ---------------------------------------------------------------------------
# weak-* pairings against a fixed test-function library
# ---------------------------------------------------------------------------


def _cell_int_one(a, b):
    return b - a


def _cell_int_x(a, b):
    return (b * b - a * a) / 2.0


def _cell_int_sin(a, b):
    two_pi = 2.0 * math.pi
    return (math.cos(two_pi * a) - math.cos(two_pi * b)) / two_pi


def _cell_int_x_sin(a, b):
    # antiderivative of x sin(2 pi x): sin(2 pi x)/(2 pi)^2 - x cos(2 pi x)/(2 pi)
    two_pi = 2.0 * math.pi

    def f(x):
        return math.sin(two_pi * x) / two_pi**2 - x * math.cos(two_pi * x) / two_pi

    return f(b) - f(a)


#: test functions phi(t, x) = g(t) * f(x); each entry maps a cell [a,b] to
#: the exact integral of f, plus the time weight g
PHI_LIBRARY = {
    "1": (_cell_int_one, lambda t, t_end: 1.0),
    "x": (_cell_int_x, lambda t, t_end: 1.0),
    "sin_t": (_cell_int_sin, lambda t, t_end: t / t_end),
    "x_sin_t": (_cell_int_x_sin, lambda t, t_end: t / t_end),
}


def weak_star_pairing(traj: sir.SirTrajectory, phi: str, t_end: float | None = None) -> float:
    """Integral over time and space of i^n(t, x) phi(t, x).

    Space integrals are exact per cell (phi integrated in closed form against
    the step function); the time integral uses the trapezoid rule on the
    trajectory's stored grid.
    """
    if phi not in PHI_LIBRARY:
        raise ValueError(f"unknown test function {phi!r}; use one of {sorted(PHI_LIBRARY)}")
    cell_int, time_weight = PHI_LIBRARY[phi]
    if t_end is None:
        t_end = float(traj.times[-1])
    n = traj.n
    edges = np.linspace(0.0, 1.0, n + 1)
    weights = np.array([cell_int(edges[j], edges[j + 1]) for j in range(n)])

    mask = traj.times <= t_end + 1e-12
    times = traj.times[mask]
    space = traj.i[mask] @ weights
    g = np.array([time_weight(t, t_end) for t in times])
    return float(np.trapezoid(space * g, times))
