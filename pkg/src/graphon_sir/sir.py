"""Networked SIR right-hand sides and fixed-step explicit Runge-Kutta runs.

State layout: a single vector y = [s | i | r] of length 3n.  The stepping
loop lives in a compiled extension (``graphon_sir._stepper``) when available
and in a numpy fallback (``graphon_sir._stepper_py``) otherwise; set
``GRAPHON_SIR_FORCE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from . import graphon as _graphon
from .graphs import AdjacencyMatrix
from .sampling import CoefficientField, NodeField

if os.environ.get("GRAPHON_SIR_FORCE_PYTHON", "") == "1":
    from . import _stepper_py as _kernel
else:
    try:
        from . import _stepper as _kernel  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on build environment
        from . import _stepper_py as _kernel

#: Which stepping loop this process is using: "compiled" or "python".
KERNEL_BACKEND: str = _kernel.BACKEND

SUM_TOLERANCE = 1e-12


class DivergenceError(RuntimeError):
    """The integration produced a nonfinite state."""

    def __init__(self, step: int, t: float):
        super().__init__(f"nonfinite state after step {step} (t = {t:g})")
        self.step = step
        self.t = t


# ---------------------------------------------------------------------------
# Butcher tableaus
# ---------------------------------------------------------------------------

RK4_C = np.array([0.0, 0.5, 0.5, 1.0])
RK4_B = np.array([1 / 6, 1 / 3, 1 / 3, 1 / 6])
RK4_A = np.zeros((4, 4))
RK4_A[1, 0] = 0.5
RK4_A[2, 1] = 0.5
RK4_A[3, 2] = 1.0

# Dormand-Prince eighth-order propagating tableau (the 12 stages that feed
# the advancing solution), run at fixed step: no error estimate, no controller.
DOPRI8_C = np.array(
    [
        0.0,
        0.05260015195876773,
        0.0789002279381516,
        0.1183503419072274,
        0.2816496580927726,
        0.3333333333333333,
        0.25,
        0.3076923076923077,
        0.6512820512820513,
        0.6,
        0.8571428571428571,
        1.0,
    ]
)
DOPRI8_B = np.array(
    [
        0.054293734116568765,
        0.0,
        0.0,
        0.0,
        0.0,
        4.450312892752409,
        1.8915178993145003,
        -5.801203960010585,
        0.3111643669578199,
        -0.1521609496625161,
        0.20136540080403034,
        0.04471061572777259,
    ]
)
DOPRI8_A = np.zeros((12, 12))
DOPRI8_A[1, 0] = 0.05260015195876773
DOPRI8_A[2, 0] = 0.0197250569845379
DOPRI8_A[2, 1] = 0.0591751709536137
DOPRI8_A[3, 0] = 0.02958758547680685
DOPRI8_A[3, 2] = 0.08876275643042054
DOPRI8_A[4, 0] = 0.2413651341592667
DOPRI8_A[4, 2] = -0.8845494793282861
DOPRI8_A[4, 3] = 0.924834003261792
DOPRI8_A[5, 0] = 0.037037037037037035
DOPRI8_A[5, 3] = 0.17082860872947386
DOPRI8_A[5, 4] = 0.12546768756682242
DOPRI8_A[6, 0] = 0.037109375
DOPRI8_A[6, 3] = 0.17025221101954405
DOPRI8_A[6, 4] = 0.06021653898045596
DOPRI8_A[6, 5] = -0.017578125
DOPRI8_A[7, 0] = 0.03709200011850479
DOPRI8_A[7, 3] = 0.17038392571223998
DOPRI8_A[7, 4] = 0.10726203044637328
DOPRI8_A[7, 5] = -0.015319437748624402
DOPRI8_A[7, 6] = 0.008273789163814023
DOPRI8_A[8, 0] = 0.6241109587160757
DOPRI8_A[8, 3] = -3.3608926294469414
DOPRI8_A[8, 4] = -0.868219346841726
DOPRI8_A[8, 5] = 27.59209969944671
DOPRI8_A[8, 6] = 20.154067550477894
DOPRI8_A[8, 7] = -43.48988418106996
DOPRI8_A[9, 0] = 0.47766253643826434
DOPRI8_A[9, 3] = -2.4881146199716677
DOPRI8_A[9, 4] = -0.590290826836843
DOPRI8_A[9, 5] = 21.230051448181193
DOPRI8_A[9, 6] = 15.279233632882423
DOPRI8_A[9, 7] = -33.28821096898486
DOPRI8_A[9, 8] = -0.020331201708508627
DOPRI8_A[10, 0] = -0.9371424300859873
DOPRI8_A[10, 3] = 5.186372428844064
DOPRI8_A[10, 4] = 1.0914373489967295
DOPRI8_A[10, 5] = -8.149787010746927
DOPRI8_A[10, 6] = -18.52006565999696
DOPRI8_A[10, 7] = 22.739487099350505
DOPRI8_A[10, 8] = 2.4936055526796523
DOPRI8_A[10, 9] = -3.0467644718982196
DOPRI8_A[11, 0] = 2.273310147516538
DOPRI8_A[11, 3] = -10.53449546673725
DOPRI8_A[11, 4] = -2.0008720582248625
DOPRI8_A[11, 5] = -17.9589318631188
DOPRI8_A[11, 6] = 27.94888452941996
DOPRI8_A[11, 7] = -2.8589982771350235
DOPRI8_A[11, 8] = -8.87285693353063
DOPRI8_A[11, 9] = 12.360567175794303
DOPRI8_A[11, 10] = 0.6433927460157636

for _a, _b, _c in ((RK4_A, RK4_B, RK4_C), (DOPRI8_A, DOPRI8_B, DOPRI8_C)):
    for _arr in (_a, _b, _c):
        _arr.setflags(write=False)

TABLEAUS = {
    "rk4": (RK4_A, RK4_B, RK4_C),
    "dopri8": (DOPRI8_A, DOPRI8_B, DOPRI8_C),
}

RHS_KINDS = ("standard", "self_interaction")

MatrixLike = Union[AdjacencyMatrix, Sequence]


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SirState:
    """Per-node susceptible/infected/recovered fractions."""

    s: np.ndarray
    i: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        s = np.ascontiguousarray(self.s, dtype=np.float64)
        i = np.ascontiguousarray(self.i, dtype=np.float64)
        r = np.ascontiguousarray(self.r, dtype=np.float64)
        if not (s.ndim == i.ndim == r.ndim == 1) or not (s.size == i.size == r.size):
            raise ValueError("s, i, r must be 1-d vectors of equal length")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return self.s.size

    def validate(self) -> None:
        """Check the admissibility box: components in [0,1], sums equal 1."""
        for name, v in (("s", self.s), ("i", self.i), ("r", self.r)):
            if np.any(v < 0.0) or np.any(v > 1.0):
                raise ValueError(f"initial {name} outside [0, 1]")
        dev = np.abs(self.s + self.i + self.r - 1.0).max()
        if dev > SUM_TOLERANCE:
            raise ValueError(f"initial s+i+r deviates from 1 by {dev:g}")

    def packed(self) -> np.ndarray:
        return np.concatenate([self.s, self.i, self.r])


@dataclass(frozen=True)
class SirDerivative:
    """Time derivative of a state; components sum to zero per node."""

    ds: np.ndarray
    di: np.ndarray
    dr: np.ndarray


@dataclass(frozen=True)
class IntegratorSpec:
    """Fixed-step explicit Runge-Kutta configuration."""

    method: str
    dt: float
    t_end: float
    thin: int = 1

    def __post_init__(self):
        if self.method not in TABLEAUS:
            raise ValueError(f"unknown method {self.method!r}; use one of {sorted(TABLEAUS)}")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")

    def step_plan(self) -> tuple[int, float]:
        """Number of steps and the (possibly shortened) final step size."""
        n_full = int(math.floor(self.t_end / self.dt + 1e-9))
        rem = self.t_end - n_full * self.dt
        if rem > 1e-9 * max(self.dt, self.t_end):
            return n_full + 1, rem
        return max(n_full, 1), self.dt if n_full else self.t_end


@dataclass(frozen=True)
class InvariantReport:
    """Worst-case constraint deviations observed across all accepted steps.

    All fields are maxima clipped below at zero, so 0.0 means "never violated".
    """

    max_sum_deviation: float
    max_above_one: float
    max_below_zero: float
    max_s_increase: float
    max_r_decrease: float

    @classmethod
    def from_stats(cls, stats: np.ndarray) -> "InvariantReport":
        clipped = np.maximum(stats, 0.0)
        return cls(*(float(v) for v in clipped))

    def as_dict(self) -> dict:
        return {
            "max_sum_deviation": self.max_sum_deviation,
            "max_above_one": self.max_above_one,
            "max_below_zero": self.max_below_zero,
            "max_s_increase": self.max_s_increase,
            "max_r_decrease": self.max_r_decrease,
        }


@dataclass(frozen=True)
class SirTrajectory:
    """Stored states on a uniform grid (plus the exact horizon endpoint)."""

    times: np.ndarray
    states: np.ndarray  # (len(times), 3n), rows [s | i | r]
    n: int
    dt: float
    method: str
    rhs_kind: str
    thin: int
    report: InvariantReport
    fingerprint: dict = field(default_factory=dict)

    @property
    def s(self) -> np.ndarray:
        return self.states[:, : self.n]

    @property
    def i(self) -> np.ndarray:
        return self.states[:, self.n : 2 * self.n]

    @property
    def r(self) -> np.ndarray:
        return self.states[:, 2 * self.n :]

    def __len__(self) -> int:
        return self.times.size

    def state_at(self, idx: int) -> SirState:
        row = self.states[idx]
        n = self.n
        return SirState(row[:n].copy(), row[n : 2 * n].copy(), row[2 * n :].copy())


# ---------------------------------------------------------------------------
# Right-hand sides (reference evaluation, used for single calls and tests;
# the stepping loop re-implements the same arithmetic in the kernel)
# ---------------------------------------------------------------------------


def _check_dims(n_state: int, n_matrix: int, n_coeff: int) -> None:
    if not (n_state == n_matrix == n_coeff):
        raise ValueError(
            f"dimension mismatch: state n={n_state}, matrix n={n_matrix}, coefficients n={n_coeff}"
        )


def _rhs_arrays(
    s: np.ndarray,
    i: np.ndarray,
    a: np.ndarray,
    beta: np.ndarray,
    gamma: np.ndarray,
    self_interaction: bool,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = s.size
    m = a @ (beta * i)
    infection = s * m / n
    if self_interaction:
        infection = infection + beta * s * i
    recovery = gamma * i
    return -infection, infection - recovery, recovery


def rhs_standard(state: SirState, a: AdjacencyMatrix, coeff: CoefficientField, t: float) -> SirDerivative:
    """Pairwise-interaction derivative with the 1/n mean-field scaling."""
    _check_dims(state.n, a.n, coeff.n)
    ds, di, dr = _rhs_arrays(
        state.s, state.i, a.as_float(), coeff.beta.values(t), coeff.gamma.values(t), False
    )
    return SirDerivative(ds, di, dr)


def rhs_self_interaction(
    state: SirState, a: AdjacencyMatrix, coeff: CoefficientField, t: float
) -> SirDerivative:
    """Variant with the additional unscaled within-node term beta_j s_j i_j."""
    _check_dims(state.n, a.n, coeff.n)
    ds, di, dr = _rhs_arrays(
        state.s, state.i, a.as_float(), coeff.beta.values(t), coeff.gamma.values(t), True
    )
    return SirDerivative(ds, di, dr)


# ---------------------------------------------------------------------------
# Averaged model matrix
# ---------------------------------------------------------------------------


def averaged_model_matrix(w: _graphon.Graphon, n: int, alpha: float, t: float = 0.0) -> AdjacencyMatrix:
    """Dense model matrix n^alpha * cell averages of min(1, n^-alpha W).

    This is the deterministic counterpart of the sparse averaged sampler: the
    sampler draws Bernoulli edges with exactly these success probabilities
    (and a zeroed diagonal), so off-diagonal expectations agree entrywise.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    trimmed = _graphon.trim(w, n, alpha, mode="density")
    values = float(n) ** alpha * trimmed.cell_average_grid(n, t)
    return AdjacencyMatrix(values, meta={"scheme": "averaged_model", "alpha": alpha, "n": n})


# ---------------------------------------------------------------------------
# Schedules: normalize matrices and coefficient fields to (times, stack)
# ---------------------------------------------------------------------------


def _matrix_schedule(a: MatrixLike) -> tuple[np.ndarray, np.ndarray, int]:
    if isinstance(a, AdjacencyMatrix):
        mat = a.as_float()
        return np.zeros(1), mat[None, :, :].copy(), a.n
    pairs = list(a)
    if not pairs:
        raise ValueError("matrix schedule must not be empty")
    times = np.array([float(ts) for ts, _ in pairs])
    if times[0] != 0.0:
        raise ValueError("matrix schedule must start at t = 0")
    if np.any(np.diff(times) <= 0):
        raise ValueError("matrix schedule times must be strictly increasing")
    mats = [m for _, m in pairs]
    n = mats[0].n
    if any(m.n != n for m in mats):
        raise ValueError("all matrices in a schedule must share the same size")
    stack = np.stack([m.as_float() for m in mats])
    return times, stack, n


def _field_schedule(f: NodeField) -> tuple[np.ndarray, np.ndarray]:
    times = np.array(f.switch_times)
    if times[0] > 0.0:
        raise ValueError("coefficient schedule must cover t = 0")
    stack = np.stack([f.values(ts) for ts in times]).astype(np.float64)
    return times, stack


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------


def integrate(
    spec: IntegratorSpec,
    rhs_kind: str,
    a: MatrixLike,
    coeff: CoefficientField,
    initial: SirState,
    fingerprint: dict | None = None,
) -> SirTrajectory:
    """Run a fixed-step explicit Runge-Kutta integration.

    ``a`` is a single adjacency matrix or a right-continuous schedule given
    as a sequence of (t_start, matrix) pairs; coefficient schedules are
    queried at every stage time t + c_i * dt.  No clipping is applied to the
    evolving state; constraint violations are recorded in the report.
    """
    if rhs_kind not in RHS_KINDS:
        raise ValueError(f"unknown rhs kind {rhs_kind!r}; use one of {RHS_KINDS}")
    a_times, a_stack, n_mat = _matrix_schedule(a)
    _check_dims(initial.n, n_mat, coeff.n)
    initial.validate()

    b_times, b_stack = _field_schedule(coeff.beta)
    g_times, g_stack = _field_schedule(coeff.gamma)
    rk_a, rk_b, rk_c = TABLEAUS[spec.method]

    n_steps, last_h = spec.step_plan()
    store_steps = list(range(spec.thin, n_steps + 1, spec.thin))
    if not store_steps or store_steps[-1] != n_steps:
        store_steps.append(n_steps)
    store = np.array(store_steps, dtype=np.int64)

    n = initial.n
    out_states = np.empty((store.size + 1, 3 * n))
    out_states[0] = initial.packed()
    stats = np.zeros(5)

    bad = _kernel.run(
        np.ascontiguousarray(rk_a),
        np.ascontiguousarray(rk_b),
        np.ascontiguousarray(rk_c),
        a_times,
        a_stack,
        b_times,
        b_stack,
        g_times,
        g_stack,
        out_states[0].copy(),
        float(spec.dt),
        int(n_steps),
        float(last_h),
        store,
        rhs_kind == "self_interaction",
        out_states,
        stats,
    )
    if bad >= 0:
        raise DivergenceError(bad, min(bad * spec.dt, spec.t_end))

    times = np.empty(store.size + 1)
    times[0] = 0.0
    times[1:] = store * spec.dt
    times[-1] = spec.t_end
    return SirTrajectory(
        times=times,
        states=out_states,
        n=n,
        dt=spec.dt,
        method=spec.method,
        rhs_kind=rhs_kind,
        thin=spec.thin,
        report=InvariantReport.from_stats(stats),
        fingerprint=dict(fingerprint or {}),
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_BIN_MAGIC = b"SIRTRAJ1"


def trajectory_to_csv(traj: SirTrajectory, path) -> None:
    """Long-form CSV with header t,j,s,i,r and 1-based node indices."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,j,s,i,r\n")
        for row, t in enumerate(traj.times):
            s, i, r = traj.s[row], traj.i[row], traj.r[row]
            for j in range(traj.n):
                fh.write(
                    f"{float(t)!r},{j + 1},{float(s[j])!r},{float(i[j])!r},{float(r[j])!r}\n"
                )


def trajectory_read_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Read a long-form trajectory CSV back into (times, s, i, r) arrays."""
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(raw[:, 0])
    n = int(raw[:, 1].max())
    if raw.shape[0] != times.size * n:
        raise ValueError("trajectory CSV is not a full grid of (t, j) rows")
    order = np.lexsort((raw[:, 1], raw[:, 0]))
    grid = raw[order]
    s = grid[:, 2].reshape(times.size, n)
    i = grid[:, 3].reshape(times.size, n)
    r = grid[:, 4].reshape(times.size, n)
    return times, s, i, r


def write_state_block(times: np.ndarray, states: np.ndarray, n: int, dt: float, path) -> None:
    """Compact block: magic, n, stored rows, dt, times, then row-major states."""
    with open(path, "wb") as fh:
        fh.write(_BIN_MAGIC)
        fh.write(struct.pack("<qqd", n, times.size, dt))
        fh.write(np.ascontiguousarray(times, dtype=np.float64).tobytes())
        fh.write(np.ascontiguousarray(states, dtype=np.float64).tobytes())


def trajectory_to_binary(traj: SirTrajectory, path) -> None:
    write_state_block(traj.times, traj.states, traj.n, traj.dt, path)


def trajectory_read_binary(path) -> tuple[np.ndarray, np.ndarray, float]:
    """Read the binary block back into (times, states, dt)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_BIN_MAGIC))
        if magic != _BIN_MAGIC:
            raise ValueError("not a trajectory binary block")
        n, rows, dt = struct.unpack("<qqd", fh.read(24))
        times = np.frombuffer(fh.read(8 * rows), dtype=np.float64).copy()
        states = np.frombuffer(fh.read(8 * rows * 3 * n), dtype=np.float64).copy()
    return times, states.reshape(rows, 3 * n), dt


def trajectory_manifest(
    traj: SirTrajectory,
    scenario: dict,
    seed: int | None,
    wall_time_s: float,
) -> dict:
    """Run record: scenario, seed, invariant report, wall time."""
    return {
        "scenario": scenario,
        "seed": seed,
        "method": traj.method,
        "rhs": traj.rhs_kind,
        "n": traj.n,
        "dt": traj.dt,
        "t_end": float(traj.times[-1]),
        "stored_rows": int(traj.times.size),
        "thin": traj.thin,
        "invariants": traj.report.as_dict(),
        "wall_time_s": wall_time_s,
        "kernel_backend": KERNEL_BACKEND,
    }


def write_manifest(manifest: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
