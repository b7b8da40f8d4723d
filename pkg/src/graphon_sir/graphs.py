"""Deterministic and seeded dense graph generators.

All generators return an AdjacencyMatrix: a symmetric nonnegative dense
matrix with zero diagonal for the simple families, plus provenance
metadata.  Unweighted families use uint8 storage; weighted matrices
(produced by the sampling module) use float64.  Vertices are 1-based in
the documentation and serialized formats, 0-based in ndarray indexing.
"""

from __future__ import annotations

import json

import numpy as np

from . import _rng
from .graphon import StepGraphon


class DegeneratePartitionError(ValueError):
    pass


class RetryExhaustionError(RuntimeError):
    pass


class AdjacencyMatrix:
    """Immutable dense adjacency matrix with provenance metadata."""

    def __init__(self, values: np.ndarray, meta: dict | None = None):
        v = np.asarray(values)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("adjacency matrix must be square")
        if not np.array_equal(v, v.T):
            raise ValueError("adjacency matrix must be symmetric")
        if v.size and v.min() < 0:
            raise ValueError("adjacency weights must be nonnegative")
        v = v.copy()
        v.flags.writeable = False
        self.values = v
        self.n = v.shape[0]
        self.meta = dict(meta or {})

    def as_float(self) -> np.ndarray:
        """Float64 view used by the integrator (copy if stored smaller)."""
        return np.ascontiguousarray(self.values, dtype=np.float64)

    def edge_count(self) -> int:
        """Number of off-diagonal nonzero entries / 2 (unweighted sense)."""
        return int(np.count_nonzero(self.values) - np.count_nonzero(np.diag(self.values))) // 2

    def __repr__(self):
        kind = self.meta.get("kind", "adjacency")
        return f"<AdjacencyMatrix n={self.n} kind={kind}>"


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def bipartite(n: int, theta: float) -> AdjacencyMatrix:
    """Complete bipartite graph: C1 = {1..floor(n*theta)}, C2 the rest."""
    if n < 2:
        raise ValueError("bipartite graph needs n >= 2")
    if not 0.0 < theta < 1.0:
        raise ValueError("bipartite split theta must lie in (0,1)")
    m = int(np.floor(n * theta))
    if m < 1 or m >= n:
        raise DegeneratePartitionError(
            f"floor(n*theta)={m} leaves an empty part for n={n}, theta={theta}"
        )
    side = np.zeros(n, dtype=bool)
    side[:m] = True
    a = (side[:, None] ^ side[None, :]).astype(np.uint8)
    return AdjacencyMatrix(a, {"kind": "bipartite", "n": n, "theta": theta})


def weakly_connected_blocks(n: int, breakpoints) -> AdjacencyMatrix:
    """Complete graph on each block C_k = {j : s_(k-1) < j/n <= s_k} plus a
    single bridge edge joining last(C_k) to first(C_(k+1))."""
    bp = [float(s) for s in breakpoints]
    if any(not 0.0 < s < 1.0 for s in bp) or any(y <= x for x, y in zip(bp, bp[1:])):
        raise ValueError("breakpoints must be strictly increasing inside (0,1)")
    edges = [0.0, *bp, 1.0]
    # block index of each vertex: j/n in (s_(k-1), s_k]
    pos = np.arange(1, n + 1) / n
    block = np.searchsorted(edges, pos, side="left")
    block = np.clip(block, 1, len(edges) - 1) - 1
    sizes = np.bincount(block, minlength=len(edges) - 1)
    if np.any(sizes == 0):
        raise DegeneratePartitionError(
            f"empty block for n={n}, breakpoints={tuple(bp)}"
        )
    a = (block[:, None] == block[None, :]).astype(np.uint8)
    np.fill_diagonal(a, 0)
    # bridges: last vertex of block k to first vertex of block k+1
    starts = np.concatenate(([0], np.cumsum(sizes)))
    for k in range(len(sizes) - 1):
        last_k = starts[k + 1] - 1
        first_next = starts[k + 1]
        a[last_k, first_next] = 1
        a[first_next, last_k] = 1
    return AdjacencyMatrix(
        a, {"kind": "weakly_connected_blocks", "n": n, "breakpoints": tuple(bp)}
    )


def erdos_renyi(n: int, p: float, seed: int) -> AdjacencyMatrix:
    """Independent Bernoulli(p) per unordered pair, zero diagonal."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("edge probability p must lie in [0,1]")
    rng = _rng.generator(seed, "graphs:erdos_renyi")
    a = np.zeros((n, n), dtype=np.uint8)
    # row-wise draws keep memory linear in n (no giant index arrays)
    for j in range(n - 1):
        a[j, j + 1 :] = rng.random(n - 1 - j) < p
    a |= a.T
    return AdjacencyMatrix(a, {"kind": "erdos_renyi", "n": n, "p": p, "seed": seed})


def k_nearest_ring(n: int, k: int) -> AdjacencyMatrix:
    """Edge iff the circular index distance min(|j-l|, n-|j-l|) is < k."""
    if not 1 <= k < n / 2:
        raise ValueError(f"ring neighbor count k={k} outside 1 <= k < n/2")
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None, :])
    d = np.minimum(d, n - d)
    a = ((d > 0) & (d < k)).astype(np.uint8)
    return AdjacencyMatrix(a, {"kind": "k_nearest_ring", "n": n, "k": k})


def watts_strogatz(n: int, k: int, p_rewire: float, seed: int) -> AdjacencyMatrix:
    """Ring lattice with seeded rewiring.

    Ring edges are visited in a fixed order (distance 1..k-1, then base
    vertex); each is independently rewired with probability p_rewire: the
    far endpoint is detached and a replacement target is drawn uniformly,
    rejecting self-loops and already-adjacent targets, up to 100 draws.
    Edge count is preserved exactly.
    """
    if not 0.0 <= p_rewire <= 1.0:
        raise ValueError("rewiring probability must lie in [0,1]")
    base = k_nearest_ring(n, k)
    a = np.array(base.values, dtype=np.uint8)
    rng = _rng.generator(seed, "graphs:watts_strogatz")
    for d in range(1, k):
        for j in range(n):
            if rng.random() >= p_rewire:
                continue
            far = (j + d) % n
            a[j, far] = 0
            a[far, j] = 0
            for _ in range(100):
                target = int(rng.integers(n))
                if target != j and a[j, target] == 0:
                    a[j, target] = 1
                    a[target, j] = 1
                    break
            else:
                raise RetryExhaustionError(
                    f"no rewiring target found for vertex {j + 1} in 100 draws"
                )
    return AdjacencyMatrix(
        a,
        {"kind": "watts_strogatz", "n": n, "k": k, "p_rewire": p_rewire, "seed": seed},
    )


# ---------------------------------------------------------------------------
# conversions and diagnostics
# ---------------------------------------------------------------------------


def step_graphon_of(a: AdjacencyMatrix) -> StepGraphon:
    """The empirical step kernel taking value A_jk on I_j x I_k."""
    return StepGraphon(a.as_float())


def degrees(a: AdjacencyMatrix) -> np.ndarray:
    """Weighted degree vector d_j = sum_k A_jk (row sums)."""
    return a.as_float().sum(axis=1)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def adjacency_to_csv(a: AdjacencyMatrix, path) -> None:
    """Dense CSV, same layout as the step-graphon format (header line n)."""
    with open(path, "w") as fh:
        fh.write(f"{a.n}\n")
        for row in a.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    _write_sidecar(a, path)


def adjacency_from_csv(path) -> AdjacencyMatrix:
    with open(path) as fh:
        n = int(fh.readline().strip())
        rows = [[float(tok) for tok in line.strip().split(",")] for line in fh if line.strip()]
    v = np.array(rows)
    if v.shape != (n, n):
        raise ValueError(f"adjacency CSV declared n={n} but carries shape {v.shape}")
    return AdjacencyMatrix(v, _read_sidecar(path))


def adjacency_to_edge_list(a: AdjacencyMatrix, path) -> None:
    """Text lines `j k weight` (1-based, upper triangle, nonzero only)."""
    ju, ku = np.nonzero(np.triu(a.values, k=1))
    with open(path, "w") as fh:
        fh.write(f"# n={a.n}\n")
        for j, k in zip(ju, ku):
            fh.write(f"{j + 1} {k + 1} {float(a.values[j, k])!r}\n")
    _write_sidecar(a, path)


def adjacency_from_edge_list(path) -> AdjacencyMatrix:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# n="):
            raise ValueError("edge list must start with a '# n=<size>' header")
        n = int(header[4:])
        v = np.zeros((n, n))
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            j, k, w = line.split()
            v[int(j) - 1, int(k) - 1] = float(w)
            v[int(k) - 1, int(j) - 1] = float(w)
    return AdjacencyMatrix(v, _read_sidecar(path))


def _sidecar_path(path):
    return f"{path}.meta.json"


def _write_sidecar(a: AdjacencyMatrix, path) -> None:
    with open(_sidecar_path(path), "w") as fh:
        json.dump({"n": a.n, **a.meta}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_sidecar(path) -> dict:
    try:
        with open(_sidecar_path(path)) as fh:
            return json.load(fh)
    except FileNotFoundError:
        return {}
