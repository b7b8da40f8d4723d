"""Scenario-driven command line.

Subcommands read one TOML scenario file each, run the requested job, and
write every artifact plus a JSON manifest that records the full seed chain.
Unknown config keys are hard errors: a silent typo in a study config is far
more expensive than a failed run.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import _rng, analysis, cutnorm, graphon, graphs, sampling, sir

SEED_CAP = 2**63


class ConfigError(ValueError):
    """A scenario file problem, reported with its table/field context."""


def _check_keys(table: dict, allowed: set, context: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"{context}: unknown key(s) {', '.join(unknown)}")


def _require(table: dict, key: str, context: str):
    if key not in table:
        raise ConfigError(f"{context}: missing required key '{key}'")
    return table[key]


# ---------------------------------------------------------------------------
# graphon construction
# ---------------------------------------------------------------------------

GRAPHON_KINDS = {
    "constant": ("p",),
    "bipartite": ("theta",),
    "block_diagonal": ("breakpoints",),
    "k_nearest_ring": ("r",),
    "small_world": ("p", "r"),
    "uniform_attachment": (),
    "preferential_attachment": ("c",),
    "power_law": ("nu",),
    "sum_power_law": ("mu",),
    "step": ("values", "csv"),
}


def build_graphon(table: dict, context: str = "[graphon]") -> graphon.Graphon:
    kind = _require(table, "kind", context)
    if kind == "schedule":
        raise ConfigError(f"{context}: schedules are expanded by the caller")
    if kind not in GRAPHON_KINDS:
        raise ConfigError(
            f"{context}: unknown kind {kind!r}; use one of "
            f"{', '.join(sorted(GRAPHON_KINDS))} or 'schedule'"
        )
    params = GRAPHON_KINDS[kind]
    _check_keys(table, {"kind", *params}, context)
    try:
        if kind == "constant":
            return graphon.Constant(_require(table, "p", context))
        if kind == "bipartite":
            return graphon.Bipartite(_require(table, "theta", context))
        if kind == "block_diagonal":
            return graphon.BlockDiagonal(_require(table, "breakpoints", context))
        if kind == "k_nearest_ring":
            return graphon.KNearestRing(_require(table, "r", context))
        if kind == "small_world":
            return graphon.SmallWorld(_require(table, "p", context), _require(table, "r", context))
        if kind == "uniform_attachment":
            return graphon.UniformAttachment()
        if kind == "preferential_attachment":
            return graphon.PreferentialAttachment(_require(table, "c", context))
        if kind == "power_law":
            return graphon.PowerLaw(_require(table, "nu", context))
        if kind == "sum_power_law":
            return graphon.SumPowerLaw(_require(table, "mu", context))
        # step kernel: inline grid or CSV file
        if ("values" in table) == ("csv" in table):
            raise ConfigError(f"{context}: step kernels take exactly one of 'values' or 'csv'")
        if "values" in table:
            return graphon.StepGraphon(table["values"])
        csv_path = Path(table["csv"])
        if not csv_path.exists():
            raise ConfigError(f"{context}: step kernel file {csv_path} does not exist")
        return graphon.step_graphon_from_csv(csv_path)
    except ConfigError:
        raise
    except (ValueError, TypeError) as err:
        raise ConfigError(f"{context}: {err}") from err


# ---------------------------------------------------------------------------
# samplers and exact finite generators
# ---------------------------------------------------------------------------

EXACT_KINDS = ("bipartite", "block_diagonal", "k_nearest_ring")
EXTRA_SCHEMES = ("exact", "watts_strogatz")


def _ring_k(w: graphon.KNearestRing, n: int) -> int:
    k = int(round(w.r * n))
    if abs(w.r * n - k) > 1e-9:
        raise ConfigError(f"[sampler]: ring radius {w.r} times n={n} is not an integer")
    return k


def _exact_matrix(gtable: dict, w, n: int, context: str) -> graphs.AdjacencyMatrix:
    kind = gtable["kind"]
    if kind == "bipartite":
        return graphs.bipartite(n, w.theta)
    if kind == "block_diagonal":
        return graphs.weakly_connected_blocks(n, w.breakpoints)
    if kind == "k_nearest_ring":
        return graphs.k_nearest_ring(n, _ring_k(w, n))
    raise ConfigError(
        f"{context}: exact generation covers kinds {', '.join(EXACT_KINDS)}, not {kind!r}"
    )


def sample_scenario_matrix(
    gtable: dict,
    w,
    scheme: str,
    n: int,
    seed: int | None,
    alpha: float | None,
    sampler_table: dict,
    context: str = "[sampler]",
):
    """One adjacency matrix per the scenario's scheme.

    Returns (matrix, effective seed or None for deterministic schemes).
    """
    try:
        if scheme == "exact":
            return _exact_matrix(gtable, w, n, context), None
        if scheme == "watts_strogatz":
            if gtable["kind"] != "k_nearest_ring":
                raise ConfigError(
                    f"{context}: watts_strogatz rewires the ring; set [graphon] kind "
                    "= 'k_nearest_ring'"
                )
            p_rewire = _require(sampler_table, "p_rewire", context)
            eff = int(seed) if seed is not None else 0
            return graphs.watts_strogatz(n, _ring_k(w, n), p_rewire, eff), eff
        if scheme == "galerkin":
            return sampling.sample_matrix(w, scheme, n, alpha=alpha), None
        if seed is None:
            raise ConfigError(f"{context}: scheme {scheme!r} needs a seed")
        return sampling.sample_matrix(w, scheme, n, alpha=alpha, seed=int(seed)), int(seed)
    except ConfigError:
        raise
    except (ValueError, TypeError) as err:
        raise ConfigError(f"{context}: {err}") from err


def build_matrix_schedule(config: dict, n: int, master: int):
    """Expand [graphon] kind='schedule' into [(t, matrix), ...] plus seeds."""
    gtable = config["graphon"]
    _check_keys(gtable, {"kind", "segments"}, "[graphon]")
    segments = _require(gtable, "segments", "[graphon]")
    if not isinstance(segments, list) or not segments:
        raise ConfigError("[graphon]: a schedule needs at least one [[graphon.segments]] entry")
    sampler = config["sampler"]
    default_scheme = sampler.get("scheme")
    pairs = []
    seeds = []
    for idx, seg in enumerate(segments):
        context = f"[[graphon.segments]] #{idx + 1}"
        if "t" not in seg:
            raise ConfigError(f"{context}: missing segment start time 't'")
        local = dict(seg)
        t_start = float(local.pop("t"))
        scheme = local.pop("scheme", default_scheme)
        if scheme is None:
            raise ConfigError(f"{context}: no scheme given and [sampler] has no default")
        alpha = local.pop("alpha", None)
        seg_seed = local.pop("seed", None)
        seg_sampler = {**sampler, **({"p_rewire": local.pop("p_rewire")} if "p_rewire" in local else {})}
        w = build_graphon(local, context)
        if seg_seed is None and scheme not in ("galerkin", "exact"):
            seg_seed = int(_rng.generator(master, f"segment:{idx}").integers(SEED_CAP))
        matrix, eff = sample_scenario_matrix(
            local, w, scheme, n, seg_seed, alpha, seg_sampler, context
        )
        pairs.append((t_start, matrix))
        seeds.append(eff)
    return pairs, seeds


# ---------------------------------------------------------------------------
# coefficients and initial data
# ---------------------------------------------------------------------------


def _step_profile(vals):
    arr = np.asarray(vals, dtype=float)
    m = arr.size

    def prof(x):
        x = np.asarray(x, dtype=float)
        return arr[np.minimum((x * m).astype(int), m - 1)]

    return prof


def coefficient_spec(value, name: str):
    """number | per-node profile array | [[t, value], ...] schedule."""
    context = f"[coefficients] {name}"
    if isinstance(value, bool):
        raise ConfigError(f"{context}: expected a number, profile array, or schedule")
    if isinstance(value, (int, float)):
        if value < 0:
            raise ConfigError(f"{context}: must be nonnegative")
        return float(value)
    if isinstance(value, list) and value:
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            if min(value) < 0:
                raise ConfigError(f"{context}: profile values must be nonnegative")
            return _step_profile(value)
        if all(isinstance(v, list) and len(v) == 2 for v in value):
            pairs = []
            for t_start, level in value:
                if not isinstance(t_start, (int, float)):
                    raise ConfigError(f"{context}: schedule entries are [t, value] pairs")
                pairs.append((float(t_start), coefficient_spec(level, name)))
            return pairs
    raise ConfigError(f"{context}: expected a number, profile array, or schedule of pairs")


INITIAL_PATTERNS = ("first_vertex", "last_vertex", "middle_vertex", "all_vertices", "block", "explicit")
_VERTEX_POSITIONS = {"first_vertex": 0, "last_vertex": -1, "middle_vertex": None}


def _indicator(eps: float, lo: float, hi: float):
    def prof(x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= lo) & (x < hi), eps, 0.0)

    return prof


def _complement(i_prof):
    if np.isscalar(i_prof):
        return 1.0 - i_prof

    def prof(x):
        return 1.0 - i_prof(np.asarray(x, dtype=float))

    return prof


def initial_profiles(table: dict, n: int | None, command: str):
    """(s0, i0) profile specs for the scenario's initial datum.

    Vertex presets need the scenario size n and are therefore rejected for
    resolution sweeps (converge), where the datum must be a fixed profile.
    """
    context = "[initial]"
    pattern = _require(table, "pattern", context)
    if pattern not in INITIAL_PATTERNS:
        raise ConfigError(f"{context}: unknown pattern {pattern!r}; use one of {', '.join(INITIAL_PATTERNS)}")
    if pattern == "explicit":
        _check_keys(table, {"pattern", "s", "i"}, context)
        s_vals = np.asarray(_require(table, "s", context), dtype=float)
        i_vals = np.asarray(_require(table, "i", context), dtype=float)
        if s_vals.shape != i_vals.shape or s_vals.ndim != 1 or not s_vals.size:
            raise ConfigError(f"{context}: s and i must be equal-length nonempty arrays")
        if n is not None and s_vals.size != n:
            raise ConfigError(f"{context}: explicit vectors have length {s_vals.size}, scenario n={n}")
        return _step_profile(s_vals), _step_profile(i_vals)

    eps = float(table.get("epsilon", 1e-8))
    if not 0.0 <= eps <= 1.0:
        raise ConfigError(f"{context}: epsilon must lie in [0,1]")
    if pattern == "all_vertices":
        _check_keys(table, {"pattern", "epsilon"}, context)
        return 1.0 - eps, eps
    if pattern == "block":
        _check_keys(table, {"pattern", "epsilon", "start", "width"}, context)
        start = float(table.get("start", 0.0))
        width = float(_require(table, "width", context))
        if not (0.0 <= start < start + width <= 1.0 + 1e-12):
            raise ConfigError(f"{context}: block [{start}, {start + width}) must sit inside [0,1]")
        i0 = _indicator(eps, start, start + width)
        return _complement(i0), i0
    # single-vertex presets
    _check_keys(table, {"pattern", "epsilon"}, context)
    if command == "converge":
        raise ConfigError(
            f"{context}: pattern {pattern!r} is tied to one resolution; resolution sweeps "
            "need 'all_vertices', 'block', or 'explicit'"
        )
    pos = _VERTEX_POSITIONS[pattern]
    if pos is None:
        pos = n // 2
    elif pos == -1:
        pos = n - 1
    i0 = _indicator(eps, pos / n, (pos + 1) / n)
    return _complement(i0), i0


# ---------------------------------------------------------------------------
# config loading
# ---------------------------------------------------------------------------

_TABLES = {
    "simulate": {"graphon", "sampler", "coefficients", "initial", "integrator", "output"},
    "converge": {"graphon", "sampler", "coefficients", "initial", "integrator", "output"},
    "montecarlo": {"graphon", "sampler", "coefficients", "initial", "integrator", "output"},
    "generate": {"graphon", "sampler", "output"},
    "cutnorm": {"cutnorm", "output"},
}

_SAMPLER_KEYS = {
    "simulate": {"scheme", "n", "alpha", "seed", "p_rewire"},
    "generate": {"scheme", "n", "alpha", "seed", "p_rewire"},
    "montecarlo": {"scheme", "n", "alpha", "seed", "replicas"},
    "converge": {"scheme", "ns", "n_ref", "alpha", "seed", "norm"},
}

_OUTPUT_KEYS = {
    "simulate": {"manifest", "trajectory_csv", "trajectory_bin"},
    "converge": {"manifest", "errors_csv"},
    "montecarlo": {"manifest", "ensemble_bin", "variance_csv"},
    "cutnorm": {"manifest", "result_json"},
    "generate": {"manifest", "adjacency_csv", "edge_list", "degrees_csv", "graphon_csv"},
}


def load_config(path: Path, command: str) -> dict:
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        config = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: {err}") from err

    tables = _TABLES[command]
    _check_keys(config, {"title", "seed", *tables}, str(path))
    for name in tables:
        if name not in config:
            raise ConfigError(f"{path}: missing required table [{name}]")
        if not isinstance(config[name], dict):
            raise ConfigError(f"{path}: [{name}] must be a table")
    seed = config.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"{path}: seed must be a nonnegative integer")

    if "sampler" in tables:
        _check_keys(config["sampler"], _SAMPLER_KEYS[command], "[sampler]")
        scheme = _require(config["sampler"], "scheme", "[sampler]")
        valid = set(sampling.SCHEMES) | (set(EXTRA_SCHEMES) if command in ("simulate", "generate") else set())
        if scheme not in valid:
            raise ConfigError(f"[sampler]: unknown scheme {scheme!r}; use one of {', '.join(sorted(valid))}")
    if "coefficients" in tables:
        _check_keys(config["coefficients"], {"beta", "gamma"}, "[coefficients]")
        _require(config["coefficients"], "beta", "[coefficients]")
        _require(config["coefficients"], "gamma", "[coefficients]")
    if "integrator" in tables:
        table = config["integrator"]
        _check_keys(table, {"method", "dt", "t_end", "thin", "rhs"}, "[integrator]")
        method = _require(table, "method", "[integrator]")
        if method not in sir.TABLEAUS:
            raise ConfigError(f"[integrator]: unknown method {method!r}; use one of {', '.join(sorted(sir.TABLEAUS))}")
        rhs = table.get("rhs", "standard")
        if rhs not in sir.RHS_KINDS:
            raise ConfigError(f"[integrator]: unknown rhs {rhs!r}; use one of {', '.join(sir.RHS_KINDS)}")
    _check_keys(config["output"], _OUTPUT_KEYS[command], "[output]")
    if "manifest" not in config["output"]:
        raise ConfigError("[output]: every run writes a manifest; key 'manifest' is required")
    if command == "cutnorm":
        table = config["cutnorm"]
        _check_keys(table, {"input", "mode", "restarts"}, "[cutnorm]")
        input_path = Path(_require(table, "input", "[cutnorm]"))
        if not input_path.is_absolute():
            # relative inputs live next to the config file, not the cwd
            input_path = path.parent / input_path
        if not input_path.exists():
            raise ConfigError(f"[cutnorm]: input file {input_path} does not exist")
        table["input"] = str(input_path)
        if table.get("mode", "auto") not in ("auto", "exact", "heuristic"):
            raise ConfigError("[cutnorm]: mode must be auto, exact, or heuristic")
    return config


def integrator_spec(table: dict) -> tuple[sir.IntegratorSpec, str]:
    try:
        spec = sir.IntegratorSpec(
            method=table["method"],
            dt=float(_require(table, "dt", "[integrator]")),
            t_end=float(_require(table, "t_end", "[integrator]")),
            thin=int(table.get("thin", 1)),
        )
    except ValueError as err:
        raise ConfigError(f"[integrator]: {err}") from err
    return spec, table.get("rhs", "standard")


# ---------------------------------------------------------------------------
# manifest plumbing
# ---------------------------------------------------------------------------


def manifest_schema() -> dict:
    text = resources.files("graphon_sir").joinpath("manifest.schema.json").read_text()
    return json.loads(text)


def write_manifest_doc(doc: dict, path: Path) -> None:
    jsonschema.validate(doc, manifest_schema())
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


class _Run:
    """Shared bookkeeping for one CLI invocation."""

    def __init__(self, command: str, config: dict, config_path: Path, seed: int, outdir: Path):
        self.command = command
        self.config = config
        self.seed = seed
        self.scenario = config.get("title", config_path.stem)
        self.outdir = outdir
        self.artifacts: dict[str, str] = {}
        self.started = time.perf_counter()

    def path_for(self, key: str, record: bool = True) -> Path:
        rel = self.config["output"][key]
        full = self.outdir / rel
        full.parent.mkdir(parents=True, exist_ok=True)
        if record:
            self.artifacts[key] = str(rel)
        return full

    def finish(self, seed_chain: dict, extra: dict) -> Path:
        doc = {
            "command": self.command,
            "scenario": self.scenario,
            "seed": self.seed,
            "seed_chain": seed_chain,
            "config": self.config,
            "artifacts": self.artifacts,
            "kernel_backend": sir.KERNEL_BACKEND,
            "wall_time_s": time.perf_counter() - self.started,
            "created_utc": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
            **extra,
        }
        path = self.path_for("manifest", record=False)
        write_manifest_doc(doc, path)
        return path


# ---------------------------------------------------------------------------
# subcommand drivers
# ---------------------------------------------------------------------------


def prepare_simulation(config: dict, master_seed: int, command: str = "simulate"):
    """Everything a simulate-style run needs, built from a loaded config.

    Returns (spec, rhs_kind, matrix, coeff, init, seed_chain); the matrix is
    a single adjacency or a [(t, matrix), ...] schedule.
    """
    sampler = config["sampler"]
    n = int(_require(sampler, "n", "[sampler]"))
    spec, rhs_kind = integrator_spec(config["integrator"])

    seed_chain: dict = {}
    if config["graphon"].get("kind") == "schedule":
        matrix, seg_seeds = build_matrix_schedule(config, n, master_seed)
        seed_chain["segments"] = seg_seeds
    else:
        w = build_graphon(config["graphon"])
        scheme = sampler["scheme"]
        seed = sampler.get("seed", master_seed)
        matrix, eff = sample_scenario_matrix(
            config["graphon"], w, scheme, n, seed, sampler.get("alpha"), sampler
        )
        seed_chain["sampler"] = eff

    beta = coefficient_spec(config["coefficients"]["beta"], "beta")
    gamma = coefficient_spec(config["coefficients"]["gamma"], "gamma")
    try:
        coeff = sampling.coefficient_averages(beta, gamma, n)
        s0, i0 = initial_profiles(config["initial"], n, command)
        init = analysis.initial_from_profiles(s0, i0, n)
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(str(err)) from err
    return spec, rhs_kind, matrix, coeff, init, seed_chain


def run_simulate(run: _Run, threads: int) -> int:
    config = run.config
    n = int(_require(config["sampler"], "n", "[sampler]"))
    spec, rhs_kind, matrix, coeff, init, seed_chain = prepare_simulation(
        config, run.seed, run.command
    )

    traj = sir.integrate(spec, rhs_kind, matrix, coeff, init)

    if "trajectory_csv" not in config["output"] and "trajectory_bin" not in config["output"]:
        raise ConfigError("[output]: simulate needs trajectory_csv and/or trajectory_bin")
    if "trajectory_csv" in config["output"]:
        sir.trajectory_to_csv(traj, run.path_for("trajectory_csv"))
    if "trajectory_bin" in config["output"]:
        sir.trajectory_to_binary(traj, run.path_for("trajectory_bin"))

    manifest_path = run.finish(
        seed_chain,
        {
            "integration": {
                "method": traj.method,
                "rhs": traj.rhs_kind,
                "n": traj.n,
                "dt": traj.dt,
                "t_end": float(traj.times[-1]),
                "stored_rows": int(traj.times.size),
                "thin": traj.thin,
            },
            "invariants": traj.report.as_dict(),
        },
    )
    print(
        f"simulate {run.scenario}: n={n}, {traj.times.size} stored rows, "
        f"max |s+i+r-1| = {traj.report.max_sum_deviation:.2e}; manifest {manifest_path}"
    )
    return 0


def run_converge(run: _Run, threads: int) -> int:
    config = run.config
    sampler = config["sampler"]
    scheme = sampler["scheme"]
    ns = [int(v) for v in _require(sampler, "ns", "[sampler]")]
    n_ref = int(_require(sampler, "n_ref", "[sampler]"))
    norm = sampler.get("norm", "l2")
    spec, rhs_kind = integrator_spec(config["integrator"])
    w = build_graphon(config["graphon"])
    beta = coefficient_spec(config["coefficients"]["beta"], "beta")
    gamma = coefficient_spec(config["coefficients"]["gamma"], "gamma")
    s0, i0 = initial_profiles(config["initial"], None, run.command)
    seed = None if scheme == "galerkin" else int(sampler.get("seed", run.seed))

    try:
        reports = analysis.convergence_study(
            w, scheme, ns, n_ref,
            beta=beta, gamma=gamma, s0=s0, i0=i0,
            integrator=spec, norm=norm, alpha=sampler.get("alpha"),
            seed=seed, rhs_kind=rhs_kind, workers=threads,
        )
    except ValueError as err:
        raise ConfigError(f"[sampler]: {err}") from err

    analysis.error_reports_to_csv(reports, run.path_for("errors_csv"))
    sups = [rep.sup_error for rep in reports]
    monotone = all(a > b for a, b in zip(sups, sups[1:]))
    run.finish(
        {"sampler": seed},
        {"results": {"ns": ns, "n_ref": n_ref, "norm": norm, "sup_errors": sups,
                     "monotone_decreasing": monotone}},
    )
    trend = "decreasing" if monotone else "NOT monotone"
    print(f"converge {run.scenario}: {norm} errors over ns={ns} are {trend}; "
          + ", ".join(f"{n}:{e:.3e}" for n, e in zip(ns, sups)))
    return 0


def run_montecarlo(run: _Run, threads: int) -> int:
    config = run.config
    sampler = config["sampler"]
    scheme = sampler["scheme"]
    n = int(_require(sampler, "n", "[sampler]"))
    replicas = int(sampler.get("replicas", n // 2))
    spec, rhs_kind = integrator_spec(config["integrator"])
    w = build_graphon(config["graphon"])
    beta = coefficient_spec(config["coefficients"]["beta"], "beta")
    gamma = coefficient_spec(config["coefficients"]["gamma"], "gamma")
    s0, i0 = initial_profiles(config["initial"], n, run.command)
    seed = int(sampler.get("seed", run.seed))

    try:
        ens = analysis.montecarlo(
            w, scheme, n, replicas,
            beta=beta, gamma=gamma, s0=s0, i0=i0,
            integrator=spec, seed=seed, alpha=sampler.get("alpha"),
            rhs_kind=rhs_kind, workers=threads,
        )
    except ValueError as err:
        raise ConfigError(f"[sampler]: {err}") from err

    if "ensemble_bin" not in config["output"] and "variance_csv" not in config["output"]:
        raise ConfigError("[output]: montecarlo needs ensemble_bin and/or variance_csv")
    if "ensemble_bin" in config["output"]:
        analysis.ensemble_to_binary(ens, run.path_for("ensemble_bin"), spec.dt)
    if "variance_csv" in config["output"]:
        analysis.ensemble_variance_to_csv(ens, run.path_for("variance_csv"))

    run.finish(
        {"replicas": [int(s) for s in ens.seeds]},
        {
            "exclusions": [
                {"replica": int(idx), "seed": int(sd), "step": int(step)}
                for idx, sd, step in ens.excluded
            ],
            "results": {"n": n, "replicas": replicas, "used": ens.n_used},
        },
    )
    print(
        f"montecarlo {run.scenario}: n={n}, {ens.n_used}/{replicas} replicas averaged, "
        f"{len(ens.excluded)} excluded"
    )
    return 0


def run_cutnorm(run: _Run, threads: int) -> int:
    table = run.config["cutnorm"]
    w = graphon.step_graphon_from_csv(Path(table["input"]))
    mode = table.get("mode", "auto")
    restarts = int(table.get("restarts", cutnorm.DEFAULT_RESTARTS))
    try:
        if mode == "exact":
            result = cutnorm.cut_norm_exact(w)
        elif mode == "heuristic":
            result = cutnorm.cut_norm_heuristic(w, restarts=restarts, seed=run.seed)
        else:
            result = cutnorm.cut_norm(w, seed=run.seed)
    except ValueError as err:
        raise ConfigError(f"[cutnorm]: {err}") from err

    doc = {
        "n": w.n,
        "lower": result.lower,
        "upper": result.upper,
        "exact": result.exact,
        "witness": {
            "s": [int(j) + 1 for j in np.nonzero(result.s_mask)[0]],
            "t": [int(j) + 1 for j in np.nonzero(result.t_mask)[0]],
        },
    }
    with open(run.path_for("result_json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

    run.finish(
        {"heuristic": None if result.exact else run.seed},
        {"results": {"lower": result.lower, "upper": result.upper, "exact": result.exact}},
    )
    kind = "exact" if result.exact else "heuristic"
    print(f"cutnorm {run.scenario}: {kind} value in [{result.lower:.6g}, {result.upper:.6g}]")
    return 0


def run_generate(run: _Run, threads: int) -> int:
    config = run.config
    sampler = config["sampler"]
    n = int(_require(sampler, "n", "[sampler]"))
    w = build_graphon(config["graphon"])
    scheme = sampler["scheme"]
    seed = sampler.get("seed", run.seed)
    matrix, eff = sample_scenario_matrix(
        config["graphon"], w, scheme, n, seed, sampler.get("alpha"), sampler
    )

    outputs = config["output"]
    if set(outputs) == {"manifest"}:
        raise ConfigError("[output]: generate needs at least one artifact besides the manifest")
    if "adjacency_csv" in outputs:
        path = run.path_for("adjacency_csv")
        graphs.adjacency_to_csv(matrix, path)
        run.artifacts["adjacency_csv_meta"] = run.artifacts["adjacency_csv"] + ".meta.json"
    if "edge_list" in outputs:
        path = run.path_for("edge_list")
        graphs.adjacency_to_edge_list(matrix, path)
        run.artifacts["edge_list_meta"] = run.artifacts["edge_list"] + ".meta.json"
    if "degrees_csv" in outputs:
        d = graphs.degrees(matrix)
        with open(run.path_for("degrees_csv"), "w", encoding="utf-8") as fh:
            fh.write("j,d\n")
            for j, val in enumerate(d):
                fh.write(f"{j + 1},{float(val)!r}\n")
    if "graphon_csv" in outputs:
        graphon.step_graphon_to_csv(graphs.step_graphon_of(matrix), run.path_for("graphon_csv"))

    run.finish({"sampler": eff}, {"results": {"n": n, "edges": matrix.edge_count()}})
    print(f"generate {run.scenario}: n={n}, {matrix.edge_count()} edges, scheme={scheme}")
    return 0


_DRIVERS = {
    "simulate": run_simulate,
    "converge": run_converge,
    "montecarlo": run_montecarlo,
    "cutnorm": run_cutnorm,
    "generate": run_generate,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphon-sir",
        description="Epidemics on large graphs and their continuum kernel limits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "integrate one scenario and write its trajectory",
        "converge": "compare sampled runs against a fine reference over a size sweep",
        "montecarlo": "average independent sampled-graph runs",
        "cutnorm": "bound the cut norm of a step kernel read from CSV",
        "generate": "sample a graph and write adjacency/degree artifacts",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, type=Path, help="TOML scenario file")
        p.add_argument("--seed", type=int, default=None, help="override the scenario master seed")
        p.add_argument("--threads", type=int, default=1, help="worker count for independent jobs")
        p.add_argument("--out", type=Path, default=Path("."), help="directory for all artifacts")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        config = load_config(args.config, args.command)
        seed = args.seed if args.seed is not None else config.get("seed", 0)
        if seed < 0:
            raise ConfigError("--seed must be nonnegative")
        args.out.mkdir(parents=True, exist_ok=True)
        run = _Run(args.command, config, args.config, int(seed), args.out)
        return _DRIVERS[args.command](run, args.threads)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except sir.DivergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
