"""Command line: config validation, all five subcommands, manifests, reruns."""

import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from graphon_sir import cli, cutnorm, graphon, sir

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

BASE_SIMULATE = """\
title = "unit"
seed = 42

[graphon]
kind = "constant"
p = 0.4

[sampler]
scheme = "galerkin"
n = 16

[coefficients]
beta = 1.0
gamma = 0.25

[initial]
pattern = "all_vertices"
epsilon = 0.01

[integrator]
method = "rk4"
dt = 0.1
t_end = 2.0

[output]
manifest = "run/manifest.json"
trajectory_csv = "run/trajectory.csv"
"""


def write_config(tmp_path, text, name="scenario.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def run_cli(command, config_path, out, *extra):
    return cli.main([command, "--config", str(config_path), "--out", str(out), *extra])


def read_manifest(out, rel="run/manifest.json"):
    doc = json.loads((out / rel).read_text())
    jsonschema.validate(doc, cli.manifest_schema())
    return doc


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "mangle, fragment",
    [
        (lambda t: t + "\nbogus = 1\n", "unknown key"),
        (lambda t: t.replace('scheme = "galerkin"', 'scheme = "typo"'), "unknown scheme"),
        (lambda t: t.replace('method = "rk4"', 'method = "euler"'), "unknown method"),
        (lambda t: t.replace('pattern = "all_vertices"', 'pattern = "nobody"'), "unknown pattern"),
        (lambda t: t.replace('kind = "constant"', 'kind = "mystery"'), "unknown kind"),
        (lambda t: t.replace("[coefficients]\nbeta = 1.0\n", "[coefficients]\n"), "beta"),
        (lambda t: t.replace("seed = 42", "seed = -3"), "seed"),
        (lambda t: t.replace("p = 0.4", "p = -0.4"), "[graphon]"),
        (lambda t: t.replace("beta = 1.0", "beta = -2.0"), "nonnegative"),
        (lambda t: t.replace("[initial]\npattern", '[initial]\nwidth = 0.5\npattern'), "unknown key"),
    ],
)
def test_config_errors_exit_2(tmp_path, capsys, mangle, fragment):
    path = write_config(tmp_path, mangle(BASE_SIMULATE))
    assert run_cli("simulate", path, tmp_path / "out") == 2
    assert fragment in capsys.readouterr().err


def test_missing_table_and_missing_file(tmp_path, capsys):
    path = write_config(tmp_path, '[graphon]\nkind = "constant"\np = 0.1\n')
    assert run_cli("simulate", path, tmp_path / "out") == 2
    assert "missing required table" in capsys.readouterr().err
    assert run_cli("simulate", tmp_path / "absent.toml", tmp_path / "out") == 2
    assert "does not exist" in capsys.readouterr().err


def test_manifest_key_is_required(tmp_path, capsys):
    text = BASE_SIMULATE.replace('manifest = "run/manifest.json"\n', "")
    assert run_cli("simulate", write_config(tmp_path, text), tmp_path / "out") == 2
    assert "manifest" in capsys.readouterr().err


def test_simulate_needs_some_trajectory_artifact(tmp_path, capsys):
    text = BASE_SIMULATE.replace('trajectory_csv = "run/trajectory.csv"\n', "")
    assert run_cli("simulate", write_config(tmp_path, text), tmp_path / "out") == 2
    assert "trajectory_csv" in capsys.readouterr().err


def test_converge_rejects_vertex_presets(tmp_path, capsys):
    text = BASE_SIMULATE.replace('pattern = "all_vertices"', 'pattern = "first_vertex"')
    text = text.replace("scheme = \"galerkin\"\nn = 16", 'scheme = "galerkin"\nns = [4, 8]\nn_ref = 32')
    text = text.replace('trajectory_csv = "run/trajectory.csv"', 'errors_csv = "run/errors.csv"')
    assert run_cli("converge", write_config(tmp_path, text), tmp_path / "out") == 2
    assert "resolution" in capsys.readouterr().err


def test_divergence_exits_3(tmp_path, capsys):
    text = BASE_SIMULATE.replace("beta = 1.0", "beta = 1e5").replace("dt = 0.1", "dt = 10.0")
    text = text.replace("epsilon = 0.01", "epsilon = 0.5").replace("t_end = 2.0", "t_end = 100.0")
    assert run_cli("simulate", write_config(tmp_path, text), tmp_path / "out") == 3
    assert "nonfinite" in capsys.readouterr().err


def test_threads_must_be_positive(tmp_path, capsys):
    path = write_config(tmp_path, BASE_SIMULATE)
    assert run_cli("simulate", path, tmp_path / "out", "--threads", "0") == 2
    assert "threads" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# coefficient and initial-datum parsing
# ---------------------------------------------------------------------------


def test_coefficient_spec_forms():
    assert cli.coefficient_spec(1.5, "beta") == 1.5
    prof = cli.coefficient_spec([1.0, 2.0], "beta")
    assert prof(np.array([0.1, 0.7])).tolist() == [1.0, 2.0]
    sched = cli.coefficient_spec([[0.0, 1.0], [5.0, 2.0]], "beta")
    assert sched[0] == (0.0, 1.0) and sched[1] == (5.0, 2.0)
    with pytest.raises(cli.ConfigError):
        cli.coefficient_spec(True, "beta")
    with pytest.raises(cli.ConfigError):
        cli.coefficient_spec(-1.0, "beta")
    with pytest.raises(cli.ConfigError):
        cli.coefficient_spec([], "beta")
    with pytest.raises(cli.ConfigError):
        cli.coefficient_spec([[0.0, 1.0], [5.0]], "beta")


def test_vertex_presets_hit_exactly_one_cell():
    # the preset must place mass eps on exactly one cell of an n-cell grid
    for pattern, pos in [("first_vertex", 0), ("middle_vertex", 8), ("last_vertex", 15)]:
        s0, i0 = cli.initial_profiles({"pattern": pattern, "epsilon": 0.25}, 16, "simulate")
        from graphon_sir import analysis

        init = analysis.initial_from_profiles(s0, i0, 16)
        expect = np.zeros(16)
        expect[pos] = 0.25
        np.testing.assert_array_equal(init.i, expect)
        np.testing.assert_array_equal(init.s, 1.0 - expect)


def test_explicit_initial_length_checked():
    table = {"pattern": "explicit", "s": [0.9, 0.8], "i": [0.1, 0.2]}
    s0, i0 = cli.initial_profiles(table, 2, "simulate")
    assert i0(np.array([0.2, 0.8])).tolist() == [0.1, 0.2]
    with pytest.raises(cli.ConfigError, match="length"):
        cli.initial_profiles(table, 4, "simulate")
    with pytest.raises(cli.ConfigError, match="equal-length"):
        cli.initial_profiles({"pattern": "explicit", "s": [0.9], "i": [0.1, 0.2]}, None, "simulate")


def test_block_initial_bounds_checked():
    with pytest.raises(cli.ConfigError, match="inside"):
        cli.initial_profiles({"pattern": "block", "start": 0.8, "width": 0.4}, 8, "simulate")


# ---------------------------------------------------------------------------
# subcommands end to end
# ---------------------------------------------------------------------------


def test_simulate_end_to_end(tmp_path, capsys):
    path = write_config(tmp_path, BASE_SIMULATE)
    out = tmp_path / "out"
    assert run_cli("simulate", path, out) == 0
    assert "simulate unit" in capsys.readouterr().out

    header = (out / "run/trajectory.csv").read_text().splitlines()[0]
    assert header == "t,j,s,i,r"
    doc = read_manifest(out)
    assert doc["command"] == "simulate"
    assert doc["seed"] == 42
    assert doc["seed_chain"] == {"sampler": None}  # galerkin is deterministic
    assert doc["artifacts"] == {"trajectory_csv": "run/trajectory.csv"}
    assert doc["integration"]["stored_rows"] == 21
    assert doc["invariants"]["max_sum_deviation"] <= 1e-12
    assert doc["kernel_backend"] == sir.KERNEL_BACKEND


def test_simulate_rerun_is_byte_identical(tmp_path):
    text = BASE_SIMULATE.replace('scheme = "galerkin"', 'scheme = "bernoulli_random"')
    text = text.replace('trajectory_csv = "run/trajectory.csv"',
                        'trajectory_csv = "run/trajectory.csv"\ntrajectory_bin = "run/trajectory.bin"')
    path = write_config(tmp_path, text)
    out_a, out_b, out_c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert run_cli("simulate", path, out_a) == 0
    assert run_cli("simulate", path, out_b) == 0
    assert run_cli("simulate", path, out_c, "--seed", "7") == 0

    for rel in ("run/trajectory.csv", "run/trajectory.bin"):
        assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes()
    assert (out_a / "run/trajectory.csv").read_bytes() != (out_c / "run/trajectory.csv").read_bytes()

    # manifests agree except for the two timing fields
    doc_a, doc_b = read_manifest(out_a), read_manifest(out_b)
    for doc in (doc_a, doc_b):
        doc.pop("wall_time_s")
        doc.pop("created_utc")
    assert doc_a == doc_b


def test_sampler_seed_key_pins_the_matrix(tmp_path):
    # an explicit [sampler] seed wins over --seed, so reruns stay comparable
    text = BASE_SIMULATE.replace('scheme = "galerkin"', 'scheme = "bernoulli_random"\nseed = 11')
    path = write_config(tmp_path, text)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_cli("simulate", path, out_a) == 0
    assert run_cli("simulate", path, out_b, "--seed", "99") == 0
    assert (out_a / "run/trajectory.csv").read_bytes() == (out_b / "run/trajectory.csv").read_bytes()
    assert read_manifest(out_b)["seed_chain"] == {"sampler": 11}


def test_schedule_simulation(tmp_path):
    text = """\
title = "switching"
seed = 5

[graphon]
kind = "schedule"

[[graphon.segments]]
t = 0.0
kind = "constant"
p = 0.6

[[graphon.segments]]
t = 1.0
kind = "bipartite"
theta = 0.5
scheme = "exact"

[sampler]
scheme = "bernoulli_random"
n = 12

[coefficients]
beta = 1.0
gamma = 0.25

[initial]
pattern = "all_vertices"
epsilon = 0.01

[integrator]
method = "rk4"
dt = 0.1
t_end = 2.0

[output]
manifest = "run/manifest.json"
trajectory_csv = "run/trajectory.csv"
"""
    out = tmp_path / "out"
    assert run_cli("simulate", write_config(tmp_path, text), out) == 0
    doc = read_manifest(out)
    segs = doc["seed_chain"]["segments"]
    assert len(segs) == 2
    assert isinstance(segs[0], int)  # derived from the master seed
    assert segs[1] is None  # exact block generation takes no seed


def test_converge_end_to_end(tmp_path, capsys):
    text = """\
title = "sweep"
seed = 3

[graphon]
kind = "uniform_attachment"

[sampler]
scheme = "galerkin"
ns = [4, 8, 16]
n_ref = 64
norm = "l2"

[coefficients]
beta = 1.26
gamma = 0.5

[initial]
pattern = "block"
epsilon = 0.01
width = 0.5

[integrator]
method = "rk4"
dt = 0.1
t_end = 2.0

[output]
manifest = "run/manifest.json"
errors_csv = "run/errors.csv"
"""
    out = tmp_path / "out"
    assert run_cli("converge", write_config(tmp_path, text), out) == 0
    assert "decreasing" in capsys.readouterr().out
    lines = (out / "run/errors.csv").read_text().splitlines()
    assert lines[0] == "scheme,n,norm,sup_error"
    assert len(lines) == 4
    doc = read_manifest(out)
    sups = doc["results"]["sup_errors"]
    assert doc["results"]["monotone_decreasing"] == (sups == sorted(sups, reverse=True))
    assert doc["seed_chain"] == {"sampler": None}


def test_converge_threads_do_not_change_bytes(tmp_path):
    text = """\
title = "threaded-sweep"
seed = 9

[graphon]
kind = "constant"
p = 0.5

[sampler]
scheme = "bernoulli_random"
ns = [4, 8]
n_ref = 32

[coefficients]
beta = 1.0
gamma = 0.25

[initial]
pattern = "all_vertices"
epsilon = 0.01

[integrator]
method = "rk4"
dt = 0.1
t_end = 1.0

[output]
manifest = "run/manifest.json"
errors_csv = "run/errors.csv"
"""
    path = write_config(tmp_path, text)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_cli("converge", path, out_a) == 0
    assert run_cli("converge", path, out_b, "--threads", "3") == 0
    assert (out_a / "run/errors.csv").read_bytes() == (out_b / "run/errors.csv").read_bytes()


def test_montecarlo_end_to_end(tmp_path, capsys):
    text = """\
title = "mc"
seed = 17

[graphon]
kind = "constant"
p = 0.5

[sampler]
scheme = "bernoulli_random"
n = 8
replicas = 6

[coefficients]
beta = 1.0
gamma = 0.25

[initial]
pattern = "all_vertices"
epsilon = 0.05

[integrator]
method = "rk4"
dt = 0.1
t_end = 1.0

[output]
manifest = "run/manifest.json"
ensemble_bin = "run/mean.bin"
variance_csv = "run/variance.csv"
"""
    path = write_config(tmp_path, text)
    out = tmp_path / "out"
    assert run_cli("montecarlo", path, out, "--threads", "2") == 0
    assert "6/6 replicas" in capsys.readouterr().out

    lines = (out / "run/variance.csv").read_text().splitlines()
    assert lines[0] == "t,j,var_s,var_i,var_r"
    times, states, dt = sir.trajectory_read_binary(out / "run/mean.bin")
    assert states.shape == (11, 3 * 8)
    assert dt == pytest.approx(0.1)

    doc = read_manifest(out)
    assert len(doc["seed_chain"]["replicas"]) == 6
    assert doc["exclusions"] == []
    assert doc["results"] == {"n": 8, "replicas": 6, "used": 6}

    # the ensemble is reproducible and threads do not perturb the reduction
    out_b = tmp_path / "b"
    assert run_cli("montecarlo", path, out_b) == 0
    assert (out / "run/mean.bin").read_bytes() == (out_b / "run/mean.bin").read_bytes()
    assert (out / "run/variance.csv").read_bytes() == (out_b / "run/variance.csv").read_bytes()


def test_cutnorm_end_to_end(tmp_path):
    v = np.array([[0.6, -0.2], [-0.2, 0.1]])
    src = tmp_path / "kernel.csv"
    graphon.step_graphon_to_csv(graphon.StepGraphon(v), src)
    text = f"""\
title = "cut"
seed = 4

[cutnorm]
input = "{src.name}"
mode = "exact"

[output]
manifest = "run/manifest.json"
result_json = "run/result.json"
"""
    out = tmp_path / "out"
    assert run_cli("cutnorm", write_config(tmp_path, text), out) == 0
    doc = json.loads((out / "run/result.json").read_text())
    ref = cutnorm.cut_norm_exact(graphon.StepGraphon(v))
    assert doc["exact"] is True
    assert doc["lower"] == pytest.approx(ref.lower)
    assert doc["upper"] == pytest.approx(ref.lower)
    assert doc["n"] == 2
    assert all(1 <= j <= 2 for j in doc["witness"]["s"] + doc["witness"]["t"])
    manifest = read_manifest(out)
    assert manifest["seed_chain"] == {"heuristic": None}


def test_cutnorm_missing_input(tmp_path, capsys):
    text = """\
[cutnorm]
input = "nowhere.csv"

[output]
manifest = "m.json"
result_json = "r.json"
"""
    assert run_cli("cutnorm", write_config(tmp_path, text), tmp_path / "out") == 2
    assert "does not exist" in capsys.readouterr().err


def test_generate_end_to_end(tmp_path):
    text = """\
title = "gen"
seed = 13

[graphon]
kind = "constant"
p = 0.3

[sampler]
scheme = "bernoulli_random"
n = 10

[output]
manifest = "g/manifest.json"
adjacency_csv = "g/adjacency.csv"
edge_list = "g/edges.txt"
degrees_csv = "g/degrees.csv"
graphon_csv = "g/kernel.csv"
"""
    out = tmp_path / "out"
    assert run_cli("generate", write_config(tmp_path, text), out) == 0

    assert (out / "g/degrees.csv").read_text().splitlines()[0] == "j,d"
    assert (out / "g/adjacency.csv.meta.json").exists()
    assert (out / "g/edges.txt.meta.json").exists()
    w = graphon.step_graphon_from_csv(out / "g/kernel.csv")
    assert w.n == 10

    doc = read_manifest(out, "g/manifest.json")
    assert doc["seed_chain"] == {"sampler": 13}
    assert set(doc["artifacts"]) == {
        "adjacency_csv", "adjacency_csv_meta", "edge_list", "edge_list_meta",
        "degrees_csv", "graphon_csv",
    }
    assert doc["results"]["edges"] * 2 == sum(
        float(line.split(",")[1]) for line in (out / "g/degrees.csv").read_text().splitlines()[1:]
    )


def test_generate_needs_an_artifact(tmp_path, capsys):
    text = """\
[graphon]
kind = "constant"
p = 0.3

[sampler]
scheme = "bernoulli_random"
n = 10

[output]
manifest = "g/manifest.json"
"""
    assert run_cli("generate", write_config(tmp_path, text), tmp_path / "out") == 2
    assert "at least one artifact" in capsys.readouterr().err


def test_watts_strogatz_requires_ring_kind(tmp_path, capsys):
    text = BASE_SIMULATE.replace('scheme = "galerkin"', 'scheme = "watts_strogatz"\np_rewire = 0.1')
    assert run_cli("simulate", write_config(tmp_path, text), tmp_path / "out") == 2
    assert "k_nearest_ring" in capsys.readouterr().err


def test_exact_scheme_rejects_unsupported_kind(tmp_path, capsys):
    text = BASE_SIMULATE.replace('scheme = "galerkin"', 'scheme = "exact"')
    assert run_cli("simulate", write_config(tmp_path, text), tmp_path / "out") == 2
    assert "exact generation covers" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# shipped scenarios stay loadable
# ---------------------------------------------------------------------------

SCENARIO_COMMANDS = {
    "converge_uniform_attachment.toml": "converge",
    "montecarlo_erdos_renyi.toml": "montecarlo",
    "cutnorm_two_blocks.toml": "cutnorm",
    "generate_preferential.toml": "generate",
    "generate_bipartite.toml": "generate",
}


def test_all_shipped_scenarios_validate():
    paths = sorted(SCENARIO_DIR.glob("*.toml"))
    assert len(paths) >= 12
    for path in paths:
        command = SCENARIO_COMMANDS.get(path.name, "simulate")
        cli.load_config(path, command)  # raises ConfigError on rot
