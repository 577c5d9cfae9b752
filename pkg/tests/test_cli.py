import json

import pytest

from cqlqg.cli.launcher import (
    EXIT_DIMENSION,
    EXIT_FILE,
    EXIT_FLOW_ESCAPED,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_PR_FAILED,
    EXIT_STABILIZATION,
    exit_code,
    main,
)
from cqlqg.core.exceptions import (
    ArmijoExhaustedError,
    ConfigurationError,
    ControllerFileError,
    DimensionError,
    FlowEscapedError,
    NoUniqueSolutionError,
    PlantFileError,
    PreconditionError,
    StabilizationNotFoundError,
    UnstableSystemError,
)
from cqlqg.core.fileio import fixture_path, load_controller, read_trace, store_controller
from cqlqg.core.model import ControllerParams


@pytest.fixture
def run(tmp_path):
    def _run(*args):
        return main(["-q", "--log-dir", str(tmp_path), *args])

    return _run


def test_check_example_plants(run, capsys):
    assert run("check", fixture_path("example8.plant")) == EXIT_OK
    out = capsys.readouterr().out
    assert "eq19" in out and "open-loop eigenvalues" in out
    assert run("check", fixture_path("example10.plant"), "--tol", "1e-12") == EXIT_OK


def test_check_reports_failing_plant(run, tmp_path):
    doc = json.loads(open(fixture_path("example10.plant")).read())
    doc["A"] = [[0.1, 0.1], [-0.1, 0.1]]
    path = tmp_path / "shifted.plant"
    path.write_text(json.dumps(doc))
    assert run("check", str(path)) == EXIT_PR_FAILED


def test_check_truncated_file(run, tmp_path, capsys):
    text = open(fixture_path("example8.plant")).read()
    path = tmp_path / "truncated.plant"
    path.write_text(text[:100])
    assert run("check", str(path)) == EXIT_FILE
    assert "PlantFileError" in capsys.readouterr().err


def test_cost_of_example10_optimum(run, capsys):
    code = run("cost", fixture_path("example10.plant"), fixture_path("example10_opt.controller"))
    assert code == EXIT_OK
    out = capsys.readouterr().out
    cost_row = next(line for line in out.splitlines() if line.startswith("cost") and "(" not in line)
    assert float(cost_row.split()[-1]) == pytest.approx(2.0418, abs=5e-3)
    assert "closed-loop eigenvalues" in out
    assert "eq20" in out


def test_cost_of_destabilizing_controller(run, tmp_path, capsys):
    path = tmp_path / "zero.controller"
    store_controller(ControllerParams.zeros(2, 2, 2), path)
    assert run("cost", fixture_path("example8.plant"), str(path)) == EXIT_OK
    out = capsys.readouterr().out
    assert "inf" in out
    assert "gradient norm" not in out


def test_cost_dimension_mismatch(run, capsys):
    code = run("cost", fixture_path("example9.plant"), fixture_path("example8_opt.controller"))
    assert code == EXIT_DIMENSION
    assert "DimensionError" in capsys.readouterr().err


def test_synthesize_from_initial_controller(run, tmp_path):
    out_c, out_t = tmp_path / "best.controller", tmp_path / "best.csv"
    code = run(
        "synthesize",
        fixture_path("example8.plant"),
        "--init",
        fixture_path("example8_opt.controller"),
        "--max-iters",
        "50",
        "-c",
        str(out_c),
        "-t",
        str(out_t),
    )
    assert code == EXIT_OK
    doc = json.loads(out_c.read_text())
    assert doc["stabilizing"] is True and doc["cost"] <= 12.1036
    assert load_controller(str(out_c)).shape == (2, 2, 2)
    costs = read_trace(str(out_t))["cost"].to_list()
    assert all(b < a for a, b in zip(costs, costs[1:]))


def test_synthesize_epsilon_zero_stops_at_max_iters(run, capsys):
    code = run(
        "synthesize",
        fixture_path("example10.plant"),
        "--init",
        fixture_path("example10_opt.controller"),
        "--epsilon",
        "0",
        "--max-iters",
        "5",
    )
    assert code == EXIT_OK
    assert "max_iters" in capsys.readouterr().out


def test_synthesize_is_deterministic(run, tmp_path):
    traces = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        args = ["synthesize", fixture_path("example10.plant"), "--starts", "2", "--seed", "3"]
        assert run(*args, "--max-iters", "10", "-t", str(path)) == EXIT_OK
        traces.append(path.read_bytes())
    assert traces[0] == traces[1]


def test_synthesize_without_stabilizing_start(run, tmp_path, capsys):
    conf = tmp_path / "config.json"
    conf.write_text(json.dumps({"random_search": {"scale": 0.0, "max_tries": 3}}))
    code = run("--config", str(conf), "synthesize", fixture_path("example8.plant"), "--starts", "1")
    assert code == EXIT_STABILIZATION
    assert "StabilizationNotFoundError" in capsys.readouterr().err


def test_synthesize_rejects_bad_sigma(run, capsys):
    code = run("synthesize", fixture_path("example8.plant"), "--sigma", "1.5")
    assert code == EXIT_FILE
    assert "ConfigurationError" in capsys.readouterr().err


def test_unreadable_config(tmp_path):
    conf = tmp_path / "broken.json"
    conf.write_text("{")
    assert main(["--config", str(conf), "check", fixture_path("example8.plant")]) == EXIT_FILE


def test_flow_zero_steps(run, tmp_path):
    path = tmp_path / "flow.csv"
    code = run(
        "flow",
        fixture_path("example10.plant"),
        fixture_path("example10_opt.controller"),
        "--steps",
        "0",
        "-t",
        str(path),
    )
    assert code == EXIT_OK
    assert read_trace(str(path)).height == 1


def test_rate_of_example10_optimum(run, capsys):
    code = run("rate", fixture_path("example10.plant"), fixture_path("example10_opt.controller"))
    assert code == EXIT_OK
    assert "tangent_dim" in capsys.readouterr().out


def test_plot_writes_image(run, tmp_path):
    trace = tmp_path / "trace.csv"
    code = run(
        "synthesize",
        fixture_path("example8.plant"),
        "--init",
        fixture_path("example8_opt.controller"),
        "--max-iters",
        "20",
        "-t",
        str(trace),
    )
    assert code == EXIT_OK
    image = tmp_path / "trace.png"
    assert run("plot", str(trace), "-o", str(image), "--floor-offset", "1e-3") == EXIT_OK
    assert image.stat().st_size > 0


def test_log_file_written(run, tmp_path):
    run("check", fixture_path("example8.plant"))
    assert "check - " in (tmp_path / "cqlqg.log").read_text()


@pytest.mark.parametrize(
    "err, code",
    [
        (PlantFileError("x"), EXIT_FILE),
        (ControllerFileError("x"), EXIT_FILE),
        (ConfigurationError("x"), EXIT_FILE),
        (FileNotFoundError("x"), EXIT_FILE),
        (StabilizationNotFoundError("x"), EXIT_STABILIZATION),
        (UnstableSystemError("x"), EXIT_STABILIZATION),
        (PreconditionError("x"), EXIT_STABILIZATION),
        (FlowEscapedError("x"), EXIT_FLOW_ESCAPED),
        (DimensionError("x"), EXIT_DIMENSION),
        (NoUniqueSolutionError("x"), EXIT_NUMERICAL),
        (ArmijoExhaustedError("x"), EXIT_NUMERICAL),
    ],
)
def test_exit_code_mapping(err, code):
    assert exit_code(err) == code


def _write_config(tmp_path, doc):
    path = tmp_path / "override.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_cost_honours_configured_margin(run, tmp_path, capsys):
    conf = _write_config(tmp_path, {"solver": {"hurwitz_margin": 0.5}})
    pair = (fixture_path("example10.plant"), fixture_path("example10_opt.controller"))
    code = run("--config", conf, "cost", *pair)
    assert code == EXIT_OK
    rows = {line.split()[0]: line.split()[-1] for line in capsys.readouterr().out.splitlines() if line.strip()}
    assert rows["stabilizing"] == "False"
    assert rows["cost"] == "inf"


def test_cost_honours_configured_lyapunov_method(run, tmp_path, monkeypatch, capsys):
    import cqlqg.core.matlib as matlib

    def kron_forbidden(A, W):
        raise AssertionError("kron backend used despite lyapunov_method = schur")

    monkeypatch.setattr(matlib, "_lyapunov_kron", kron_forbidden)
    conf = _write_config(tmp_path, {"lyapunov_method": "schur"})
    pair = (fixture_path("example10.plant"), fixture_path("example10_opt.controller"))
    code = run("--config", conf, "cost", *pair)
    assert code == EXIT_OK
    out = capsys.readouterr().out
    cost_row = next(line for line in out.splitlines() if line.startswith("cost") and "(" not in line)
    assert float(cost_row.split()[-1]) == pytest.approx(2.0418, abs=5e-3)


def test_flow_honours_configured_margin(run, tmp_path, capsys):
    conf = _write_config(tmp_path, {"solver": {"hurwitz_margin": 0.5}})
    code = run(
        "--config",
        conf,
        "flow",
        fixture_path("example10.plant"),
        fixture_path("example10_opt.controller"),
        "--steps",
        "2",
    )
    assert code == EXIT_STABILIZATION
    assert "PreconditionError" in capsys.readouterr().err


def test_stabilization_failure_reports_tries(run, tmp_path, capsys):
    conf = _write_config(tmp_path, {"random_search": {"scale": 0.0, "max_tries": 3}})
    code = run("--config", conf, "synthesize", fixture_path("example8.plant"), "--starts", "2")
    assert code == EXIT_STABILIZATION
    assert "6 tries" in capsys.readouterr().err


def test_debug_log_names_configuration_source(run, tmp_path):
    conf = _write_config(tmp_path, {"log_level": "DEBUG"})
    assert run("--config", conf, "check", fixture_path("example8.plant")) == EXIT_OK
    text = (tmp_path / "cqlqg.log").read_text()
    assert "DEBUG" in text and f"configuration from {conf}" in text
