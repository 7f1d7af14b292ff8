import json
import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from spmelab.errors import ContainmentFailure
from spmelab.harness import cli
from spmelab.harness.config import ConfigError, load_config, parse_config
from spmelab.harness.experiments import Report, Table, run_experiment, worst_status
from spmelab.harness.report import sanitize, write_report

HOLE_FILL = {"kind": "hole-fill", "grid": {"h": 1 / 32}}
PROPAGATION = {
    "kind": "propagation",
    "grid": {"h": 1 / 64},
    "coefficients": ["0.5*sin(pi*x)"],
    "signal": {"kind": "brownian", "seeds": [3]},
    "propagation": {"t_end": 0.05},
}


def _write(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


# -- configuration ------------------------------------------------------------------


def test_defaults_are_valid():
    cfg = parse_config({"kind": "simulate"})
    assert cfg.schema_version == "spmelab.config/1"
    assert cfg.grid.d == 1


@pytest.mark.parametrize(
    "data",
    [
        {"kind": "nope"},
        {"kind": "simulate", "unknown": 1},
        {"kind": "simulate", "m": 1.0},
        {"kind": "simulate", "coefficients": ["log(x)"]},
        {"kind": "simulate", "grid": {"lo": [0.0], "hi": [0.0, 1.0]}},
        {"kind": "simulate", "signal": {"seeds": []}},
        {"kind": "simulate", "signal": {"kind": "fbm", "hurst": 1.5}},
        {"kind": "simulate", "schema_version": "other/2"},
    ],
)
def test_invalid_configs_raise(data):
    with pytest.raises(ConfigError):
        parse_config(data)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "list.yaml"
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_overrides_and_hash(tmp_path):
    cfg = parse_config({"kind": "simulate"})
    moved = cfg.with_overrides(out=str(tmp_path))
    assert moved.output == str(tmp_path)
    assert moved.config_hash() == cfg.config_hash()
    reseeded = cfg.with_overrides(seed=9)
    assert reseeded.signal.seeds == [9]
    assert reseeded.config_hash() != cfg.config_hash()


def test_validate_alias_round_trip():
    cfg = parse_config({"kind": "validate", "validate": {"suites": ["transforms"]}})
    assert cfg.validate_.suites == ["transforms"]
    assert parse_config(cfg.model_dump(by_alias=True)).validate_.suites == ["transforms"]


# -- reports --------------------------------------------------------------------------


def test_sanitize_handles_numpy_and_non_finite():
    out = sanitize({"a": np.float64(math.inf), "b": np.arange(2), "c": (np.bool_(True), math.nan)})
    assert out == {"a": "inf", "b": [0, 1], "c": [True, "nan"]}


def test_worst_status_ordering():
    assert worst_status(["pass", "inconclusive"]) == "inconclusive"
    assert worst_status(["pass", "violation", "inconclusive"]) == "violation"
    assert worst_status(["pass"]) == "pass"


def test_write_report_separates_timings(tmp_path):
    cfg = parse_config({"kind": "simulate"})
    rep = Report("simulate", "pass", {"x": 1.5}, {"t": Table(["a", "b"], [[0.1, None]])}, {}, {"solve": 1.0})
    paths = write_report(rep, cfg, tmp_path)
    doc = json.loads(paths["report"].read_text())
    assert doc["schema"] == "spmelab.report/1" and doc["result"] == {"x": 1.5}
    assert "timings" not in doc and '"solve"' not in paths["report"].read_text()
    assert (tmp_path / "t.csv").read_text() == "a,b\n0.1,\n"
    assert (tmp_path / "timings.json").exists()


# -- experiments and CLI exit codes ---------------------------------------------------------


def test_hole_fill_passes_and_exits_zero(tmp_path, capsys):
    code = cli.main(["hole-fill", "--config", _write(tmp_path, HOLE_FILL), "--out", str(tmp_path / "o")])
    assert code == 0
    doc = json.loads((tmp_path / "o" / "report.json").read_text())
    assert doc["status"] == "pass"
    assert (tmp_path / "o" / "fronts_seed0.csv").exists()


def test_perturbed_constant_is_detected(tmp_path):
    data = {**HOLE_FILL, "validate": {"c_det_scale": 1.1}}
    code = cli.main(["hole-fill", "--config", _write(tmp_path, data), "--out", str(tmp_path / "o")])
    assert code == 2
    doc = json.loads((tmp_path / "o" / "report.json").read_text())
    assert doc["status"] == "violation"
    assert not doc["result"]["runs"][0]["barrier"]["supersolution"]["passed"]


def test_zero_threshold_is_inconclusive(tmp_path):
    data = {**HOLE_FILL, "validate": {"force_threshold_zero": True}}
    code = cli.main(["hole-fill", "--config", _write(tmp_path, data), "--out", str(tmp_path / "o")])
    assert code == 0
    assert json.loads((tmp_path / "o" / "report.json").read_text())["status"] == "inconclusive"


def test_config_error_exit_code(tmp_path, capsys):
    code = cli.main(["simulate", "--config", _write(tmp_path, {"kind": "simulate", "bogus": 1})])
    assert code == 4
    assert "config error" in capsys.readouterr().err


def test_kind_mismatch_is_config_error(tmp_path):
    assert cli.main(["simulate", "--config", _write(tmp_path, HOLE_FILL)]) == 4


def test_solver_failure_exit_code(tmp_path):
    data = {**HOLE_FILL, "solver": {"newton_tol": 1e-300, "newton_max": 1}}
    assert cli.main(["hole-fill", "--config", _write(tmp_path, data), "--out", str(tmp_path / "o")]) == 3


def test_containment_failure_exit_code(tmp_path, monkeypatch):
    def boom(cfg):
        raise ContainmentFailure("escaped", {})

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert cli.main(["entropy", "--out", str(tmp_path)]) == 2


def test_identical_configs_give_identical_bytes(tmp_path):
    path = _write(tmp_path, PROPAGATION)
    for name in ("a", "b"):
        assert cli.main(["propagation", "--config", path, "--out", str(tmp_path / name)]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir() if p.name != "timings.json")
    assert "report.json" in files and "report.sha256" in files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_propagation_report_contents():
    rep = run_experiment(parse_config(PROPAGATION))
    assert rep.status == "pass"
    run = rep.body["runs"][0]
    assert run["violations"] == 0
    assert any(c["kind"] == "radius" for c in run["checks"])
    assert "bound_x_max" in rep.tables["fronts_seed3"].columns


def test_bounds_only_report():
    rep = run_experiment(parse_config({"kind": "bounds-only", "coefficients": ["sin(pi*x)"], "signal": {"kind": "brownian"}, "hole_fill": {"R": 0.25, "center": [0.0]}}))
    assert "bounds" in rep.tables
    assert rep.status in ("pass", "inconclusive")


def test_simulate_reports_norms():
    rep = run_experiment(parse_config({"kind": "simulate", "propagation": {"t_end": 0.02}}))
    run = rep.body["runs"][0]
    assert len(run["sup_norms"]) == len(run["times"])
    assert rep.status == "pass"


def test_plots_are_written(tmp_path):
    pytest.importorskip("matplotlib")
    code = cli.main(["hole-fill", "--config", _write(tmp_path, HOLE_FILL), "--out", str(tmp_path / "o"), "--plots"])
    assert code == 0
    assert list((tmp_path / "o").glob("*.svg"))


def test_validate_transforms_suite(tmp_path):
    data = {"kind": "validate", "validate": {"suites": ["transforms", "barrier"]}}
    assert cli.main(["validate", "--config", _write(tmp_path, data), "--out", str(tmp_path / "o")]) == 0


@pytest.mark.parametrize("path", sorted((Path(__file__).parent.parent / "configs").glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_configs_are_valid(path):
    assert load_config(path).schema_version == "spmelab.config/1"
