import csv
import json
from pathlib import Path

import numpy as np
import pytest

from frachs.cli import EXIT_CHECKS, EXIT_CONFIG, EXIT_OK, main
from frachs.errors import ConfigError
from frachs.experiments import build_config, load_config, run_experiment, with_overrides
from frachs.infrastructure.config import EXPERIMENTS, PRESETS
from frachs.infrastructure.logger import RunLogger, read_stats
from frachs.reports import Report, plain, write_report


def _write(tmp_path, document, name="config.json"):
    path = tmp_path / name
    path.write_text(document if isinstance(document, str) else json.dumps(document))
    return str(path)


def test_every_experiment_has_a_preset():
    assert len(EXPERIMENTS) == 11
    for name in EXPERIMENTS:
        cfg = build_config({"experiment": name})
        assert cfg.settings == PRESETS[name]["settings"]


def test_config_merges_over_the_preset():
    cfg = build_config({"experiment": "bessel", "settings": {"points": 50}, "seed": 7})
    assert cfg.settings["points"] == 50
    assert cfg.settings["nu_values"] == PRESETS["bessel"]["settings"]["nu_values"]
    assert cfg.seed == 7
    cfg = with_overrides(cfg, out="elsewhere", seed=3, threads=2)
    assert (cfg.out, cfg.seed, cfg.threads) == ("elsewhere", 3, 2)
    with pytest.raises(ConfigError):
        with_overrides(cfg, threads=0)


@pytest.mark.parametrize(
    "document",
    [
        {"experiment": "heat-flow"},
        {"experiment": "bessel", "colour": "red"},
        {"experiment": "bessel", "settings": {"gridsize": 3}},
        {"experiment": "bessel", "tolerances": {"closed_form": -1.0}},
        {"experiment": "bessel", "params": {"n": 3, "s": 0.5, "sigma": 0.7}},
        {"experiment": "bessel", "seed": "seven"},
        ["bessel"],
    ],
)
def test_invalid_configs(document):
    with pytest.raises(ConfigError):
        build_config(document)


def test_unknown_experiment_names_the_valid_ones():
    with pytest.raises(ConfigError, match="norm-identity"):
        build_config({"experiment": "heat-flow"})


def test_json_errors_carry_a_position(tmp_path):
    path = _write(tmp_path, '{\n  "experiment": "bessel",\n  "seed": \n}')
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line == 4
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))


def test_config_errors_exit_with_two(tmp_path, capsys):
    assert main(["run", _write(tmp_path, "{not json")]) == EXIT_CONFIG
    assert main(["run", _write(tmp_path, {"experiment": "nothing"})]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_bessel_run_writes_reports(tmp_path):
    out = tmp_path / "results"
    path = _write(tmp_path, {"experiment": "bessel", "settings": {"points": 40}})
    assert main(["run", path, "--out", str(out), "--seed", "5", "--quiet"]) == EXIT_OK

    report = json.loads((out / "bessel.json").read_text())
    assert report["schema_version"] == 1
    assert report["experiment"] == "bessel"
    assert report["seed"] == 5
    assert report["passed"] is True
    assert all(check["passed"] for check in report["checks"])
    with open(out / "bessel-bessel.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0][:3] == ["tau", "k_half", "relative_error"]
    assert len(rows) == 41
    stats = read_stats(str(out / "frachs.log"))
    assert stats["bessel"]["count"] == 1 and stats["bessel"]["passed"] == 1


def test_failed_checks_exit_with_four(tmp_path):
    path = _write(tmp_path, {"experiment": "bessel", "tolerances": {"asymptotic": 1e-9}})
    assert main(["run", path, "--out", str(tmp_path / "out"), "--quiet"]) == EXIT_CHECKS


def test_stats_summary(tmp_path, capsys):
    logfile = tmp_path / "frachs.log"
    logfile.write_text(
        "2026-01-01 10:00:00 | kelvin | kelvin.json | total_time=1.5000s | pass\n"
        "2026-01-01 10:01:00 | kelvin | kelvin.json | total_time=2.5000s | fail\n"
        "garbage line\n"
    )
    stats = read_stats(str(logfile))
    assert stats == {"kelvin": {"count": 2, "total": pytest.approx(4.0), "passed": 1}}
    assert main(["stats", str(logfile)]) == EXIT_OK
    assert "kelvin" in capsys.readouterr().out


def test_run_logger_appends_one_line(tmp_path):
    runlog = RunLogger("curvature", preset="curvature.json", logdir=str(tmp_path), quiet=True)
    with runlog.timeit("step"):
        pass
    runlog.close("pass")
    runlog.close("fail")
    lines = (tmp_path / "frachs.log").read_text().splitlines()
    assert len(lines) == 1 and lines[0].endswith("| pass")


def test_report_json_and_csv(tmp_path):
    report = Report("demo", seed=0, params={"n": 2}, settings={})
    report.check("finite", True, np.float64(1.5), 2.0)
    report.check("nan value", False, float("nan"))
    report.add_series("curve", {"x": np.arange(3), "y": [0.5, np.inf, 1.0]})
    with pytest.raises(ValueError):
        report.add_series("ragged", {"x": [1, 2], "y": [1]})
    paths = write_report(report, str(tmp_path))
    assert [p.split("/")[-1] for p in paths] == ["demo.json", "demo-curve.csv"]
    data = json.loads((tmp_path / "demo.json").read_text())
    assert data["passed"] is False
    assert data["checks"][1]["value"] == "nan"
    lines = (tmp_path / "demo-curve.csv").read_text().splitlines()
    assert lines[0] == "x,y"
    assert lines[2] == "1,inf"
    assert plain({"a": (np.int64(2), np.bool_(True))}) == {"a": [2, True]}


def test_kernel_bounds_are_checked_per_exponent(tmp_path):
    cfg = build_config({
        "experiment": "green-kernels",
        "settings": {"steps": [0.1, 0.05], "b_values": [0.0, 0.25, 0.5, 1.0]},
        "out": str(tmp_path),
    })
    report, _ = run_experiment(cfg)
    bounds = {check.name: check for check in report.checks if check.name.startswith("kernel bound")}
    assert sorted(bounds) == ["kernel bound b=0.0", "kernel bound b=0.25", "kernel bound b=0.5", "kernel bound b=1.0"]
    assert all(check.passed for check in bounds.values())
    assert not any("interpolation" in check.name for check in report.checks)


def test_shipped_configs_load_at_acceptance_resolution():
    configs = Path(__file__).parent.parent / "configs"
    loaded = {path.stem: load_config(str(path)) for path in sorted(configs.glob("*.json"))}
    assert set(loaded) == set(EXPERIMENTS)
    minimizer = loaded["halfspace-minimizer"].settings
    assert (minimizer["radius"], minimizer["resolution"]) == (20.0, 64)
    pohozaev = loaded["pohozaev"].settings
    assert (pohozaev["state"], pohozaev["eps_schedule"]) == ("minimizer", "fixed")
    assert loaded["nonattainment"].tolerances == PRESETS["nonattainment"]["tolerances"]
