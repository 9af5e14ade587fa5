import json
from dataclasses import replace
from pathlib import Path

import pytest

from scatentropy.cli import main as cli_main
from scatentropy.criteria import Guarantee
from scatentropy.errors import PreconditionViolated
from scatentropy.harness import (
    ProbeResult,
    Report,
    demon_search,
    guarantee_probe,
    render_csv,
    render_text,
    report_to_dict,
    report_to_json,
    run_scenario,
)
from scatentropy.scenarios import builtin, parse_scenario_dict

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def test_check_mode_report():
    cfg = replace(builtin("pure-product-2x2"), mode="check")
    report = run_scenario(cfg)
    assert report.verdict.overall is Guarantee.STRICT_INCREASE
    assert report.fit is None and report.prediction is None
    text = render_text(report)
    assert "StrictIncrease" in text
    assert "kernel_tol=1e-12" in text


def test_predict_mode_report():
    report = run_scenario(replace(builtin("thermal-ground"), mode="predict"))
    assert report.prediction is not None
    assert report.thermal_coeff is not None
    assert abs(report.thermal_coeff - report.prediction.order2_coeff) <= 1e-10


def test_sweep_mode_agreements():
    report = run_scenario(builtin("pure-product-2x2"))
    agreements = dict(report.agreements)
    assert agreements["b"] <= 0.02
    assert report.oracle_sanity.trace_defect <= 1e-12
    rows = render_csv(report).strip().splitlines()
    assert rows[0] == "scenario,lambda,delta_s_exact,model_value,residual"
    assert len(rows) == 1 + len(report.fit.lambda_grid)


def test_reports_are_deterministic():
    cfg = builtin("fullrank-x075-y000")
    first = run_scenario(cfg, seed=5)
    second = run_scenario(cfg, seed=5)
    assert render_text(first) == render_text(second)
    assert report_to_json(first) == report_to_json(second)
    probe_cfg = builtin("superselection-protected")
    assert report_to_json(run_scenario(probe_cfg, samples=50, seed=9)) == report_to_json(
        run_scenario(probe_cfg, samples=50, seed=9)
    )


def test_report_json_roundtrips():
    report = run_scenario(builtin("bell-counterexample"))
    payload = json.loads(report_to_json(report))
    assert payload["scenario"] == "bell-counterexample"
    assert payload["tolerances"]["kernel_tol"] == 1e-12
    assert "fit" in payload and "prediction" in payload
    assert payload["verdict"]["overall"] == "NoGuarantee"


def test_gray_zone_reports_both_predictions():
    eps = 1e-8
    doc = {
        "name": "gray",
        "dA": 2,
        "dB": 2,
        "mode": "predict",
        "state": {"kind": "product", "a_weights": [1.0 - eps, eps], "b_weights": [0.5, 0.5]},
        "t": {"kind": "random", "seed": 2},
    }
    report = run_scenario(parse_scenario_dict(doc))
    assert report.warnings
    assert report.wide_kernel_prediction is not None
    assert report.wide_kernel_prediction.log_coeff is not None
    assert report.prediction is not None  # strict reading, gray guard off
    text = render_text(report)
    assert "warning:" in text
    assert "wide-kernel prediction" in text


def test_demon_finds_decrease_on_bell_scenario():
    result = demon_search(builtin("bell-counterexample"), budget=200, seed=4)
    assert result.best_delta_s < 0.0
    assert result.trace[0][0] == 0
    assert result.samples_used == 200


def test_probe_requires_guarantee_class():
    with pytest.raises(PreconditionViolated):
        guarantee_probe(builtin("bell-counterexample"), samples=5, seed=0)


def test_probe_superselection_is_null():
    result = guarantee_probe(builtin("superselection-protected"), samples=100, seed=0)
    assert abs(result.min_delta_s) <= 1e-12


def test_probe_floors_on_guarantee_states():
    # pure product state: generic Gaussian T1 samples never lose entropy
    pure = guarantee_probe(builtin("pure-product-2x2"), samples=200, seed=2)
    assert pure.min_delta_s >= -1e-10
    # diagonal separable state with a kernel: same floor
    diag = guarantee_probe(builtin("guarantee-diag-3x3"), samples=200, seed=2)
    assert diag.min_delta_s >= -1e-10


def test_thermal_check_tolerates_nonconserving_t():
    doc = {
        "name": "thermal-loose",
        "dA": 2,
        "dB": 2,
        "mode": "predict",
        "state": {
            "kind": "thermal",
            "a_energies": [0.0, 1.0],
            "beta": 1.0,
            "b_index": 0,
            "b_energies": [0.0, 1.0],
        },
        # raises A energy without touching B: not energy conserving
        "t": {"kind": "structured", "elements": [[0, 0, 1, 0, 0.5, 0.0]]},
    }
    report = run_scenario(parse_scenario_dict(doc))
    assert report.thermal_coeff is None
    assert any("thermal closed form" in w for w in report.warnings)
    assert report.prediction is not None


def test_module_errors_carry_scenario_context():
    doc = {
        "name": "bad-grid",
        "dA": 2,
        "dB": 2,
        "mode": "sweep",
        "state": {"kind": "product", "a_weights": [0.5, 0.5], "b_weights": [0.5, 0.5]},
        "t": {"kind": "random", "seed": 1},
        "grid": {"lambdas": [1e-2, 1e-3, 1e-4]},
    }
    with pytest.raises(PreconditionViolated) as err:
        run_scenario(parse_scenario_dict(doc))
    assert "[bad-grid]" in str(err.value)


def test_demon_is_deterministic():
    first = demon_search(builtin("bell-counterexample"), budget=60, seed=3)
    second = demon_search(builtin("bell-counterexample"), budget=60, seed=3)
    assert first.best_delta_s == second.best_delta_s
    assert first.trace == second.trace


def test_guarantee_violation_flag():
    clean = run_scenario(builtin("guarantee-diag-3x3"), samples=20, seed=1)
    assert not clean.guarantee_violation
    rigged = Report(
        config=clean.config,
        verdict=clean.verdict,
        probe=ProbeResult(min_delta_s=-1e-6, argmin_sample=3, samples=20, lam=1e-3, seed=1),
    )
    assert rigged.guarantee_violation
    assert report_to_dict(rigged)["guarantee_violation"] is True


# ------------------------------------------------------------------- CLI

def test_cli_sweep_with_outputs(tmp_path, capsys):
    json_path = tmp_path / "report.json"
    csv_path = tmp_path / "rows.csv"
    code = cli_main(
        [
            "sweep",
            str(SCENARIO_DIR / "pure-product-2x2.toml"),
            "--json",
            str(json_path),
            "--csv",
            str(csv_path),
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "scenario: pure-product-2x2" in out
    payload = json.loads(json_path.read_text())
    assert payload["scenario"] == "pure-product-2x2"
    assert csv_path.read_text().startswith("scenario,lambda,")


def test_cli_check_command(capsys):
    code = cli_main(["check", str(SCENARIO_DIR / "bell-counterexample.toml")])
    assert code == 0
    assert "NoGuarantee" in capsys.readouterr().out


def test_cli_probe_command(capsys):
    code = cli_main(
        ["probe", str(SCENARIO_DIR / "superselection-protected.toml"), "--samples", "20", "--seed", "1"]
    )
    assert code == 0
    assert "probe: min dS" in capsys.readouterr().out


def test_cli_demon_command(tmp_path, capsys):
    json_path = tmp_path / "demon.json"
    code = cli_main(
        [
            "demon",
            str(SCENARIO_DIR / "bell-counterexample.toml"),
            "--budget", "50",
            "--seed", "2",
            "--json", str(json_path),
        ]
    )
    assert code == 0
    assert "demon: best dS" in capsys.readouterr().out
    payload = json.loads(json_path.read_text())
    assert payload["demon"]["samples_used"] == 50
    t1 = payload["demon"]["best_t1"]
    assert len(t1) == 4 and len(t1[0]) == 4 and len(t1[0][0]) == 2


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(
        'name = "bad"\ndA = 2\ndB = 2\n\n[state]\nkind = "product"\n'
        "a_weights = [0.5, 0.4]\nb_weights = [0.5, 0.5]\n\n[t]\nkind = \"random\"\nseed = 1\n"
    )
    assert cli_main(["sweep", str(bad)]) == 1
    assert "a_weights" in capsys.readouterr().err


def test_cli_missing_file_exit_code(capsys):
    assert cli_main(["check", "/nonexistent.toml"]) == 1


def test_cli_numerical_failure_exit_code(tmp_path, capsys):
    bad_grid = tmp_path / "grid.toml"
    bad_grid.write_text(
        'name = "grid"\ndA = 2\ndB = 2\n\n[state]\nkind = "product"\n'
        "a_weights = [0.5, 0.5]\nb_weights = [0.5, 0.5]\n\n[t]\nkind = \"random\"\nseed = 1\n"
        "\n[grid]\nlambdas = [1e-2, 1e-3, 1e-4]\n"
    )
    assert cli_main(["sweep", str(bad_grid)]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_cli_guarantee_violation_exit_code(monkeypatch, capsys):
    # exit path only; a genuine violation would falsify the theory
    real = run_scenario(builtin("guarantee-diag-3x3"), samples=2, seed=0)
    rigged = Report(
        config=real.config,
        verdict=real.verdict,
        probe=ProbeResult(min_delta_s=-1e-6, argmin_sample=0, samples=2, lam=1e-3, seed=0),
    )
    import scatentropy.cli as cli_module

    monkeypatch.setattr(cli_module, "run_scenario", lambda cfg, **kw: rigged)
    code = cli_main(["probe", str(SCENARIO_DIR / "guarantee-diag-3x3.toml"), "--samples", "2"])
    assert code == 3
    assert "guarantee violation" in capsys.readouterr().err


def test_cli_suite_smoke(capsys):
    code = cli_main(["suite", "--samples", "20", "--budget", "20", "--seed", "0"])
    assert code == 0
    out = capsys.readouterr().out
    assert "pure-product-2x2" in out
    assert "thermal-inverted" in out
    assert "superselection-protected" in out
