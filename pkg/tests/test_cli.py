import json

import pytest

from recloop import cli
from recloop.experiments import read_grid_csv, read_trajectory_csv


@pytest.fixture(autouse=True)
def _isolated_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(cli.OUTPUT_ENV, raising=False)


def _kv(out):
    return dict(line.split("=", 1) for line in out.strip().splitlines() if "=" in line)


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(path)


GAUSS = {"kind": "gaussian", "mean": 0.0, "std": 1.0}
BASE = {
    "model": {"alpha": 0.2, "beta": 0.5, "mu0": {"kind": "gaussian", "mean": 1.0, "std": 1.0}, "rho": GAUSS},
    "recommender": {"period": 1, "cycles": 100},
    "population": {"M": 3000, "seed": 4},
}


def test_simulate_preset_writes_trajectories(tmp_path, capsys):
    code = cli.main(["simulate", "--preset", "illustrative", "--seed", "3", "--population", "500", "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    kv = _kv(capsys.readouterr().out)
    assert int(kv["users"]) == 500 and int(kv["horizon"]) == 50
    arr = read_trajectory_csv(tmp_path / "trajectories.csv")
    assert arr.shape == (500, 2)
    assert float(kv["mean_final"]) < float(kv["mean_initial"])


def test_simulate_continuous_reports_limit(tmp_path, capsys):
    assert cli.main(["simulate", _write(tmp_path, BASE), "--out", str(tmp_path)]) == 0
    kv = _kv(capsys.readouterr().out)
    assert float(kv["limit_mean"]) == pytest.approx(0.4)
    assert float(kv["limit_variance"]) == pytest.approx(0.28)
    assert float(kv["w1_to_gaussian_limit"]) < 0.05


def test_simulate_initial_only_reports_limit(tmp_path, capsys):
    doc = json.loads(json.dumps(BASE))
    doc["recommender"] = {"period": "initial_only", "horizon": 100}
    assert cli.main(["simulate", _write(tmp_path, doc), "--out", str(tmp_path)]) == 0
    assert float(_kv(capsys.readouterr().out)["w1_to_no_exploration_limit"]) < 0.06


def test_flags_override_file_override_preset(tmp_path, capsys):
    cfg = _write(tmp_path, {"population": {"M": 40, "seed": 1}})
    cli.main(["simulate", cfg, "--preset", "illustrative", "--out", str(tmp_path)])
    assert _kv(capsys.readouterr().out)["users"] == "40"
    cli.main(["simulate", cfg, "--preset", "illustrative", "--population", "30", "--out", str(tmp_path)])
    assert _kv(capsys.readouterr().out)["users"] == "30"


def test_seed_flag_changes_output_and_is_reproducible(tmp_path):
    outs = []
    for seed, sub in ((1, "a"), (1, "b"), (2, "c")):
        cli.main(["simulate", "--preset", "illustrative", "--population", "50", "--seed", str(seed), "--out", str(tmp_path / sub)])
        outs.append((tmp_path / sub / "trajectories.csv").read_bytes())
    assert outs[0] == outs[1] != outs[2]


def test_output_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["simulate", "--preset", "illustrative", "--population", "10"]) == 0
    assert (tmp_path / "env" / "trajectories.csv").exists()


def test_record_paths(tmp_path):
    cli.main(["simulate", "--preset", "illustrative", "--population", "7", "--record-paths", "--out", str(tmp_path)])
    rows = (tmp_path / "paths.csv").read_text().splitlines()
    assert len(rows) == 7 and len(rows[0].split(",")) == 51


def test_cross_field_error_names_both_fields(tmp_path, capsys):
    doc = json.loads(json.dumps(BASE))
    doc["model"].update(alpha=0.6, beta=0.6)
    assert cli.main(["simulate", _write(tmp_path, doc)]) == cli.EXIT_INVALID
    err = capsys.readouterr().err
    assert "model.alpha" in err and "model.beta" in err


@pytest.mark.parametrize(
    "patch,field",
    [
        ({"model": {"beta": 1.0}}, "model.beta"),
        ({"model": {"rho": {"kind": "gaussian", "mean": 0, "std": -1}}}, "model.rho"),
        ({"recommender": {"period": 0}}, "recommender.period"),
        ({"population": {"M": 0}}, "population.M"),
        ({"modle": {}}, "<root>"),
    ],
)
def test_schema_errors_name_the_field(tmp_path, capsys, patch, field):
    doc = cli._merge(BASE, patch)
    assert cli.main(["simulate", _write(tmp_path, doc), "--out", str(tmp_path)]) == cli.EXIT_INVALID
    assert field in capsys.readouterr().err


def test_json_syntax_error_reports_line(tmp_path, capsys):
    path = _write(tmp_path, '{\n  "model": {\n    "alpha": 0.1,\n  }\n}')
    assert cli.main(["simulate", path]) == cli.EXIT_INVALID
    assert "line 4" in capsys.readouterr().err


def test_initial_only_requires_horizon(tmp_path, capsys):
    doc = cli._merge(BASE, {"recommender": {"period": "initial_only"}})
    del doc["recommender"]["cycles"]
    assert cli.main(["simulate", _write(tmp_path, doc)]) == cli.EXIT_INVALID
    assert "recommender.horizon" in capsys.readouterr().err


def test_unknown_flag_is_an_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", "--no-such-flag"])
    assert exc.value.code == cli.EXIT_INVALID


@pytest.mark.parametrize("command", ["simulate", "sweep", "limits", "verify"])
def test_help_lists_every_flag(command, capsys):
    parser = cli.build_parser()
    with pytest.raises(SystemExit) as exc:
        parser.parse_args([command, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    sub = parser._subparsers._group_actions[0].choices[command]
    for action in sub._actions:
        for opt in action.option_strings:
            assert opt in text


def test_missing_output_parent_is_runtime_failure(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = cli.main(["simulate", "--preset", "illustrative", "--population", "5", "--out", str(blocker / "sub")])
    assert code == cli.EXIT_RUNTIME


def test_sweep_writes_normalized_and_raw_grids(tmp_path, capsys):
    doc = {
        "model": {"mu0": {"kind": "uniform", "lo": -2, "hi": 2}, "rho": GAUSS},
        "recommender": {"cycles": 3},
        "population": {"M": 50, "seed": 1},
        "sweep": {"alpha_values": [0.0, 0.2], "T_values": [1, 2]},
    }
    assert cli.main(["sweep", _write(tmp_path, doc), "--out", str(tmp_path / "g"), "--workers", "2"]) == 0
    names = sorted(p.name for p in (tmp_path / "g").iterdir())
    assert names == sorted(
        f"d_{m}_alpha={a}{s}.csv" for m in ("micro", "macro") for a in ("0", "0.2") for s in ("", "_raw")
    )
    grid = read_grid_csv(tmp_path / "g" / "d_micro_alpha=0.csv")
    assert len(grid) == 20 and max(grid.values()) == pytest.approx(1.0)


def test_sweep_rejects_infeasible_beta(tmp_path, capsys):
    doc = {
        "model": {"mu0": GAUSS, "rho": GAUSS},
        "sweep": {"alpha_values": [0.5], "beta_values": [0.7], "T_values": [1]},
    }
    assert cli.main(["sweep", _write(tmp_path, doc), "--out", str(tmp_path)]) == cli.EXIT_INVALID
    assert "infeasible" in capsys.readouterr().err


def test_limits_prints_both_regimes_for_finite_period(tmp_path, capsys):
    assert cli.main(["limits", "--preset", "illustrative"]) == 0
    kv = _kv(capsys.readouterr().out)
    assert float(kv["eta"]) == pytest.approx(1 / 3)
    assert float(kv["NO_EXPLORATION.mean"]) == pytest.approx(1 / 3)
    assert "CONTINUOUS.variance" in kv


def test_verify_exit_codes(capsys):
    assert cli.main(["verify", "--only", "A1,A2"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert out.count(" PASS ") == 2 and "summary passed=2 failed=0" in out


def test_verify_failure_exits_three(monkeypatch, capsys):
    from recloop import transport

    # a broken closed form must be caught by the verification suite
    monkeypatch.setattr(transport, "w2_gaussian", lambda g1, g2: 0.5)
    assert cli.main(["verify", "--only", "A3"]) == cli.EXIT_VERIFY
    assert "A3 FAIL" in capsys.readouterr().out


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "recloop", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "simulate" in res.stdout
