import csv
import json

import numpy as np
import pytest

from nehari import cli
from nehari.errors import ConfigurationError
from nehari.mesh import Grid


def _only_run(base):
    runs = [p for p in base.iterdir() if p.is_dir()]
    assert len(runs) == 1
    return runs[0]


def _write_config(tmp_path, text):
    p = tmp_path / "cfg.toml"
    p.write_text(text)
    return str(p)


# ---------------------------------------------------------------- fields


def test_field_round_trip_is_bit_identical(tmp_path, rng):
    g = Grid(2, 7)
    u = rng.standard_normal(g.size) * 10.0 ** rng.integers(-20, 20, g.size)
    cli.store_field(tmp_path / "u.csv", g, u)
    assert cli.read_field_header(tmp_path / "u.csv") == (2, 7)
    back = cli.load_field(tmp_path / "u.csv", g)
    assert np.array_equal(back, u)
    assert np.array_equal(cli.load_field(tmp_path / "u.csv"), u)


def test_field_mismatch_and_bad_header(tmp_path):
    cli.store_field(tmp_path / "u.csv", Grid(1, 8), np.ones(8))
    with pytest.raises(ConfigurationError):
        cli.load_field(tmp_path / "u.csv", Grid(1, 9))
    (tmp_path / "bad.csv").write_text("1.0\n2.0\n")
    with pytest.raises(ConfigurationError):
        cli.load_field(tmp_path / "bad.csv")
    with pytest.raises(ConfigurationError):
        cli.load_field(tmp_path / "missing.csv")


# ---------------------------------------------------------------- config


def test_resolve_config_overrides():
    cfg = cli.resolve_config({"grid": {"n": 32}}, seed=7, c=[0.5, 2.0])
    assert cfg["grid"] == {"dim": 1, "n": 32}
    assert cfg["solver"]["seed"] == 7
    assert cfg["c"] == [0.5, 2.0]
    assert cli.resolve_config({"c": 3})["c"] == [3.0]


@pytest.mark.parametrize("raw", [
    {"bogus": {}},
    {"problem": {"model": "nope"}},
    {"problem": {"model": "semilinear", "q": 1.5}},
    {"c": "high"},
])
def test_resolve_config_rejects(raw):
    with pytest.raises(ConfigurationError):
        cli.resolve_config(raw)


def test_config_hash_stable():
    a = cli.resolve_config({"grid": {"n": 16}})
    b = cli.resolve_config({"grid": {"n": 16}})
    assert cli.config_hash(a) == cli.config_hash(b)
    assert cli.config_hash(a) != cli.config_hash(cli.resolve_config({"grid": {"n": 17}}))


# ---------------------------------------------------------------- subcommands


def test_solve_outputs(tmp_path):
    cfg = cli.resolve_config({"grid": {"n": 64}})
    code, path = cli.run("solve", cfg, tmp_path)
    assert code == cli.EXIT_OK
    res = json.loads((path / "result.json").read_text())
    assert set(res) == {"lambda", "level", "energy_gap", "residual", "iterations",
                        "converged", "flags"}
    assert res["converged"] is True
    u = cli.load_field(path / "field.csv", Grid(1, 64))
    assert u.shape == (64,)
    with open(path / "trace.csv") as fh:
        assert next(csv.reader(fh)) == ["iteration", "value", "residual"]
    man = json.loads((path / "manifest.json").read_text())
    assert man["command"] == "solve" and man["seed"] == 0
    assert man["config"] == cfg
    assert {"python", "numpy", "scipy"} <= set(man["versions"])
    assert man["wall_time_s"] >= 0


def test_sweep_csv(tmp_path):
    cfg = cli.resolve_config({"grid": {"n": 64}}, c=[2.0, 0.5, 1.0])
    code, path = cli.run("sweep", cfg, tmp_path)
    assert code == cli.EXIT_OK
    with open(path / "sweep.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["c", "lambda_1c", "residual", "converged"]
    assert [float(r[0]) for r in rows[1:]] == [2.0, 0.5, 1.0]


def test_minimax_and_fibering(tmp_path):
    cfg = cli.resolve_config({"grid": {"n": 32}, "minimax": {"n": 3}})
    code, path = cli.run("minimax", cfg, tmp_path / "mm")
    assert code == cli.EXIT_OK
    with open(path / "minimax.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 4
    code, path = cli.run("fibering", cfg, tmp_path / "fb")
    assert code == cli.EXIT_OK
    with open(path / "fibering.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "value", "derivative"]
    assert len(rows) == 1 + cfg["fibering"]["points"]


def test_fibering_field_shape_mismatch_exits_4(tmp_path):
    cli.store_field(tmp_path / "u.csv", Grid(1, 10), np.ones(10))
    cfg = _write_config(tmp_path, f'[grid]\nn = 12\n[fibering]\nfield = "{tmp_path / "u.csv"}"\n')
    assert cli.main(["fibering", "--config", cfg, "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG


def test_validate_exit_codes(tmp_path):
    base = ["validate", "--grid-n", "32", "--out"]
    assert cli.main(base + [str(tmp_path / "a"), "--c", "1"]) == cli.EXIT_OK
    assert cli.main(base + [str(tmp_path / "b"), "--c", "-1"]) == cli.EXIT_HYPOTHESIS
    assert (_only_run(tmp_path / "b") / "manifest.json").exists()


def test_oracle_subcommand(tmp_path):
    assert cli.main(["oracle", "--grid-n", "32", "--out", str(tmp_path)]) == cli.EXIT_OK


def test_bad_config_exits_4(tmp_path, capsys):
    cfg = _write_config(tmp_path, "[problem]\nmodel = 'nope'\n")
    assert cli.main(["solve", "--config", cfg, "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err
    broken = _write_config(tmp_path, "[grid\n")
    assert cli.main(["solve", "--config", broken]) == cli.EXIT_CONFIG
    assert cli.main(["solve", "--config", str(tmp_path / "none.toml")]) == cli.EXIT_CONFIG


def test_non_convergence_exits_3(tmp_path):
    cfg = _write_config(tmp_path, "[grid]\nn = 64\n[solver]\nmax_iter = 1\n")
    assert cli.main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == cli.EXIT_NOT_CONVERGED


def test_main_prints_output_dir(tmp_path, capsys):
    assert cli.main(["solve", "--grid-n", "32", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert str(_only_run(tmp_path)) in out
