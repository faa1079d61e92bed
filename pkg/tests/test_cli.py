import json
import os

import pytest

from pshsym import cli
from pshsym.config import RunConfig, load_config
from pshsym.errors import SchemaError
from pshsym.reporting import AtomicDir, clean, dumps


def run(tmp_path, *args):
    return cli.main(list(args) + ["--out", str(tmp_path / "out")])


def test_config_precedence(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 5, "mc_samples": 1000}))
    cfg = load_config(str(path), {"seed": 9, "t_min": None}, env={"PSH_SYMM_SEED": "3"})
    assert cfg.seed == 9 and cfg.mc_samples == 1000 and cfg.t_min == -40.0
    assert load_config(str(path), {}, env={"PSH_SYMM_SEED": "3"}).seed == 5
    assert load_config(None, {}, env={"PSH_SYMM_SEED": "3"}).seed == 3
    assert load_config(None, {}, env={}).seed == 0


@pytest.mark.parametrize("bad", [{"seed": -1}, {"mc_samples": 0}, {"formats": ("pdf",)},
                                 {"t_min": 1.0}])
def test_config_validation(bad):
    with pytest.raises(SchemaError):
        load_config(None, bad, env={})


def test_config_unknown_key(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"colour": "red"}))
    with pytest.raises(SchemaError):
        load_config(str(path), env={})


def test_config_echo_drops_output_dir():
    d = RunConfig(out="elsewhere").to_dict()
    assert "out" not in d and d["depth_factors"] == [1.0, 4.0, 16.0]


def test_clean_non_finite():
    assert clean({"a": float("-inf"), "b": [float("nan"), 1]}) == {"a": "-inf", "b": ["nan", 1]}
    assert dumps({"x": 1.0}) == '{\n  "x": 1.0\n}\n'


def test_atomic_dir_removes_partial(tmp_path):
    target = tmp_path / "t"
    with pytest.raises(RuntimeError):
        with AtomicDir(str(target)) as tmp:
            (open(os.path.join(tmp, "f"), "w")).close()
            raise RuntimeError("boom")
    assert not target.exists()
    assert os.listdir(tmp_path) == []


def test_analyze_writes_outputs(tmp_path, capsys):
    assert run(tmp_path, "analyze", "ex-4.1") == 0
    d = tmp_path / "out" / "ex-4.1"
    names = sorted(p.name for p in d.iterdir())
    assert names == ["plots", "profiles.csv", "report.json", "summary.md", "volumes.csv"]
    rep = json.loads((d / "report.json").read_text())
    inv = rep["invariants"]
    assert abs(inv["nu"]["slope"] - 1) <= 0.02 and abs(inv["nu_hat"]["slope"] - 2) <= 0.02
    assert abs(inv["iota_volume"]["slope"] - 1) <= 0.02 and abs(inv["tau_hat"] - 4) <= 0.1
    assert rep["config"]["seed"] == 0
    assert "ex-4.1: nu=" in capsys.readouterr().out


def test_analyze_json_only(tmp_path):
    assert run(tmp_path, "analyze", "log-norm", "--n", "3", "--format", "json") == 0
    assert sorted(p.name for p in (tmp_path / "out" / "log-norm-n3").iterdir()) == \
        ["report.json", "summary.md"]


def test_malformed_spec_exits_one(tmp_path, capsys):
    spec = tmp_path / "bad.json"
    spec.write_text('{"dimension": 2, "symmetry": "toric"}')
    assert run(tmp_path, "analyze", "--spec", str(spec)) == 1
    assert "SCHEMA_ERROR" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_unknown_catalog_entry(tmp_path, capsys):
    assert run(tmp_path, "analyze", "ex-9.9") == 1
    assert "error: SCHEMA_ERROR" in capsys.readouterr().err


def test_spec_file_round_trip(tmp_path):
    spec = tmp_path / "mine.json"
    spec.write_text(json.dumps({"dimension": 2, "symmetry": "toric",
                                "body": {"kind": "closed_form", "expr": ["log", ["norm"]]}}))
    assert run(tmp_path, "analyze", str(spec), "--format", "json") == 0
    rep = json.loads((tmp_path / "out" / "mine" / "report.json").read_text())
    assert abs(rep["invariants"]["nu"]["slope"] - 1) <= 0.02


def test_verify_ex44_mass_domination_inapplicable(tmp_path):
    assert run(tmp_path, "verify", "ex-4.4") == 0
    doc = json.loads((tmp_path / "out" / "ex-4.4" / "theorems.json").read_text())
    rows = {c["id"]: c["status"] for c in doc["checks"]}
    assert rows["mass_domination"] == "INAPPLICABLE"
    assert "FAIL" not in rows.values()
    assert (tmp_path / "out" / "verify_summary.md").exists()


def test_verify_demailly_eps_list(tmp_path):
    assert run(tmp_path, "verify", "demailly", "--eps", "0.25,0.75", "--format", "json") == 0
    assert (tmp_path / "out" / "demailly-0.25").is_dir()
    assert (tmp_path / "out" / "demailly-0.75").is_dir()


def test_analyze_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["analyze", "ex-4.2", "--out", str(a)]) == 0
    assert cli.main(["analyze", "ex-4.2", "--out", str(b)]) == 0
    for name in ("report.json", "volumes.csv", "profiles.csv", "summary.md"):
        assert (a / "ex-4.2" / name).read_bytes() == (b / "ex-4.2" / name).read_bytes()
