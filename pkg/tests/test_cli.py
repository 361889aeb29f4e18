import json
from pathlib import Path

import pytest

from triplechar.cli import main
from triplechar.config import ConfigError, ExperimentConfig, load_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def write_config(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_poly_symmetrize(capsys):
    code, rep = run(capsys, "poly", "symmetrize", "--coeffs=0,-1,0")
    assert code == 0
    assert rep["H"] == [[1, 0, -1], [0, 2, 0], [-1, 0, 3]]
    assert rep["constants"]["det_H_equals_discriminant"]["det_H"] == 4


def test_poly_check_non_hyperbolic(capsys):
    code, rep = run(capsys, "poly", "check", "--coeffs", "0,1")
    assert code == 2 and rep["holds"] is False


def test_poly_check_repeated_root(capsys):
    code, rep = run(capsys, "poly", "check", "--coeffs=-2,1")
    assert code == 0
    assert rep["constants"]["hyperbolic"]["distinct_real_roots"] == 1


def test_poly_nuij(capsys):
    code, rep = run(capsys, "poly", "nuij", "--coeffs", "0,0", "--eps", "0.5")
    assert code == 0
    assert rep["smoothed"] == pytest.approx([1.0, 0.0])


@pytest.mark.parametrize("argv", [
    ["poly", "check", "--coeffs", "0,abc"],
    ["poly", "nuij", "--coeffs", "0,0"],
    ["poly", "frobnicate"],
    ["cubic", "conditions"],
    ["energy", "run", "--config", "/nonexistent.json"],
])
def test_input_errors(capsys, argv):
    assert main(argv) == 1


@pytest.mark.parametrize("name, code", [
    ("simple_conditions.json", 0),
    ("example12_conditions.json", 0),
    ("degenerate_conditions.json", 2),
])
def test_cubic_conditions(capsys, name, code):
    got, rep = run(capsys, "cubic", "conditions", "--config", str(CONFIGS / name))
    assert got == code
    if code == 2:
        assert rep["worst_point"]["t"] == pytest.approx(3e-4, rel=0.5)


def test_cubic_classify_writes_csv(capsys, tmp_path):
    code, rep = run(capsys, "cubic", "classify", "--config",
                    str(CONFIGS / "example12_classify.json"), "--out", str(tmp_path))
    assert code == 0
    assert rep["constants"]["classification"]["effective_triple"] == 2
    lines = (tmp_path / "classification.csv").read_text().splitlines()
    assert lines[0].startswith("t,x1,xi1,class")


def test_cubic_extend_repairs_local_symbol(capsys):
    cfg = str(CONFIGS / "example12_extend.json")
    assert run(capsys, "cubic", "extend", "--config", cfg)[0] == 0
    assert run(capsys, "cubic", "conditions", "--config", cfg)[0] == 2


def test_unknown_key_rejected(tmp_path):
    cfg = write_config(tmp_path, {"energy": {"model": "canonical", "stepz": 100}})
    assert main(["energy", "run", "--config", cfg]) == 1


def test_bad_expression_rejected(tmp_path):
    cfg = write_config(tmp_path, {"symbol": {"a": "0", "b": "t +* 1", "c": "0"},
                                  "grid": {"t": [0.1], "x": [[0]], "xi": [[1]]}})
    assert main(["cubic", "conditions", "--config", cfg]) == 1


def test_energy_below_threshold_fails(capsys, tmp_path):
    cfg = write_config(tmp_path, {"energy": {"model": "canonical", "N": 0, "steps": 512,
                                             "xi_list": [[8.0]]}})
    code, rep = run(capsys, "energy", "run", "--config", cfg)
    assert code == 2 and rep["worst_point"] is not None


def test_energy_zero_state(capsys, tmp_path):
    cfg = write_config(tmp_path, {"energy": {"model": "canonical", "state": [0, 0, 0],
                                             "steps": 256, "xi_list": [[1.0], [4.0]]}})
    assert run(capsys, "energy", "run", "--config", cfg)[0] == 0


def test_energy_coarse_step_exit_code(tmp_path):
    cfg = write_config(tmp_path, {"energy": {"model": "example", "b1": 0.1, "b2": 1.0,
                                             "steps": 1024, "xi_list": [[128.0]]}})
    assert main(["energy", "run", "--config", cfg]) == 3


def test_energy_adjoint(capsys, tmp_path):
    cfg = write_config(tmp_path, {"energy": {"model": "canonical", "state": [0, 0, 1],
                                             "steps": 512, "xi_list": [[1.0], [8.0]]}})
    code, rep = run(capsys, "energy", "adjoint", "--config", cfg, "--out", str(tmp_path / "o"))
    assert code == 0 and rep["command"] == "energy adjoint"
    assert (tmp_path / "o" / "mode_1.csv").is_file()


def test_outputs_are_deterministic(capsys, tmp_path):
    cfg = write_config(tmp_path, {"energy": {"model": "canonical", "steps": 256,
                                             "xi_list": [[1.0], [2.0]]}})
    for d in ("a", "b"):
        assert main(["energy", "run", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    capsys.readouterr()
    for name in ("report.json", "mode_0.csv", "mode_1.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    meta = json.loads((tmp_path / "a" / "run_meta.json").read_text())
    assert meta["seed"] == 0 and "finished" in meta


def test_config_round_trip():
    for p in sorted(CONFIGS.glob("*.json")):
        cfg = load_config(p)
        assert ExperimentConfig.loads(cfg.dumps()) == cfg


def test_config_errors():
    with pytest.raises(ConfigError):
        ExperimentConfig.loads("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.loads('{"symbol": {"a": "0", "q1": "0"}}')
