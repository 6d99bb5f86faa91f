import json

import pytest
import yaml

from mecgame import config as cfgmod
from mecgame.cli import main


def write(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data) if not isinstance(data, str) else data)
    return str(path)


def test_presets_validate():
    for name in cfgmod.PRESETS:
        cfg = cfgmod.preset(name)
        cfg.generator_config()
        back = cfgmod.from_mapping(yaml.safe_load(cfg.to_yaml()))
        assert back.to_dict() == cfg.to_dict()


def test_exponent_strings_accepted(tmp_path):
    cfg = cfgmod.load(write(tmp_path, "task:\n  input_bits: 4e6\n"))
    assert cfg.task.input_bits == 4e6


@pytest.mark.parametrize("data, where", [
    ({"task": {"bogus": 1}}, "task.bogus"),
    ({"engine": {"schedule": "random"}}, "engine.schedule"),
    ({"generator": {"num_users": "many"}}, "generator.num_users"),
    ({"preset": "nope"}, "preset"),
    ({"user": {"p_min_w": 1.0}}, "generator"),
    ({"mystery": 1}, "mystery"),
])
def test_bad_configs_name_the_field(data, where):
    with pytest.raises(cfgmod.ConfigError) as info:
        cfgmod.from_mapping(data)
    assert where in str(info.value)


def test_empty_config_rejected(tmp_path):
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.load(write(tmp_path, ""))
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.load(write(tmp_path, "a: [1"))


def test_input_bits_axis_keeps_cycles_per_bit():
    cfg = cfgmod.preset()
    out = cfgmod.with_axis_value(cfg, "input_bits", 1e7)
    assert out.task.workload_cycles == pytest.approx(2e9)
    assert cfg.task.input_bits == 5e6


def test_cli_run_writes_outputs(tmp_path, capsys):
    rc = main(["run", "--out", str(tmp_path), "--seed", "3"])
    assert rc == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["converged"] and summary["num_users"] == 20
    assert (tmp_path / "trace.csv").read_text().startswith("round,potential")


def test_cli_run_nonconverged_exit(tmp_path):
    assert main(["run", "--out", str(tmp_path), "--max-rounds", "1"]) == 3


def test_cli_config_error_exit(tmp_path, capsys):
    path = write(tmp_path, {"task": {"bogus": 1}})
    assert main(["run", "--config", path, "--out", str(tmp_path)]) == 2
    assert "task.bogus" in capsys.readouterr().err


def test_cli_poa_refuses_large_n(tmp_path, capsys):
    assert main(["poa", "--out", str(tmp_path)]) == 2
    assert "exhaustive limit" in capsys.readouterr().err


def test_cli_poa_small(tmp_path):
    path = write(tmp_path, {"preset": "poa-small",
                            "poa": {"power_grid_points": 6,
                                    "interference_multipliers": [0.0, 2.0]}})
    assert main(["poa", "--config", path, "--out", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "poa.json").read_text())
    assert report["poa"] >= 1 - 1e-9 and report["poa"] <= report["bound_upper"] * (1 + 1e-9)
    assert (tmp_path / "o" / "poa_sweep.csv").read_text().count("\n") == 3


def test_cli_validate(tmp_path):
    assert main(["validate", "--trials", "50", "--out", str(tmp_path)]) == 0
    result = json.loads((tmp_path / "validate.json").read_text())
    assert all(v["pass"] for v in result.values() if isinstance(v, dict))


def test_cli_validate_infeasible_profile(tmp_path):
    prof = tmp_path / "p.json"
    n = 20
    prof.write_text(json.dumps({"lam": [0.0] * n, "power": [0.1] * n, "freq": [1e9] * n}))
    rc = main(["validate", "--trials", "10", "--profile", str(prof), "--out", str(tmp_path)])
    assert rc == 4


def test_cli_sweep(tmp_path):
    rc = main(["sweep", "--axis", "num_users", "--values", "4", "6", "--seeds", "2",
               "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(lines) == 1 + 4
    assert len((tmp_path / "sweep_summary.csv").read_text().splitlines()) == 3


def test_cli_sweep_unknown_axis(tmp_path):
    assert main(["sweep", "--axis", "colour", "--out", str(tmp_path)]) == 2


def test_cli_preset(capsys):
    assert main(["preset", "poa-small"]) == 0
    data = yaml.safe_load(capsys.readouterr().out)
    assert data["generator"]["num_users"] == 4
