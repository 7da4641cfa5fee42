import json

import pytest

from cliffsamp.config import ConfigError, load_config, parse_config, preset_data, preset_names, set_path


def base():
    return {
        "name": "t",
        "circuit": {"preset": "standard", "n": 2},
        "noise": {"model": "depolarizing", "epsilon": 0.01},
        "sampling": {"estimator": "mean_value", "mode": "clifford", "n_configs": 10, "seed": 1},
    }


def test_minimal_config_parses():
    cfg = parse_config(base())
    assert cfg.sampling.modes == ["clifford"]
    assert cfg.build_circuit().n_qubits == 2


@pytest.mark.parametrize(
    "edit",
    [
        lambda d: d["sampling"].pop("seed"),
        lambda d: d["sampling"].update(seed=-1),
        lambda d: d["sampling"].update(estimator="both"),
        lambda d: d["sampling"].update(mode="haar"),
        lambda d: d["sampling"].update(mode=["clifford", "clifford"]),
        lambda d: d["sampling"].update(mode=[]),
        lambda d: d["sampling"].pop("n_configs"),
        lambda d: d["sampling"].update(g_draws=10),
        lambda d: d["sampling"].update(estimator="single_run", n_s=10, mode="unitary"),
        lambda d: d["circuit"].update(inline={"n_qubits": 1}),
        lambda d: d["circuit"].pop("n"),
        lambda d: d["circuit"].update(observable_qubit=1),
        lambda d: d.update(extra=1),
        lambda d: d.update(outputs={"moments": 15}),
    ],
)
def test_invalid_configs_rejected(edit):
    d = base()
    edit(d)
    with pytest.raises(ConfigError) as info:
        parse_config(d)
    assert info.value.details


def test_single_run_config():
    d = base()
    d["sampling"] = {"estimator": "single_run", "n_s": 100, "seed": 3}
    assert parse_config(d).sampling.n_s == 100


def test_presets_all_parse_and_build():
    names = preset_names()
    assert {"depolarizing", "zero-noise", "fig2a", "fig2b", "figS8"} <= set(names)
    for name in names:
        cfg = parse_config(preset_data(name))
        circuit = cfg.build_circuit()
        cfg.build_noise(circuit)
        assert cfg.sampling.seed is not None


def test_unknown_preset_lists_available():
    with pytest.raises(ConfigError) as info:
        load_config("no-such-preset")
    assert "depolarizing" in info.value.details[0]


def test_load_from_file_and_relative_circuit(tmp_path):
    circ = {
        "n_qubits": 1,
        "layers": [[{"kind": "SLOT", "qubits": [0], "slot_id": 0}]],
        "observable": [{"coeff": 1.0, "pauli": "Z"}],
    }
    (tmp_path / "c.json").write_text(json.dumps(circ))
    d = base()
    d["circuit"] = {"file": "c.json"}
    (tmp_path / "cfg.json").write_text(json.dumps(d))
    cfg, root = load_config(tmp_path / "cfg.json")
    assert root == tmp_path
    assert cfg.build_circuit(root).n_slots == 1


def test_bad_json_and_missing_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_set_path():
    d = base()
    out = set_path(d, "noise.epsilon", 0.5)
    assert out["noise"]["epsilon"] == 0.5 and d["noise"]["epsilon"] == 0.01
    for bad in ("noise.eps", "noise.model", "noise.epsilon.x", "nothing"):
        with pytest.raises(ConfigError):
            set_path(d, bad, 1.0)
