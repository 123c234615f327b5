from __future__ import annotations

import csv
import dataclasses
import json

import numpy as np
import pytest

from sda.errors import ConfigError
from sda.simulation import (
    ScenarioConfig,
    bundled_scenarios,
    load_scenario,
    run_scenario,
    simulate_dataset,
)


def _tiny(**kw):
    base = dict(n=40, p=10, q=2, setting="S1", replicates=3, draws=100, tested=(0, 1, 2, 5), seed=7)
    base.update(kw)
    return ScenarioConfig(**base, precision={"kind": "block", "q": 5})


def test_bundled_scenarios_load():
    names = bundled_scenarios()
    assert {"null_q5_desk", "s1_q5_r1_desk", "s1_q5_r3_desk", "s1_q5_r4_desk",
            "s2_q5_r1_desk", "s2_q5_r3_desk", "sw_e5_s1_r1_desk"} <= set(names)
    for name in names:
        cfg = load_scenario(name)
        assert cfg.name == name
        assert cfg.to_dict() == ScenarioConfig.from_dict(cfg.to_dict()).to_dict()


def test_config_validation():
    with pytest.raises(ConfigError, match="R5"):
        _tiny(regression="R5")
    with pytest.raises(ConfigError):
        _tiny(setting="S3")
    with pytest.raises(ConfigError):
        _tiny(alpha=1.5)
    with pytest.raises(ConfigError):
        _tiny(tested=(10,))
    with pytest.raises(ConfigError):
        ScenarioConfig(n=40, p=12, precision={"kind": "block", "q": 5})
    with pytest.raises(ConfigError):
        ScenarioConfig(n=40, p=10, precision={"kind": "lattice"})
    with pytest.raises(ConfigError, match="unknown scenario fields"):
        ScenarioConfig.from_dict({"n": 40, "p": 10, "bogus": 1})
    with pytest.raises(ConfigError):
        load_scenario("no_such_scenario")


def test_scenario_file_round_trip(tmp_path):
    cfg = _tiny()
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert load_scenario(path) == cfg
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_scenario(path)


def test_replicate_data_is_seeded():
    cfg = _tiny()
    a, _ = simulate_dataset(cfg, 1)
    b, _ = simulate_dataset(cfg, 1)
    c, _ = simulate_dataset(cfg, 2)
    assert a.x.tobytes() == b.x.tobytes() and a.y.tobytes() == b.y.tobytes()
    assert a.x.tobytes() != c.x.tobytes()
    assert np.allclose(a.x.mean(axis=0), 0, atol=1e-12)


def test_null_setting_has_no_signal():
    cfg = _tiny(setting="null")
    assert not cfg.coefficients().any()
    assert list(cfg.tested_indices()) == [0, 1, 2, 5]
    assert list(dataclasses.replace(cfg, tested=None).tested_indices()) == list(range(10))


def test_smallworld_deltas_recorded():
    cfg = ScenarioConfig(n=30, p=25, q=5, replicates=2, precision={"kind": "smallworld", "e": 3})
    _, delta = simulate_dataset(cfg, 0)
    assert delta > 0


def test_report_is_deterministic_and_worker_independent():
    cfg = _tiny()
    a = run_scenario(cfg)
    b = run_scenario(cfg)
    c = run_scenario(cfg, workers=2)
    for other in (b, c):
        assert a.ks_rejections.tobytes() == other.ks_rejections.tobytes()
        assert a.cvm_rejections.tobytes() == other.cvm_rejections.tobytes()
        assert json.dumps(a.metadata()["groups"]) == json.dumps(other.metadata()["groups"])
    assert a.ks_rejections.shape == (3, 4)


def test_grouping_by_coefficient():
    cfg = _tiny()
    rep = run_scenario(cfg)
    # q = 2: signals at 0, 2, 4, 6, 8; tested (0, 1, 2, 5) gives 0.2, 0, -0.4, 0
    assert rep.group(0.2).variables == 1
    assert rep.group(-0.4).variables == 1
    assert rep.group(0.0).variables == 2
    assert rep.group(1.0).variables == 0 and np.isnan(rep.group(1.0).cvm_rate)
    assert rep.group(0.0).cvm_rate == pytest.approx(rep.cvm_rejections[:, [1, 3]].mean())


def test_write_format(tmp_path):
    rep = run_scenario(_tiny(replicates=2))
    csv_path, json_path = rep.write(tmp_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("# config: ")
    assert json.loads(lines[0][len("# config: "):])["seed"] == 7
    row = next(csv.DictReader(lines[1:]))
    for label in ("0.2", "-0.4", "0.6", "-0.8", "1.0", "0"):
        assert f"ks_{label}" in row and f"cvm_{label}" in row
    assert row["setting"] == "S1" and row["n"] == "40"
    meta = json.loads(json_path.read_text())
    assert set(meta) == {"config", "groups", "pd_repair_deltas", "timing"}
    assert len(meta["pd_repair_deltas"]) == 2
