import json

import numpy as np
import pytest

from ifire.firing_map import build_map_closed, sync_partition
from ifire.io import (
    ConfigError,
    dump_model_config,
    fmt,
    load_model_config,
    parse_model_config,
    read_log_csv,
    write_cobweb_csv,
    write_json,
    write_log_csv,
    write_map_csv,
    write_regions_csv,
    write_snapshot_csv,
)
from ifire.model import make_catalog_model
from ifire.simulation import run

PESKIN = {"model": "leaky", "params": {"S": 2.0, "gamma": 1.0, "epsilon": 0.2}, "initial_state": [0.0, 0.1]}


def test_round_trip_preserves_hash(tmp_path):
    cfg = parse_model_config(dict(PESKIN, integrator={"rel_tol": 1e-9}))
    path = tmp_path / "m.json"
    dump_model_config(cfg, path)
    back = load_model_config(path)
    assert back == cfg
    assert back.hash == cfg.hash
    assert back.integrator_config().rel_tol == 1e-9


def test_hash_ignores_initial_state_and_key_order():
    a = parse_model_config(PESKIN)
    b = parse_model_config({"params": {"epsilon": 0.2, "gamma": 1.0, "S": 2.0}, "model": "leaky"})
    assert a.hash == b.hash
    c = parse_model_config(dict(PESKIN, params={"S": 2.0, "gamma": 1.0, "epsilon": 0.21}))
    assert a.hash != c.hash


@pytest.mark.parametrize("obj, field", [
    ([1, 2], "top level"),
    (dict(PESKIN, colour="red"), "colour"),
    ({"model": "spiral", "params": {}}, "spiral"),
    (dict(PESKIN, params={"S": 2, "gamma": 1, "epsilon": 0.2, "beta": 0.1}), "beta"),
    (dict(PESKIN, params={"S": "two", "gamma": 1, "epsilon": 0.2}), "params.S"),
    (dict(PESKIN, params={"S": 2, "gamma": 1, "epsilon": True}), "params.epsilon"),
    (dict(PESKIN, initial_state=[0, "x"]), "initial_state[1]"),
    (dict(PESKIN, integrator={"order": 5}), "order"),
    (dict(PESKIN, integrator={"rel_tol": -1}), "rel_tol"),
])
def test_rejections_name_the_field(obj, field):
    with pytest.raises(ConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
        parse_model_config(obj)


def test_bad_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"model": "leaky",\n "params": {,}}')
    with pytest.raises(ConfigError, match="line 2"):
        load_model_config(path)
    with pytest.raises(ConfigError):
        load_model_config(tmp_path / "missing.json")


def test_build_wraps_model_errors():
    cfg = parse_model_config({"model": "leaky", "params": {"S": 0.5, "gamma": 1.0, "epsilon": 0.2}})
    with pytest.raises(ConfigError, match="kappa"):
        cfg.build()


def test_fmt():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(np.float64(2.0)) == "2"
    assert fmt(7) == "7" and fmt(True) == "true" and fmt("a") == "a"


def test_write_json_rounds_and_spells_infinity(tmp_path):
    path = tmp_path / "x.json"
    write_json({"a": 1 / 3, "b": np.inf, "c": [np.float64(0.1), np.int64(3)], "d": np.bool_(False)}, path)
    data = json.loads(path.read_text())
    assert data == {"a": 0.333333333333, "b": "inf", "c": [0.1, 3], "d": False}


def test_log_csv_round_trip(tmp_path):
    m = make_catalog_model("leaky", S=2, gamma=1, epsilon=0.2, n=3)
    log = run(m, [0.0, 0.0, 0.5], max_firings=8)
    path = tmp_path / "log.csv"
    write_log_csv(log, path, {"seed": 3})
    header, rows = read_log_csv(path)
    assert header["n"] == 3 and header["events"] == 8 and header["seed"] == 3
    assert len(rows) == 8
    for e, r in zip(log, rows):
        assert r["event_index"] == e.index and r["firers"] == e.firers
        assert r["t"] == pytest.approx(e.t, rel=1e-11)
        assert np.allclose(r["x"], e.post_state, atol=1e-12)


def test_writers_are_deterministic(tmp_path):
    L = build_map_closed("leaky", kappa=2, epsilon=0.2)
    for name, write in [("map.csv", lambda p: write_map_csv(L, p, 101)),
                        ("cob.csv", lambda p: write_cobweb_csv(L, p, 0.3, 10)),
                        ("reg.csv", lambda p: write_regions_csv(sync_partition(L), p)),
                        ("snap.csv", lambda p: write_snapshot_csv(np.array([0.5, 0.1, 0.3]), p))]:
        write(tmp_path / ("a" + name))
        write(tmp_path / ("b" + name))
        assert (tmp_path / ("a" + name)).read_bytes() == (tmp_path / ("b" + name)).read_bytes()


def test_map_and_snapshot_contents(tmp_path):
    L = build_map_closed("leaky", kappa=2, epsilon=0.2)
    write_map_csv(L, tmp_path / "map.csv", 11)
    rows = np.loadtxt(tmp_path / "map.csv", delimiter=",", skiprows=1)
    assert rows.shape == (11, 4)
    assert np.allclose(rows[:, 1], L(rows[:, 0]), atol=1e-11)
    assert np.allclose(rows[:, 2], L(L(rows[:, 0])), atol=1e-11)
    write_snapshot_csv(np.array([0.5, 0.1, 0.3]), tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines == ["rank,oscillator_index,x", "0,1,0.1", "1,2,0.3", "2,0,0.5"]
