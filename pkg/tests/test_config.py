import pytest

from combinatorium import config


def test_defaults():
    cfg = config.from_dict({})
    assert cfg.world.width == 64 and cfg.world.D == 10.0
    spec = cfg.experiment_spec()
    assert spec.ribosomes == 64 and spec.empty_objects == {0: 2, 1: 3}


def test_yaml_file(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text("world: {width: 32, height: 32}\nseed: 4\nhorizon: {time: 50}\n"
                 "experiment:\n  ribosomes: 8\n  empty_objects: {0: 1}\n"
                 "replenish:\n  overrides: {'op:amb': 5}\n")
    cfg = config.load(p)
    assert cfg.world.width == 32 and cfg.seed == 4 and cfg.horizon.time == 50.0
    spec = cfg.experiment_spec()
    assert spec.ribosomes == 8 and spec.empty_objects == {0: 1}
    assert spec.replenish_overrides == {"op:amb": 5}


@pytest.mark.parametrize("data,msg", [
    ({"wrold": {}}, "unknown key"),
    ({"world": {"depth": 3}}, "unknown key"),
    ({"seed": "one"}, "integer"),
    ({"seed": True}, "integer"),
    ({"world": {"D": -1}}, "positive"),
    ({"world": []}, "mapping"),
    ({"runs": 0}, "at least 1"),
    ({"sample_dt": 0}, "positive"),
    ({"horizon": {"time": None}}, "time or an event"),
    ({"experiment": {"empty_objects": {7: 1}}}, "outside"),
    ({"replenish": {"enabled": "yes"}}, "true/false"),
    ({"world": {"width": 2}}, "at least 3"),
])
def test_rejects_bad_config(data, msg):
    with pytest.raises(config.ConfigError, match=msg):
        config.from_dict(data)


def test_event_horizon_only():
    cfg = config.from_dict({"horizon": {"time": None, "events": 100}})
    assert cfg.horizon.events == 100


def test_bad_yaml(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("world: [1, 2\n")
    with pytest.raises(config.ConfigError):
        config.load(p)
