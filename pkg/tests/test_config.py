import math

import numpy as np
import pytest

from dqilc.config import (
    ExperimentConfig,
    dump_config,
    from_dict,
    load_config,
    proximity_preset,
    save_config,
    to_dict,
    two_segment_preset,
    validate,
)
from dqilc.dual_quaternion import dq_to_pose, is_unit


def test_defaults_match_scenario():
    cfg = proximity_preset()
    assert (cfg.duration, cfg.frequency, cfg.iterations, cfg.segments) == (20.0, 1000.0, 31, 200)
    assert cfg.n_steps == 20000 and cfg.times.size == 20001
    g = cfg.gains
    assert (g.k_p, g.k_d, g.k_c, g.k_theta, g.k_l) == (1.0, 1.0, 0.01, 0.002, 0.02)
    assert cfg.body.mass == 19.0 and cfg.body.nominal_mass == 20.0
    assert cfg.variant == "saturated" and cfg.saturated
    assert two_segment_preset().segments == 2


def test_initial_pose_is_normalized():
    x = proximity_preset().reference.initial_pose()
    assert is_unit(x)
    p = dq_to_pose(x)
    np.testing.assert_allclose(p.position, [0, 0, -6778200.0], atol=1e-6)
    raw = np.array([0.7055, 0.0471, -0.7055, -0.0471])
    np.testing.assert_allclose(p.attitude.components, raw / np.linalg.norm(raw), rtol=1e-15)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"frequency": 0.0},
        {"duration": -1.0},
        {"iterations": 0},
        {"segments": 0},
        {"variant": "eq99"},
        {"duration": 1.0005},
    ],
)
def test_invalid(kwargs):
    with pytest.raises(ValueError):
        ExperimentConfig(**kwargs)


def test_dict_round_trip():
    cfg = proximity_preset(iterations=4).with_seed(7)
    back = from_dict(to_dict(cfg))
    assert to_dict(back) == to_dict(cfg)
    assert back.disturbance.seed == 7
    assert back.body.inertia == cfg.body.inertia


def test_yaml_round_trip(tmp_path):
    cfg = two_segment_preset(variant="unsaturated", output_dir="x")
    path = tmp_path / "c.yaml"
    save_config(cfg, path)
    assert to_dict(load_config(path)) == to_dict(cfg)
    assert "k_theta" in dump_config(cfg)


def test_preset_with_overrides(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("preset: proximity-s2\niterations: 3\ngains:\n  k_p: 2.0\n")
    cfg = load_config(path)
    assert cfg.segments == 2 and cfg.iterations == 3
    assert cfg.gains.k_p == 2.0 and cfg.gains.k_d == 1.0


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("")
    assert to_dict(load_config(path)) == to_dict(proximity_preset())


@pytest.mark.parametrize(
    "text, match",
    [
        ("bogus: 1\n", "unknown"),
        ("gains:\n  k_q: 1\n", "unknown"),
        ("preset: nope\n", "preset"),
        ("gains: 3\n", "mapping"),
        ("gains:\n  k_p: -1\n", "k_p"),
    ],
)
def test_load_errors(tmp_path, text, match):
    path = tmp_path / "c.yaml"
    path.write_text(text)
    with pytest.raises(ValueError, match=match):
        load_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(OSError, match="cannot read"):
        load_config(tmp_path / "none.yaml")


def test_validate_findings():
    assert validate(proximity_preset()) == []
    bad = proximity_preset(duration=0.01, frequency=100.0, segments=5)
    assert any("segments" in p for p in validate(bad))
    from dqilc.config import BodyConfig

    asym = proximity_preset(body=BodyConfig(inertia=((1, 0.5, 0), (0, 1, 0), (0, 0, 1))))
    assert any("body" in p for p in validate(asym))


def test_dt():
    assert proximity_preset().dt == pytest.approx(1e-3)
    assert math.isclose(proximity_preset(frequency=250.0).dt, 0.004)
