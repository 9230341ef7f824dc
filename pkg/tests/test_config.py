import math

import numpy as np
import pytest

from convins.config import OUTPUT_ENV, ConfigError, ExperimentSection, ScenarioConfig, load_config, parse_config
from convins.imu import mems_accel, mems_gyro


def test_empty_is_default():
    cfg = parse_config("")
    ref = ScenarioConfig()
    assert cfg.trajectory == ref.trajectory
    assert cfg.train == ref.train
    np.testing.assert_allclose(cfg.errors.gyro.bias, mems_gyro().bias)
    np.testing.assert_allclose(cfg.errors.accel.noise_density, mems_accel().noise_density)
    assert cfg.errors.warmup == 5.0


def test_default_keyword():
    assert load_config("default").train == ScenarioConfig().train


def test_units_are_converted():
    cfg = parse_config("""
[errors.gyro]
bias_deg_h = [36.0, 72.0, 0.0]
noise_deg_s_rthz = 0.2
[errors.accel]
bias_ug = 2000.0
noise_ug_rthz = 100.0
scale_factor = 0.02
""")
    np.testing.assert_allclose(cfg.errors.gyro.bias, np.radians([0.01, 0.02, 0.0]))
    assert cfg.errors.gyro.noise_density == pytest.approx(math.radians(0.2))
    np.testing.assert_allclose(cfg.errors.accel.bias, 2e-3 * 9.80665)
    assert cfg.errors.accel.noise_density == pytest.approx(1e-4 * 9.80665)
    np.testing.assert_allclose(cfg.errors.accel.scale_factor, 0.02)


def test_segments():
    cfg = parse_config("""
[[trajectory.segments]]
kind = "straight"
duration = 10.0
speed = 5.0
[[trajectory.segments]]
kind = "turn"
duration = 30.0
speed = 5.0
turn_rate_deg_s = -3.0
""")
    segs = cfg.trajectory.script()
    assert [s.kind for s in segs] == ["straight", "turn"]
    assert segs[1].turn_rate == pytest.approx(-math.radians(3.0))


@pytest.mark.parametrize("text, path", [
    ("[trajectory]\nduration = -5.0\n", "trajectory.duration"),
    ("[trajectory]\ndt = 0.0\n", "trajectory.dt"),
    ("[trajectory]\ndt = 0.003\n", "trajectory.dt"),
    ("[errors.gyro]\nsample_rate = 50.0\n", "errors.gyro.sample_rate"),
    ("[train]\nwindow = 8\n", "train.window"),
    ("[train]\nvariants = [\"wide\"]\n", "train.variants"),
    ("[train]\nepochs = \"ten\"\n", "train.epochs"),
    ("[train]\nbatch = 0\n", "train"),
    ("[experiment]\ntrain_fraction = 1.0\n", "experiment.train_fraction"),
    ("[errors.gyro]\nbias_deg_h = [1.0, 2.0]\n", "errors.gyro.bias_deg_h"),
    ("[errors.accel]\nsurprise = 1\n", "errors.accel.surprise"),
    ("[[trajectory.segments]]\nkind = \"turn\"\nduration = 5.0\nspeed = 1.0\n",
     "trajectory.segments[0]"),
    ("schema_version = 2\n", "schema_version"),
    ("colour = 1\n", "colour"),
])
def test_validation_names_key(text, path):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.path == path
    assert str(info.value).startswith(path)


def test_deep_window_message():
    with pytest.raises(ConfigError, match="deep"):
        parse_config("[train]\nwindow = 8\n")


def test_shallow_variants_accept_small_window():
    cfg = parse_config("[train]\nwindow = 8\nvariants = [\"superficial\", \"medium\"]\n")
    assert cfg.train.window == 8


def test_parse_error_has_line():
    with pytest.raises(ConfigError) as info:
        parse_config("[train]\nepochs = 3\nlr = = 2\n")
    assert info.value.line == 3
    assert "line 3" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")


def test_load_from_file(tmp_path):
    p = tmp_path / "s.toml"
    p.write_text("[train]\nseed = 3\nepochs = 2\n")
    cfg = load_config(p)
    assert (cfg.train.seed, cfg.train.epochs) == (3, 2)


def test_output_dir_from_environment(monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, "/tmp/somewhere")
    assert ExperimentSection().output_dir == "/tmp/somewhere"
    monkeypatch.delenv(OUTPUT_ENV)
    assert ExperimentSection().output_dir == "out"


def test_with_seed():
    assert ScenarioConfig().with_seed(99).train.seed == 99
