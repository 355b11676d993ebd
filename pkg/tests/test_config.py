import logging
import pathlib

import pytest

from kslab.errors import ConfigError
from kslab.harness import config
from kslab.harness.config import SimConfig, load_config, make_config, parse_config_text
from kslab.harness.schedule import epsilon_schedule


def test_defaults():
    cfg = SimConfig()
    assert (cfg.d, cfg.N, cfg.dt, cfg.epsilon) == (1, 256, 0.01, 0.2)
    assert cfg.steps == 50
    assert cfg.grid_spec().cells == 512
    assert cfg.half_width == 8.0
    assert cfg.decimation == 3


def test_half_width_is_raised_to_the_image_bound():
    assert SimConfig(d=2).half_width == 7.0
    assert SimConfig(d=2, T=0.1).half_width == 6.0
    with pytest.raises(ConfigError, match="image bound"):
        SimConfig(L=4.0)


def test_step_must_resolve_the_cut_off():
    with pytest.raises(ConfigError, match=r"dt > eps/4"):
        SimConfig(eps=0.02)


@pytest.mark.parametrize(
    "changes",
    [{"d": 0}, {"N": 1}, {"T": 0.0}, {"lam": -1.0}, {"M": 100}, {"drift_mode": "slow"}, {"weight": 1.5}],
)
def test_invalid_values(changes: dict):
    with pytest.raises(ConfigError):
        SimConfig(**changes)


def test_auto_cut_off_follows_the_schedule():
    cfg = make_config({"eps": "auto", "N": "1000", "lambda_cut": "0.5"})
    assert cfg.eps is None
    assert cfg.epsilon == pytest.approx(epsilon_schedule(1000, 0.5, 1))
    with pytest.raises(ConfigError):
        SimConfig(eps=None, N=2)


def test_unknown_keys_get_a_suggestion():
    with pytest.raises(ConfigError, match="did you mean 'sigma'"):
        make_config({"sigm": "0.3"})
    with pytest.raises(ConfigError, match="bad value"):
        make_config({"N": "many"})


def test_hash_ignores_the_output_directory():
    base = SimConfig()
    assert base.config_hash() == base.with_updates(output_dir="elsewhere").config_hash()
    assert base.config_hash() != base.with_updates(N=512).config_hash()
    assert len(base.config_hash()) == 16
    # Resolved values hash the same as their defaults.
    assert base.config_hash() == base.with_updates(L=8.0, M=512).config_hash()


def test_config_text():
    entries = parse_config_text("# header\nd = 2\nN=64   # particles\n\nlambda = 0.3\n")
    assert entries == {"d": "2", "N": "64", "lambda": "0.3"}
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("d = 1\nnonsense\n")


def test_load_config_applies_overrides(tmp_path: pathlib.Path):
    path = tmp_path / "run.cfg"
    path.write_text("d = 2\nN = 64\ninteraction = off\nlambda = 0.3\n")
    cfg = load_config(path, {"N": "128"})
    assert (cfg.d, cfg.N, cfg.lam, cfg.interaction) == (2, 128, 0.3, False)
    assert load_config(None) == SimConfig()


def test_wide_initial_data_is_reported(caplog: pytest.LogCaptureFixture):
    with caplog.at_level(logging.WARNING, logger="kslab.harness.config"):
        SimConfig(sigma=2.0)
    assert "outside" in caplog.text
    assert config.IMAGE_TOLERANCE == 1e-10
