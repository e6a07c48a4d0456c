import pytest

from gaitsig.config import PipelineConfig, load_config
from gaitsig.errors import ConfigError


def test_defaults():
    cfg = load_config()
    assert (cfg.band_lo, cfg.band_hi, cfg.filter_order) == (0.1, 10.0, 4)
    assert (cfg.eps_p, cfg.eps_v) == (2.0, -2.0)
    assert (cfg.eps_lo, cfg.eps_up) == (0.5, 1.4)
    assert cfg.gamma == 1e-4
    assert cfg.grid_size == 100
    assert cfg.criterion == "bic"
    assert cfg.auto_bounds is False


def test_file_values_and_override_precedence(tmp_path):
    path = tmp_path / "gait.cfg"
    path.write_text("# walking session\nEPS_LO=0.6\neps_up = 1.3\ngrid_size=80\nauto_bounds=yes\n")
    cfg = load_config(path, {"eps_up": 1.2, "gamma": None})
    assert cfg.eps_lo == 0.6
    assert cfg.eps_up == 1.2
    assert cfg.grid_size == 80
    assert cfg.auto_bounds is True
    assert cfg.gamma == 1e-4


def test_running_mode_swaps_thresholds():
    cfg = load_config(overrides={"mode": "running"})
    assert (cfg.eps_p, cfg.eps_v) == (4.0, -5.0)


def test_explicit_thresholds_win_over_mode():
    cfg = load_config(overrides={"mode": "running", "eps_p": 3.0})
    assert cfg.eps_p == 3.0
    assert cfg.eps_v == -5.0


def test_file_threshold_keeps_the_other_preset_value(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("mode=running\neps_v=-6\n")
    cfg = load_config(path)
    assert (cfg.eps_p, cfg.eps_v) == (4.0, -6.0)


def test_walking_mode_with_one_threshold_given():
    cfg = load_config(overrides={"eps_v": -1.5})
    assert (cfg.eps_p, cfg.eps_v) == (2.0, -1.5)


@pytest.mark.parametrize(
    "text, message",
    [
        ("speed=3\n", "unknown config key 'speed'"),
        ("grid_size=many\n", "invalid value for grid_size"),
        ("eps_lo=1.5\neps_up=1.0\n", "0 < eps_lo < eps_up"),
        ("criterion=mdl\n", "criterion"),
    ],
)
def test_bad_config_files(tmp_path, text, message):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError, match=message):
        load_config(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.cfg")


def test_band_is_checked_against_nyquist():
    cfg = PipelineConfig(band_hi=30.0)
    cfg.validate()
    with pytest.raises(ConfigError, match="Nyquist"):
        cfg.validate(nominal_rate=50.0)


def test_order_range_must_fit_grid():
    with pytest.raises(ConfigError, match="2\\*k_max-1"):
        PipelineConfig(grid_size=20, k_max=11).validate()


def test_as_dict_echo():
    echo = PipelineConfig().as_dict()
    assert echo["similarity"] == "pearson"
    assert set(echo) >= {"band_lo", "eps_p", "gamma", "k_max", "penalty_count"}
