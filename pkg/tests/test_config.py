import pytest

from config.app_config import WORKSPACE_ENV, AppConfig
from utils.errors import ConfigError


@pytest.fixture(autouse=True)
def no_workspace_env(monkeypatch):
    monkeypatch.delenv(WORKSPACE_ENV, raising=False)


def test_defaults():
    config = AppConfig()
    assert config.get_setting("spci", "window_capacity") == 5000
    assert config.get_setting("spci", "lag_window") == 24
    assert config.get_setting("evaluation", "alphas") == [0.1, 0.05, 0.01]
    assert config.get_setting("shift", "policy") == "dominance"
    assert config.get_setting("spci", "missing", default="x") == "x"


def test_no_regions_is_rejected():
    with pytest.raises(ConfigError, match="region"):
        AppConfig().to_pipeline_config()


def test_yaml_overrides_merge_with_defaults(write_file):
    path = write_file(
        "config.yaml",
        "regions: [CISO]\nspci:\n  n_trees: 3\n  horizons: [1, 24]\nshift:\n  policy: overlap:0.3\n",
    )
    settings = AppConfig(path).to_pipeline_config()
    assert settings.regions == ("CISO",)
    assert settings.spci.n_trees == 3
    assert settings.spci.lag_window == 24
    assert settings.spci.horizons == (1, 24)
    assert settings.spci.alpha == 0.1
    assert settings.policy.theta == 0.3


def test_workspace_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv(WORKSPACE_ENV, str(tmp_path))
    assert AppConfig().get_setting("output", "workspace") == str(tmp_path)


def test_command_line_overrides(write_file):
    config = AppConfig(write_file("config.yaml", "regions: [CISO, ERCO]\n"))
    config.apply_overrides(region="ERCO", alphas=[0.05], policy="point", seed=7, mode="spatial")
    settings = config.to_pipeline_config()
    assert settings.regions == ("ERCO",)
    assert settings.alphas == (0.05,)
    assert settings.shift.alpha == 0.05
    assert settings.policy.kind == "point"
    assert settings.spci.seed == 7
    assert settings.shift.mode == "spatial"


def test_splits_out_of_order(write_file):
    path = write_file(
        "config.yaml",
        "regions: [CISO]\nsplits:\n  calibration_end: '2021-06-01T00:00:00Z'\n",
    )
    with pytest.raises(ConfigError, match="train_end < calibration_end"):
        AppConfig(path).to_pipeline_config()


def test_bad_values_name_their_section(write_file):
    config = AppConfig(write_file("config.yaml", "regions: [CISO]\nspci:\n  lag_window: 6000\n"))
    with pytest.raises(ConfigError, match="'spci'"):
        config.to_pipeline_config()

    config = AppConfig(write_file("other.yaml", "regions: [CISO]\nshift:\n  policy: greedy\n"))
    with pytest.raises(ConfigError, match="'shift'"):
        config.to_pipeline_config()


def test_unreadable_files(write_file, tmp_path):
    with pytest.raises(ConfigError):
        AppConfig(str(tmp_path / "absent.yaml"))
    with pytest.raises(ConfigError):
        AppConfig(write_file("list.yaml", "- a\n- b\n"))


def test_day_ahead_defaults(write_file):
    settings = AppConfig(write_file("config.yaml", "regions: [CISO]\n")).to_pipeline_config()
    assert settings.shift.lead == "day_ahead"
    assert settings.forecast.horizon == 48
    assert settings.spci.horizons == tuple(range(1, 49))


def test_streams_beyond_the_forecast_horizon(write_file):
    config = AppConfig(write_file("config.yaml", "regions: [CISO]\nforecast:\n  horizon: 24\n"))
    with pytest.raises(ConfigError, match="'pipeline'"):
        config.to_pipeline_config()

    config = AppConfig(write_file("lead.yaml", "regions: [CISO]\nshift:\n  lead: week_ahead\n"))
    with pytest.raises(ConfigError, match="'shift'"):
        config.to_pipeline_config()
