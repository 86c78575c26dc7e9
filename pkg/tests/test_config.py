"""Config file parsing and environment overrides."""

import pytest

from uamas.config import ConfigError, Settings, load_settings, parse_config_file
from uamas.dataset import Task


class TestConfigFile:
    def test_parse_and_apply(self, tmp_path):
        path = tmp_path / "uamas.conf"
        path.write_text(
            "# demo config\n"
            "port=9001\n"
            "speed=120\n"
            "loop=true\n"
            "threshold=0.75\n"
            "threshold.cooler=0.9\n"
            "\n"
            "dataset_root=/data/rig\n"
        )
        settings = load_settings(path, env={})
        assert settings.port == 9001
        assert settings.speed == 120.0
        assert settings.loop is True
        assert settings.threshold == 0.75
        assert settings.threshold_for(Task.COOLER) == 0.9
        assert settings.threshold_for(Task.VALVE) == 0.75
        assert settings.dataset_root == "/data/rig"

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.conf"
        path.write_text("warp_factor=9\n")
        with pytest.raises(ConfigError):
            load_settings(path, env={})

    def test_bad_line_rejected(self, tmp_path):
        path = tmp_path / "bad.conf"
        path.write_text("just some words\n")
        with pytest.raises(ConfigError):
            parse_config_file(path)

    def test_unknown_task_threshold(self, tmp_path):
        path = tmp_path / "bad.conf"
        path.write_text("threshold.warp=0.5\n")
        with pytest.raises(ConfigError):
            load_settings(path, env={})


class TestEnvOverrides:
    def test_env_beats_file(self, tmp_path):
        path = tmp_path / "uamas.conf"
        path.write_text("port=9001\nspeed=120\n")
        settings = load_settings(path, env={"UMAS_PORT": "7777", "UMAS_LOOP": "yes"})
        assert settings.port == 7777
        assert settings.speed == 120.0
        assert settings.loop is True

    def test_task_threshold_env(self):
        settings = load_settings(None, env={"UMAS_THRESHOLD_COOLER": "0.95"})
        assert settings.threshold_for(Task.COOLER) == 0.95

    def test_unrelated_env_ignored(self):
        settings = load_settings(None, env={"PATH": "/usr/bin", "UMASX_PORT": "1"})
        assert settings == Settings()

    def test_banner_lists_everything(self):
        settings = load_settings(None, env={"UMAS_THRESHOLD_VALVE": "0.7"})
        banner = settings.as_banner()
        assert "port=8000" in banner
        assert "threshold.valve=0.7" in banner
        assert "seed=7" in banner
