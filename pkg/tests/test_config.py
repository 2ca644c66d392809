"""Run configuration loading and validation."""

import json

import pytest
from pydantic import ValidationError

from src.utils.config import Config, InnerConfig, Params, RunConfig, SweepConfig
from src.utils.errors import ConfigurationError, LabError


class TestRunConfig:
    def test_defaults_are_admissible(self):
        config = RunConfig()
        assert config.scenario == "construct"
        assert config.eps1 == pytest.approx(1.04 / 27.0)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            RunConfig.load(tmp_path / "absent.json")

    def test_unreadable_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{not json")
        with pytest.raises(ConfigurationError):
            RunConfig.load(path)

    def test_invalid_values(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"params": {"delta": 2.0}}))
        with pytest.raises(ConfigurationError) as info:
            RunConfig.load(path)
        assert info.value.details["errors"]

    def test_parameters_beyond_beta0(self):
        with pytest.raises(ValidationError):
            RunConfig(params=Params(nu=0.08, alpha0=0.05))

    def test_matching_constraint(self):
        with pytest.raises(ValidationError):
            RunConfig(inner=InnerConfig(order=3))

    def test_sweep_range(self):
        with pytest.raises(ValidationError):
            SweepConfig(t_min=100.0, t_max=50.0)


class TestProcessConfig:
    def test_rejects_unknown_log_format(self, monkeypatch, tmp_path):
        monkeypatch.setattr(Config, "DATA_DIRECTORY", tmp_path)
        monkeypatch.setattr(Config, "LOG_FORMAT", "xml")
        with pytest.raises(ValueError):
            Config.validate()

    def test_creates_data_directory(self, monkeypatch, tmp_path):
        target = tmp_path / "runs"
        monkeypatch.setattr(Config, "DATA_DIRECTORY", target)
        monkeypatch.setattr(Config, "LOG_FORMAT", "console")
        monkeypatch.setattr(Config, "LAB_THREADS", 1)
        monkeypatch.setattr(Config, "LAB_CONFIG", None)
        Config.validate()
        assert target.is_dir()


def test_errors_serialize():
    error = ConfigurationError("bad", {"key": 1})
    assert isinstance(error, LabError)
    assert isinstance(error, ValueError)
    assert error.to_dict() == {
        "type": "ConfigurationError",
        "message": "bad",
        "details": {"key": 1},
    }
