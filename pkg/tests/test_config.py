import logging
import json

import pydantic
import pytest

from sonoforge.cli import load_config
from sonoforge.config import Settings
from sonoforge.domain.exceptions import NotFoundError, ValidationError
from sonoforge.domain.models import PipelineConfig, TsmPreset
from sonoforge.log_config import RunIDFormatter


def test_settings_parse_cors_string():
    settings = Settings(CORS_ORIGINS="https://a.example, https://b.example ")
    assert settings.CORS_ORIGINS == ["https://a.example", "https://b.example"]


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("SONOFORGE_WORKERS", "4")
    monkeypatch.setenv("SONOFORGE_LOG_LEVEL", "debug")
    settings = Settings()
    assert settings.WORKERS == 4
    assert settings.LOG_LEVEL == "DEBUG"


def test_settings_warn_on_bad_worker_count(caplog: pytest.LogCaptureFixture):
    caplog.set_level(logging.WARNING)
    settings = Settings(WORKERS=0)
    assert settings.WORKERS == 1
    assert "not a valid pool size" in caplog.text


def test_settings_reject_unknown_log_level():
    with pytest.raises(pydantic.ValidationError):
        Settings(LOG_LEVEL="LOUD")


def test_formatter_fills_missing_run_id():
    formatter = RunIDFormatter("%(run_id)s %(message)s")
    record = logging.LogRecord("x", logging.INFO, __file__, 1, "hello", None, None)
    assert formatter.format(record) == "N/A hello"
    record = logging.LogRecord("x", logging.INFO, __file__, 1, "hello", None, None)
    record.request_id = "req-1"
    assert formatter.format(record) == "req-1 hello"


class TestPipelineConfig:
    """Run configuration schema and layering."""

    def test_defaults(self):
        config = PipelineConfig()
        assert config.schema_version == 1
        assert config.working_rate == 32000
        assert config.representation.name == "dgt"
        assert config.protocols == ("noaug",)

    def test_repeated_protocol(self):
        with pytest.raises(pydantic.ValidationError):
            PipelineConfig(protocols=("ssa", "ssa"))

    def test_unknown_key(self):
        with pytest.raises(pydantic.ValidationError):
            PipelineConfig(colour="blue")

    def test_future_schema_version(self):
        with pytest.raises(pydantic.ValidationError):
            PipelineConfig(schema_version=2)

    def test_tsm_factor_presets(self):
        assert TsmPreset().resolved_alphas() == (0.8, 1.5)
        assert TsmPreset(factors="wide").resolved_alphas() == (0.5, 1.8)
        assert TsmPreset(alphas=(1.1,)).resolved_alphas() == (1.1,)

    def test_file_with_overrides(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(
            json.dumps(
                {
                    "schema_version": 1,
                    "seed": 5,
                    "representation": {"name": "mel", "db": False},
                    "protocols": ["ssa"],
                }
            )
        )
        config = load_config(
            str(path), {"representation_name": "gamma", "seed": None, "tsm_factors": "wide"}
        )
        assert config.seed == 5
        assert config.representation.name == "gamma"
        assert config.representation.db is False
        assert config.protocols == ("ssa",)
        assert config.presets.tsm.resolved_alphas() == (0.5, 1.8)

    def test_missing_file(self, tmp_path):
        with pytest.raises(NotFoundError):
            load_config(str(tmp_path / "none.json"), {})

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{not json")
        with pytest.raises(ValidationError):
            load_config(str(path), {})

    def test_invalid_values(self):
        with pytest.raises(ValidationError):
            load_config(None, {"working_rate": -5})
