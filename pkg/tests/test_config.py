"""
Tests for settings, experiment configs, environment loading and error envelopes.
"""

import json
import os

import pytest

from pairagent.config import (
    AgentSettings,
    build_experiment,
    build_settings,
    get_settings,
    load_experiment,
    reload_settings,
    set_settings,
)
from pairagent.errors import (
    ConfigError,
    ErrorCode,
    MissingArtifactsError,
    StageError,
    format_error_response,
)
from pairagent.utils.env import (
    describe_environment,
    find_env_file,
    load_env_file,
    pair_overrides,
)


@pytest.fixture
def clean_env(tmp_path, monkeypatch):
    """Run from an empty directory with no PAIR_* variables set."""
    monkeypatch.chdir(tmp_path)
    for key in list(os.environ):
        if key.startswith("PAIR_"):
            monkeypatch.delenv(key)
    return tmp_path


class TestAgentSettings:
    """Test hyperparameter defaults and precedence."""

    def test_defaults(self, clean_env):
        settings = build_settings()
        assert settings.ess == 1.0
        assert settings.structure_lambda == 1.0
        assert settings.max_parents == 3
        assert settings.restarts == 5
        assert settings.bins == 3
        assert settings.window == 50
        assert settings.epsilon_g == 1e-9
        assert settings.enumeration_threshold == 0.2
        assert settings.bootstrap_rounds == 30

    def test_environment_overrides_default(self, clean_env, monkeypatch):
        monkeypatch.setenv("PAIR_STRUCTURE_LAMBDA", "4.5")
        assert build_settings().structure_lambda == 4.5

    def test_explicit_override_beats_environment(self, clean_env, monkeypatch):
        monkeypatch.setenv("PAIR_BINS", "5")
        assert build_settings({"bins": 4}).bins == 4
        assert build_settings({"bins": None}).bins == 5

    def test_unbounded_window_spellings(self, clean_env, monkeypatch):
        assert build_settings({"window": "unbounded"}).window is None
        monkeypatch.setenv("PAIR_WINDOW", "None")
        assert build_settings().window is None
        with pytest.raises(ConfigError) as exc_info:
            build_settings({"window": 0})
        assert exc_info.value.field == "window"

    def test_dotenv_file(self, clean_env):
        (clean_env / ".env").write_text("PAIR_RESTARTS=7\n")
        try:
            assert build_settings().restarts == 7
        finally:
            os.environ.pop("PAIR_RESTARTS", None)

    def test_out_of_range_names_field(self, clean_env):
        with pytest.raises(ConfigError) as exc_info:
            build_settings({"tol": 0.0})
        assert exc_info.value.field == "tol"
        assert exc_info.value.code == ErrorCode.CONFIG_ERROR

    def test_global_accessors(self, clean_env):
        custom = AgentSettings(restarts=2)
        set_settings(custom)
        assert get_settings() is custom
        assert reload_settings().restarts == 5


class TestExperimentConfig:
    """Test experiment definitions."""

    def test_rounds_must_be_positive(self):
        with pytest.raises(ConfigError) as exc_info:
            build_experiment(scenario="nominal", rounds=0)
        assert exc_info.value.field == "rounds"

    def test_blank_scenario(self):
        with pytest.raises(ConfigError):
            build_experiment(scenario="  ", rounds=1)

    def test_load_written_config(self, tmp_path):
        config = build_experiment(scenario="nominal", rounds=4, seed=9)
        path = tmp_path / "config.json"
        path.write_text(config.model_dump_json(exclude={"out"}))
        loaded = load_experiment(path)
        assert loaded.rounds == 4
        assert loaded.seed == 9

    def test_load_missing(self, tmp_path):
        with pytest.raises(ConfigError) as exc_info:
            load_experiment(tmp_path / "config.json")
        assert exc_info.value.field == "config"


class TestEnvironment:
    """Test .env discovery."""

    def test_finds_env_in_parent(self, tmp_path):
        (tmp_path / ".env").write_text("PAIR_BINS=2\n")
        nested = tmp_path / "a" / "b"
        nested.mkdir(parents=True)
        assert find_env_file(nested) == tmp_path / ".env"

    def test_load_does_not_override_process(self, tmp_path, monkeypatch):
        env = tmp_path / ".env"
        env.write_text("PAIR_BINS=2\n")
        monkeypatch.setenv("PAIR_BINS", "6")
        load_env_file(env)
        assert describe_environment()["variables"]["PAIR_BINS"] == "6"

    def test_missing_file(self, tmp_path):
        assert load_env_file(tmp_path / "nope.env") is False

    def test_overrides_map_to_field_names(self):
        environ = {"PAIR_MAX_SWEEPS": "20", "PAIR_TOL": "1e-4", "HOME": "/root"}
        assert pair_overrides(environ) == {"max_sweeps": "20", "tol": "1e-4"}


class TestErrorResponses:
    """Test the JSON error envelope."""

    def test_config_error_envelope(self):
        body = json.loads(format_error_response(ConfigError("bad rounds", field="rounds")))
        assert body == {
            "type": "error",
            "error": "bad rounds",
            "code": "config_error",
            "details": {"field": "rounds"},
        }

    def test_stage_error_details(self):
        error = StageError("learn", 4, ValueError("boom"))
        body = json.loads(format_error_response(error))
        assert body["code"] == "stage_error"
        assert body["details"] == {"stage": "learn", "round": 4, "cause": "ValueError"}
        assert "boom" in body["error"]

    def test_missing_artifacts_hint(self):
        body = json.loads(format_error_response(MissingArtifactsError("gone", [2, 3])))
        assert body["details"]["missing_rounds"] == [2, 3]
        assert "hint" in body
