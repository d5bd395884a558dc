"""Unit tests for run-spec loading, runtime settings and the error envelope."""

from __future__ import annotations

import json
from pathlib import Path
from typing import get_args

import pytest

from rdal.core.config import build_run_spec
from rdal.core.config import get_runtime_settings
from rdal.core.config import load_run_spec
from rdal.core.errors import ConfigError
from rdal.core.errors import DegenerateInputError
from rdal.core.errors import FeatureError
from rdal.core.errors import RdalError
from rdal.core.errors import format_error
from rdal.schemas.config import DEFAULT_TAU_GRID
from rdal.schemas.error import ErrorCode
from rdal.schemas.error import ErrorDetail


def test_domain_errors_render_shared_envelope() -> None:
    exc = ConfigError(
        "Configuration validation failed",
        details=[ErrorDetail(field="experiment.tau", issue="Input should be greater than 0")],
    )

    assert json.loads(format_error(exc)) == {
        "error": {
            "code": "config_error",
            "message": "Configuration validation failed",
            "details": [{"field": "experiment.tau", "issue": "Input should be greater than 0"}],
        }
    }


def test_errors_without_details_omit_the_details_field() -> None:
    payload = json.loads(format_error(DegenerateInputError("recording is all zeros")))

    assert payload == {"error": {"code": "degenerate_input", "message": "recording is all zeros"}}


def _subclasses(cls: type[RdalError]) -> list[type[RdalError]]:
    return [cls] + [sub for child in cls.__subclasses__() for sub in _subclasses(child)]


def test_every_error_class_uses_a_declared_code() -> None:
    codes = {error_class.code for error_class in _subclasses(RdalError)}

    assert codes <= set(get_args(ErrorCode))
    assert "feature_error" in codes


def test_feature_errors_render_the_envelope() -> None:
    payload = json.loads(format_error(FeatureError("spectrogram entries must be finite and non-negative")))

    assert payload["error"]["code"] == "feature_error"


def test_default_run_spec_uses_published_hyperparameters() -> None:
    spec = build_run_spec({})

    assert spec.experiment.batch_size == 64
    assert spec.experiment.learning_rate == 0.01
    assert spec.experiment.momentum == 0.9
    assert spec.experiment.warmup_epochs == 30
    assert spec.experiment.max_epochs == 5000
    assert spec.experiment.gamma == 100.0
    assert spec.experiment.model.conv_channels == (64, 128, 256, 512)
    assert spec.features.n_fft == 1411
    assert spec.features.hop_length == 441
    assert spec.features.n_mels == 64
    assert tuple(spec.tau_grid) == DEFAULT_TAU_GRID
    assert spec.attacker.runs == 10


def test_desk_preset_shrinks_budget_and_keeps_overrides_last() -> None:
    spec = build_run_spec({"preset": "desk"}, overrides={"experiment": {"tau": 20}})

    assert spec.experiment.max_epochs == 300
    assert spec.experiment.tau == 20
    assert spec.experiment.model.conv_channels == (8, 16, 32, 64)
    assert spec.mask_net.channels == (8, 16, 32)


def test_validation_errors_carry_field_locations() -> None:
    with pytest.raises(ConfigError) as exc_info:
        build_run_spec({"experiment": {"batch_size": 63, "unknown_knob": 1}})

    fields = {detail.field for detail in exc_info.value.details or []}
    assert "experiment.batch_size" in fields
    assert "experiment.unknown_knob" in fields


def test_unknown_preset_is_a_config_error() -> None:
    with pytest.raises(ConfigError) as exc_info:
        build_run_spec({"preset": "cluster"})

    assert exc_info.value.details[0].field == "preset"


def test_warmup_must_precede_the_epoch_budget() -> None:
    with pytest.raises(ConfigError):
        build_run_spec({"experiment": {"warmup_epochs": 50, "max_epochs": 50}})


def test_load_run_spec_reads_toml_sections(tmp_path: Path) -> None:
    path = tmp_path / "run.toml"
    path.write_text(
        'preset = "desk"\n'
        "seeds = [1, 2]\n"
        "[experiment]\n"
        'method = "naive_adv"\n'
        "[corpus]\n"
        "num_classes = 3\n",
        encoding="utf-8",
    )

    spec = load_run_spec(path, overrides={"output_dir": str(tmp_path / "out")})

    assert spec.experiment.method == "naive_adv"
    assert spec.corpus.num_classes == 3
    assert spec.seeds == [1, 2]
    assert spec.output_dir == tmp_path / "out"


def test_load_run_spec_reports_missing_and_malformed_files(tmp_path: Path) -> None:
    with pytest.raises(ConfigError, match="not found"):
        load_run_spec(tmp_path / "absent.toml")

    broken = tmp_path / "broken.toml"
    broken.write_text("[experiment\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid TOML"):
        load_run_spec(broken)


def test_runtime_settings_come_from_environment(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("RDAL_CACHE_DIR", str(tmp_path / "features"))
    monkeypatch.setenv("RDAL_LOG_LEVEL", "debug")
    monkeypatch.setenv("RDAL_NUM_THREADS", "2")
    get_runtime_settings.cache_clear()

    settings = get_runtime_settings()

    assert settings.cache_dir == tmp_path / "features"
    assert settings.safe_for_logging() == {
        "cache_dir": str(tmp_path / "features"),
        "log_level": "DEBUG",
        "device": "cpu",
        "num_threads": 2,
    }
