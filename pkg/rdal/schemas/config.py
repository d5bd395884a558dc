"""Pydantic schemas for experiment, corpus, feature and evaluation configuration."""

from __future__ import annotations

from pathlib import Path
from typing import Literal

from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import field_validator
from pydantic import model_validator

Method = Literal["baseline", "naive_adv", "rdal", "rdal_m", "lower_bound"]
CorpusMode = Literal["synthetic", "real"]
Split = Literal["train", "validation", "test"]

PROBE_METHODS: frozenset[str] = frozenset({"rdal", "rdal_m"})
ADVERSARIAL_METHODS: frozenset[str] = frozenset({"naive_adv", "rdal", "rdal_m"})
DEFAULT_METHODS: tuple[Method, ...] = ("baseline", "naive_adv", "rdal", "rdal_m")
DEFAULT_TAU_GRID: tuple[int, ...] = (10, 20, 30, 50, 70, 100)

DEFAULT_EVENT_CLASSES: tuple[str, ...] = (
    "dog_barking",
    "glass_breaking",
    "gun_shot",
    "cough",
    "slam",
    "applause",
    "dishes_pot_pan",
    "toilet_flush",
    "cat_meowing",
    "doorbell",
    "crying",
    "drill",
)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CorpusConfig(_Section):
    """How the labeled mixture corpus is produced."""

    mode: CorpusMode = "synthetic"
    seed: int = 0
    num_classes: int = Field(4, ge=2, le=len(DEFAULT_EVENT_CLASSES))
    class_names: list[str] | None = None
    events_per_class: int = Field(150, ge=8)
    test_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    validation_fraction: float = Field(0.1, gt=0.0, lt=1.0)
    dev_speakers_per_gender: int = Field(8, ge=1)
    test_speakers_per_gender: int = Field(4, ge=1)
    segments_per_recording: int = Field(2, ge=1)
    speech_segments_per_recording: int = Field(1, ge=1)
    search_hop_seconds: float = Field(0.1, gt=0.0)
    attenuation_db: float = Field(5.0, ge=0.0)
    keep_event_targets: bool = True
    events_dir: Path | None = None
    speech_dir: Path | None = None
    speakers_file: Path | None = None

    @model_validator(mode="after")
    def _real_mode_needs_sources(self) -> CorpusConfig:
        if self.mode == "real":
            missing = [
                name
                for name in ("events_dir", "speech_dir", "speakers_file", "class_names")
                if getattr(self, name) is None
            ]
            if missing:
                raise ValueError(f"real corpus mode requires: {', '.join(missing)}")
        return self

    def resolved_class_names(self) -> list[str]:
        """Return the ordered class names; index + 1 is the event class id."""
        if self.class_names is not None:
            return list(self.class_names)
        return list(DEFAULT_EVENT_CLASSES[: self.num_classes])


class FeatureConfig(_Section):
    """STFT and log-mel front-end parameters."""

    sample_rate: int = 44100
    n_fft: int = 1411
    hop_length: int = 441
    window: str = "hamming"
    n_mels: int = 64
    fmin: float = 0.0
    fmax: float = 22050.0
    mel_input: Literal["power", "magnitude"] = "power"
    log_floor: float = Field(1e-10, gt=0.0)


class ModelConfig(_Section):
    """Network widths; topology is fixed."""

    conv_channels: tuple[int, int, int, int] = (64, 128, 256, 512)
    latent_dim: int = 64
    probe_hidden: tuple[int, int, int] = (48, 32, 16)
    leaky_slope: float = 0.01


class ExperimentConfig(_Section):
    """Training hyperparameters for one (method, tau, seed) cell."""

    method: Method = "rdal"
    num_classes: int | None = Field(None, ge=2)
    batch_size: int = Field(64, ge=2)
    learning_rate: float = Field(0.01, gt=0.0)
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    warmup_epochs: int = Field(30, ge=0)
    max_epochs: int = Field(5000, ge=1)
    gamma: float = Field(100.0, gt=0.0)
    tau: int = Field(50, gt=0)
    patience: int = Field(10, ge=1)
    probe_max_epochs: int = Field(200, ge=1)
    probe_patience: int = Field(10, ge=1)
    probe_reinit: Literal["fresh", "reuse"] = "fresh"
    seed: int = 0
    model: ModelConfig = ModelConfig()

    @field_validator("batch_size")
    @classmethod
    def _batch_must_be_even(cls, value: int) -> int:
        if value % 2:
            raise ValueError("batch_size must be even so half of each batch contains speech")
        return value

    @model_validator(mode="after")
    def _warmup_before_budget(self) -> ExperimentConfig:
        if self.warmup_epochs >= self.max_epochs:
            raise ValueError("warmup_epochs must be smaller than max_epochs")
        return self


class AttackerConfig(_Section):
    """Post-hoc attacker protocol."""

    runs: int = Field(10, ge=1)
    batch_size: int = Field(64, ge=2)
    learning_rate: float = Field(0.01, gt=0.0)
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    max_epochs: int = Field(200, ge=1)
    patience: int = Field(10, ge=1)
    hidden: tuple[int, int, int] = (48, 32, 16)
    threshold: float = Field(0.5, gt=0.0, lt=1.0)
    variance_mode: Literal["attacker_seed", "full_pipeline"] = "attacker_seed"
    density_grid_points: int = Field(512, ge=16)
    density_min_bandwidth: float = Field(1e-2, gt=0.0)


class MaskNetConfig(_Section):
    """Masking front-end pre-training."""

    channels: tuple[int, int, int] = (16, 32, 64)
    epochs: int = Field(30, ge=1)
    batch_size: int = Field(16, ge=1)
    learning_rate: float = Field(1e-3, gt=0.0)
    patience: int = Field(5, ge=1)
    seed: int = 0


class RunSpec(_Section):
    """Everything the harness needs to execute a method matrix."""

    experiment: ExperimentConfig = ExperimentConfig()
    corpus: CorpusConfig = CorpusConfig()
    features: FeatureConfig = FeatureConfig()
    attacker: AttackerConfig = AttackerConfig()
    mask_net: MaskNetConfig = MaskNetConfig()
    output_dir: Path = Path("runs")
    methods: list[Method] = Field(default_factory=lambda: list(DEFAULT_METHODS))
    tau_grid: list[int] = Field(default_factory=lambda: list(DEFAULT_TAU_GRID))
    seeds: list[int] = Field(default_factory=lambda: [0])
    sed_guard: float = Field(0.02, ge=0.0)

    @model_validator(mode="after")
    def _tau_grid_for_probe_methods(self) -> RunSpec:
        if PROBE_METHODS.intersection(self.methods) and not self.tau_grid:
            raise ValueError("tau_grid must be non-empty when rdal or rdal_m is requested")
        if any(tau <= 0 for tau in self.tau_grid):
            raise ValueError("tau_grid values must be positive")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        return self


PRESETS: dict[str, dict] = {
    "full": {},
    "desk": {
        "experiment": {
            "max_epochs": 300,
            "warmup_epochs": 30,
            "tau": 10,
            "probe_max_epochs": 100,
            "model": {"conv_channels": [8, 16, 32, 64]},
        },
        "corpus": {"num_classes": 4, "events_per_class": 150},
        "attacker": {"runs": 3, "max_epochs": 100},
        "mask_net": {"epochs": 15, "channels": [8, 16, 32]},
        "tau_grid": [10, 20, 30],
    },
}
