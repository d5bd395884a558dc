"""Shared pytest fixtures for rdal test suites."""

from __future__ import annotations

import os
from pathlib import Path
import sys

import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from rdal.core.config import get_runtime_settings  # noqa: E402
from rdal.corpus.builder import build_corpus  # noqa: E402
from rdal.features.cache import FeatureCache  # noqa: E402
from rdal.features.cache import featurize_manifest  # noqa: E402
from rdal.schemas.config import AttackerConfig  # noqa: E402
from rdal.schemas.config import CorpusConfig  # noqa: E402
from rdal.schemas.config import ExperimentConfig  # noqa: E402
from rdal.schemas.config import FeatureConfig  # noqa: E402
from rdal.schemas.config import ModelConfig  # noqa: E402
from rdal.schemas.corpus import CorpusManifest  # noqa: E402

TINY_MODEL = ModelConfig(conv_channels=(4, 4, 4, 4))


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    """Desk-scale runs take minutes; they only run with RDAL_RUN_SLOW=1."""
    if os.getenv("RDAL_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set RDAL_RUN_SLOW=1 to run desk-scale acceptance tests")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def _isolated_runtime_settings(tmp_path: Path, monkeypatch: pytest.MonkeyPatch):
    """Point the feature cache at a per-test directory and reload settings."""
    monkeypatch.setenv("RDAL_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.delenv("RDAL_DEVICE", raising=False)
    get_runtime_settings.cache_clear()
    yield
    get_runtime_settings.cache_clear()


@pytest.fixture(scope="session")
def tiny_corpus_config() -> CorpusConfig:
    return CorpusConfig(num_classes=2, events_per_class=20, seed=3)


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory: pytest.TempPathFactory, tiny_corpus_config: CorpusConfig) -> CorpusManifest:
    """Two classes of 20 simulated mixtures, built once per session."""
    return build_corpus(tiny_corpus_config, tmp_path_factory.mktemp("tiny-corpus"))


@pytest.fixture(scope="session")
def tiny_cache(tmp_path_factory: pytest.TempPathFactory, tiny_corpus: CorpusManifest) -> FeatureCache:
    cache = FeatureCache(tiny_corpus.manifest_id, tmp_path_factory.mktemp("tiny-cache"))
    featurize_manifest(tiny_corpus, cache, FeatureConfig())
    return cache


@pytest.fixture
def tiny_experiment() -> ExperimentConfig:
    return ExperimentConfig(
        method="rdal",
        batch_size=8,
        warmup_epochs=1,
        max_epochs=4,
        tau=1,
        patience=10,
        probe_max_epochs=3,
        probe_patience=2,
        seed=5,
        model=TINY_MODEL,
    )


@pytest.fixture
def tiny_attacker() -> AttackerConfig:
    return AttackerConfig(runs=2, batch_size=8, max_epochs=5, patience=2)
