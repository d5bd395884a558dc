"""Repeated attacker evaluation of trained checkpoints."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
import logging
from pathlib import Path

import numpy as np
import torch

from rdal.core.errors import ConfigError
from rdal.core.reproducibility import derive_seed
from rdal.features.cache import FeatureCache
from rdal.models.checkpoint import ModelCheckpoint
from rdal.models.checkpoint import load_checkpoint
from rdal.models.checkpoint import restore_networks
from rdal.privacy_eval import report as report_io
from rdal.privacy_eval.attacker import attack_view
from rdal.privacy_eval.attacker import attacker_probabilities
from rdal.privacy_eval.attacker import train_attacker
from rdal.privacy_eval.latents import LatentDataset
from rdal.privacy_eval.latents import extract_latents
from rdal.privacy_eval.metrics import DensityCurves
from rdal.privacy_eval.metrics import accuracy
from rdal.privacy_eval.metrics import auc
from rdal.privacy_eval.metrics import binary_entropy
from rdal.privacy_eval.metrics import density_overlap
from rdal.privacy_eval.metrics import probability_density
from rdal.privacy_eval.metrics import roc_curve
from rdal.privacy_eval.projection import project_2d
from rdal.schemas.config import AttackerConfig
from rdal.schemas.corpus import CorpusManifest
from rdal.schemas.metrics import METRIC_FIELDS
from rdal.schemas.metrics import AggregateReport
from rdal.schemas.metrics import MetricsRecord
from rdal.schemas.metrics import MetricSummary

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunArtifacts:
    sad_roc: list[tuple[float, float]]
    gd_roc: list[tuple[float, float]]
    sad_density: DensityCurves


@torch.no_grad()
def sed_accuracy(checkpoint: ModelCheckpoint, latents: LatentDataset) -> float:
    """Test-split event accuracy of the checkpoint's own classifier."""
    test = latents.subset("test")
    classifier = restore_networks(checkpoint).event_classifier
    predicted = classifier(torch.from_numpy(test.latents)).argmax(dim=1).numpy()
    return float(np.mean(predicted == test.event_labels))


def evaluate_run(
    checkpoint: ModelCheckpoint,
    latents: LatentDataset,
    config: AttackerConfig,
    *,
    run_seed: int,
) -> tuple[MetricsRecord, RunArtifacts]:
    """Train fresh speech and gender attackers and score them on the test split."""
    model_config = checkpoint.model()
    test = latents.subset("test")

    sad = train_attacker(latents, "speech", config, seed=derive_seed(run_seed, "speech"), model_config=model_config)
    sad_rows, sad_targets = attack_view(test, "speech")
    sad_probs = attacker_probabilities(sad, sad_rows.latents)

    gd = train_attacker(latents, "gender", config, seed=derive_seed(run_seed, "gender"), model_config=model_config)
    gd_rows, gd_targets = attack_view(test, "gender")
    gd_probs = attacker_probabilities(gd, gd_rows.latents)

    curves = probability_density(
        sad_probs,
        sad_targets,
        grid_points=config.density_grid_points,
        min_bandwidth=config.density_min_bandwidth,
    )
    record = MetricsRecord(
        run_seed=run_seed,
        sed_accuracy=sed_accuracy(checkpoint, latents),
        sad_accuracy=accuracy(sad_probs, sad_targets, config.threshold),
        sad_auc=auc(sad_probs, sad_targets),
        gd_accuracy=accuracy(gd_probs, gd_targets, config.threshold),
        gd_auc=auc(gd_probs, gd_targets),
        sad_density_overlap=density_overlap(curves),
        sad_uncertainty=binary_entropy(sad_probs),
    )
    artifacts = RunArtifacts(
        sad_roc=roc_curve(sad_probs, sad_targets),
        gd_roc=roc_curve(gd_probs, gd_targets),
        sad_density=curves,
    )
    return record, artifacts


def aggregate(method: str, tau: int | None, runs: list[MetricsRecord]) -> AggregateReport:
    """Mean and population standard deviation of every metric."""
    metrics = {}
    for name in METRIC_FIELDS:
        values = np.array([getattr(run, name) for run in runs], dtype=np.float64)
        metrics[name] = MetricSummary(mean=float(values.mean()), std=float(values.std()))
    return AggregateReport(method=method, tau=tau, run_count=len(runs), metrics=metrics, runs=runs)


def evaluate(
    checkpoints: Path | Sequence[Path],
    manifest: CorpusManifest,
    cache: FeatureCache,
    config: AttackerConfig,
    *,
    seed: int = 0,
    out_dir: Path | None = None,
) -> AggregateReport:
    """Attacker-seed variance for one checkpoint; one run per checkpoint when several are given."""
    paths = [checkpoints] if isinstance(checkpoints, Path) else list(checkpoints)
    if not paths:
        raise ConfigError("at least one checkpoint is required")
    plan = [(paths[0], seed + run) for run in range(config.runs)] if len(paths) == 1 else [
        (path, seed + run) for run, path in enumerate(paths)
    ]

    loaded: dict[Path, tuple[ModelCheckpoint, LatentDataset]] = {}
    runs: list[MetricsRecord] = []
    for index, (path, run_seed) in enumerate(plan):
        if path not in loaded:
            checkpoint = load_checkpoint(path, manifest_id=manifest.manifest_id)
            loaded[path] = (checkpoint, extract_latents(checkpoint, manifest, cache))
        checkpoint, latents = loaded[path]
        record, artifacts = evaluate_run(checkpoint, latents, config, run_seed=run_seed)
        runs.append(record)
        logger.info(
            "Run %s/%s (seed %s): SED %.3f SAD acc %.3f AUC %.3f GD acc %.3f AUC %.3f",
            index + 1,
            len(plan),
            run_seed,
            record.sed_accuracy,
            record.sad_accuracy,
            record.sad_auc,
            record.gd_accuracy,
            record.gd_auc,
        )
        if out_dir is not None:
            plots = out_dir / "plots"
            report_io.write_roc_csv(plots / f"sad_roc_run{index:02d}.csv", artifacts.sad_roc)
            report_io.write_roc_csv(plots / f"gd_roc_run{index:02d}.csv", artifacts.gd_roc)
            report_io.write_density_csv(plots / f"sad_density_run{index:02d}.csv", artifacts.sad_density)

    checkpoint, latents = loaded[paths[0]]
    tau = checkpoint.extra.get("tau") if checkpoint.method in {"rdal", "rdal_m"} else None
    report = aggregate(checkpoint.method, tau, runs)
    if out_dir is not None:
        test = latents.subset("test")
        report_io.write_projection_csv(
            out_dir / "plots" / report_io.PROJECTION_FILE,
            project_2d(test.latents),
            example_ids=test.example_ids,
            event_labels=test.event_labels,
            speech_labels=test.speech_labels,
        )
        latents.save(out_dir / "latents.npz")
        report_io.write_metrics_csv(out_dir / report_io.METRICS_FILE, runs)
        report_io.write_report(out_dir / report_io.REPORT_FILE, report)
    return report
