"""Attacker evaluation against tiny trained checkpoints."""

from __future__ import annotations

import csv

import numpy as np
import pytest

from rdal.core.errors import CheckpointMismatchError
from rdal.models.checkpoint import file_checksum
from rdal.models.checkpoint import load_checkpoint
from rdal.privacy_eval import report as report_io
from rdal.privacy_eval.attacker import attack_view
from rdal.privacy_eval.evaluate import evaluate
from rdal.privacy_eval.latents import LatentDataset
from rdal.privacy_eval.latents import extract_latents
from rdal.schemas.metrics import METRIC_FIELDS
from rdal.training.trainer import fit


@pytest.fixture
def trained(tiny_experiment, tiny_corpus, tiny_cache, tmp_path):
    def _train(method: str, seed: int = 5):
        config = tiny_experiment.model_copy(update={"method": method, "seed": seed})
        return fit(config, tiny_corpus, cache=tiny_cache, out_dir=tmp_path / f"{method}-{seed}").checkpoint_path

    return _train


def test_evaluate_writes_report_and_plot_data(trained, tiny_corpus, tiny_cache, tiny_attacker, tmp_path):
    checkpoint = trained("rdal")
    checksum = file_checksum(checkpoint)
    out = tmp_path / "eval"

    report = evaluate(checkpoint, tiny_corpus, tiny_cache, tiny_attacker, seed=3, out_dir=out)

    assert report.method == "rdal"
    assert report.tau == 1
    assert report.run_count == 2
    assert [run.run_seed for run in report.runs] == [3, 4]
    assert set(report.metrics) == set(METRIC_FIELDS)
    for run in report.runs:
        assert 0.0 <= run.sad_auc <= 1.0
        assert 0.0 <= run.gd_auc <= 1.0
    assert file_checksum(checkpoint) == checksum

    assert report_io.load_report(out / report_io.REPORT_FILE) == report
    assert report_io.read_metrics_csv(out / report_io.METRICS_FILE) == report.runs
    for name in ("sad_roc_run00.csv", "gd_roc_run01.csv", "sad_density_run01.csv", report_io.PROJECTION_FILE):
        assert (out / "plots" / name).is_file()
    with (out / "plots" / "sad_density_run00.csv").open(encoding="utf-8", newline="") as handle:
        assert len(list(csv.DictReader(handle))) == tiny_attacker.density_grid_points
    latents = LatentDataset.load(out / "latents.npz")
    assert latents.latents.shape == (40, 64)


def test_several_checkpoints_give_one_run_each(trained, tiny_corpus, tiny_cache, tiny_attacker):
    paths = [trained("baseline", seed) for seed in (1, 2, 3)]

    report = evaluate(paths, tiny_corpus, tiny_cache, tiny_attacker, seed=10)

    assert report.method == "baseline"
    assert report.tau is None
    assert report.run_count == 3
    assert [run.run_seed for run in report.runs] == [10, 11, 12]


def test_evaluation_is_reproducible(trained, tiny_corpus, tiny_cache, tiny_attacker):
    checkpoint = trained("naive_adv")

    first = evaluate(checkpoint, tiny_corpus, tiny_cache, tiny_attacker)
    second = evaluate(checkpoint, tiny_corpus, tiny_cache, tiny_attacker)

    assert first.runs == second.runs


def test_latents_cover_manifest_and_gender_view(trained, tiny_corpus, tiny_cache):
    latents = extract_latents(load_checkpoint(trained("baseline")), tiny_corpus, tiny_cache)

    rows, targets = attack_view(latents.subset("test"), "gender")

    assert len(latents) == len(tiny_corpus.records)
    assert np.all(rows.speech_labels == 1.0)
    assert set(targets.tolist()) == {0.0, 1.0}


def test_latents_reject_other_manifest(trained, tiny_corpus, tiny_cache):
    checkpoint = load_checkpoint(trained("baseline"))
    other = tiny_corpus.model_copy(update={"manifest_id": "elsewhere"})

    with pytest.raises(CheckpointMismatchError):
        extract_latents(checkpoint, other, tiny_cache)
