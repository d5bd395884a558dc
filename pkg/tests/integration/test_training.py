"""Training loop on the tiny session corpus."""

from __future__ import annotations

import numpy as np
import pytest
import torch

from rdal.core.errors import NonFiniteLossError
from rdal.features.cache import load_feature_set
from rdal.models.checkpoint import load_checkpoint
from rdal.models.checkpoint import restore_networks
from rdal.models.networks import build_networks
from rdal.training.trainer import BEST_CHECKPOINT
from rdal.training.trainer import CHECKPOINT_DIR
from rdal.training.trainer import Batch
from rdal.training.trainer import TrainState
from rdal.training.trainer import build_optimizer
from rdal.training.trainer import fit
from rdal.training.trainer import is_probe_epoch
from rdal.training.trainer import read_training_log
from rdal.training.trainer import train_step


def _fit(config, manifest, cache, out_dir):
    return fit(config, manifest, cache=cache, out_dir=out_dir, config_digest="digest")


def test_rdal_runs_probe_cycles_after_warmup(tiny_experiment, tiny_corpus, tiny_cache, tmp_path):
    result = _fit(tiny_experiment, tiny_corpus, tiny_cache, tmp_path)

    rows = read_training_log(result.log_path)
    assert [row.epoch for row in rows] == [0, 1, 2, 3]
    assert rows[0].lam == 0.0
    assert rows[0].probe_loss_sp is None
    assert all(row.probe_loss_sp is not None for row in rows[1:])
    assert [cycle.epoch for cycle in result.cycles] == [1, 2, 3]
    assert all(cycle.swapped for cycle in result.cycles)
    for epoch in (1, 2, 3):
        assert (tmp_path / CHECKPOINT_DIR / f"cycle_{epoch:04d}.pt").is_file()
    assert result.checkpoint_path == tmp_path / CHECKPOINT_DIR / BEST_CHECKPOINT
    assert result.candidate is not None
    assert result.candidate.tau == 1
    assert result.candidate.probe_loss_sp == max(cycle.loss_sp for cycle in result.cycles)


def test_best_checkpoint_matches_best_cycle(tiny_experiment, tiny_corpus, tiny_cache, tmp_path):
    result = _fit(tiny_experiment, tiny_corpus, tiny_cache, tmp_path)

    checkpoint = load_checkpoint(result.checkpoint_path, manifest_id=tiny_corpus.manifest_id, config_digest="digest")

    assert checkpoint.epoch == result.best_epoch
    assert checkpoint.method == "rdal"
    assert checkpoint.extra["tau"] == 1
    assert checkpoint.feature_kind == "logmel"


def test_training_is_reproducible(tiny_experiment, tiny_corpus, tiny_cache, tmp_path):
    first = _fit(tiny_experiment, tiny_corpus, tiny_cache, tmp_path / "a")
    second = _fit(tiny_experiment, tiny_corpus, tiny_cache, tmp_path / "b")

    a = restore_networks(load_checkpoint(first.checkpoint_path))
    b = restore_networks(load_checkpoint(second.checkpoint_path))
    for left, right in zip(a.modules(), b.modules()):
        for name, tensor in left.state_dict().items():
            assert torch.equal(tensor, right.state_dict()[name]), name
    assert [c.loss_sp for c in first.cycles] == [c.loss_sp for c in second.cycles]


def test_baseline_never_probes(tiny_experiment, tiny_corpus, tiny_cache, tmp_path):
    config = tiny_experiment.model_copy(update={"method": "baseline"})

    result = _fit(config, tiny_corpus, tiny_cache, tmp_path)

    assert result.cycles == []
    assert result.candidate is None
    assert all(row.probe_loss_sp is None and row.lam == 0.0 for row in read_training_log(result.log_path))
    assert load_checkpoint(result.checkpoint_path).speech_classifier is None


def test_naive_adv_probes_without_swapping(tiny_experiment, tiny_corpus, tiny_cache, tmp_path):
    config = tiny_experiment.model_copy(update={"method": "naive_adv"})

    result = _fit(config, tiny_corpus, tiny_cache, tmp_path)

    assert len(result.cycles) == 3
    assert not any(cycle.swapped for cycle in result.cycles)
    assert result.candidate is not None


def test_lower_bound_trains_discriminator_without_reversal(tiny_experiment, tiny_corpus, tiny_cache, tmp_path):
    config = tiny_experiment.model_copy(update={"method": "lower_bound"})

    result = _fit(config, tiny_corpus, tiny_cache, tmp_path)

    rows = read_training_log(result.log_path)
    assert result.cycles == []
    assert all(row.lam == 0.0 and row.val_adv_accuracy is not None for row in rows)
    assert load_checkpoint(result.checkpoint_path).speech_classifier is not None


def test_probe_epochs(tiny_experiment):
    config = tiny_experiment.model_copy(update={"warmup_epochs": 3, "tau": 2})

    assert [epoch for epoch in range(10) if is_probe_epoch(epoch, config)] == [3, 5, 7, 9]
    assert not any(is_probe_epoch(epoch, config.model_copy(update={"method": "baseline"})) for epoch in range(10))


def test_probe_epochs_follow_the_epoch_count_not_the_warmup_end(tiny_experiment):
    config = tiny_experiment.model_copy(update={"warmup_epochs": 30, "tau": 50})

    assert [epoch for epoch in range(200) if is_probe_epoch(epoch, config)] == [49, 99, 149, 199]


def test_no_probe_cycle_lands_inside_warmup(tiny_experiment):
    config = tiny_experiment.model_copy(update={"warmup_epochs": 30, "tau": 10})

    assert [epoch for epoch in range(50) if is_probe_epoch(epoch, config)] == [39, 49]


def _batch(tiny_corpus, tiny_cache) -> Batch:
    train = load_feature_set(tiny_corpus, tiny_cache).subset("train")
    rows = np.concatenate([np.flatnonzero(train.speech_labels == 1)[:4], np.flatnonzero(train.speech_labels == 0)[:4]])
    return Batch(
        torch.from_numpy(train.features[rows]),
        torch.from_numpy(train.event_labels[rows]),
        torch.from_numpy(train.speech_labels[rows]),
    )


def test_zero_lambda_step_matches_baseline_bitwise(tiny_experiment, tiny_corpus, tiny_cache):
    batch = _batch(tiny_corpus, tiny_cache)
    states = []
    for method, with_speech in (("baseline", False), ("rdal", True)):
        networks = build_networks(2, tiny_experiment.model, seed=11, with_speech=with_speech)
        state = TrainState(method=method, networks=networks, optimizer=build_optimizer(networks, tiny_experiment))
        for _ in range(2):
            train_step(batch, state)
        states.append(state)

    baseline, adversarial = (state.networks for state in states)
    for name, tensor in baseline.feature_extractor.state_dict().items():
        assert torch.equal(tensor, adversarial.feature_extractor.state_dict()[name]), name
    for name, tensor in baseline.event_classifier.state_dict().items():
        assert torch.equal(tensor, adversarial.event_classifier.state_dict()[name]), name


def test_positive_lambda_pushes_discriminator_loss_up(tiny_experiment, tiny_corpus, tiny_cache):
    batch = _batch(tiny_corpus, tiny_cache)
    networks = build_networks(2, tiny_experiment.model, seed=12, with_speech=True)
    state = TrainState(method="rdal", networks=networks, optimizer=build_optimizer(networks, tiny_experiment), lam=1.0)
    extractor = networks.feature_extractor
    networks.train()

    latents = extractor(batch.features)
    adv = torch.nn.functional.binary_cross_entropy_with_logits(networks.speech_classifier(latents), batch.speech_labels)
    adv_grads = torch.autograd.grad(adv, list(extractor.parameters()))
    before = [parameter.detach().clone() for parameter in extractor.parameters()]
    plain = build_networks(2, tiny_experiment.model, seed=12, with_speech=False)
    cls_only = TrainState(method="baseline", networks=plain, optimizer=build_optimizer(plain, tiny_experiment))

    train_step(batch, state)
    train_step(batch, cls_only)

    shift = sum(
        float(((after.detach() - baseline.detach()) * grad).sum())
        for after, baseline, grad in zip(
            extractor.parameters(), cls_only.networks.feature_extractor.parameters(), adv_grads
        )
    )
    assert shift > 0.0
    assert any(not torch.equal(a, b) for a, b in zip(before, extractor.parameters()))


def test_non_finite_loss_is_reported(tiny_experiment, tiny_corpus, tiny_cache):
    batch = _batch(tiny_corpus, tiny_cache)
    batch.features[0, 0, 0] = float("nan")
    networks = build_networks(2, tiny_experiment.model, seed=0, with_speech=True)
    state = TrainState(method="rdal", networks=networks, optimizer=build_optimizer(networks, tiny_experiment))

    with pytest.raises(NonFiniteLossError) as exc_info:
        train_step(batch, state)

    assert {detail.field for detail in exc_info.value.details} == {"loss_cls", "loss_adv", "lambda"}
