"""End-to-end matrix run on a tiny simulated corpus."""

from __future__ import annotations

import json

import pytest
import torch

from rdal.harness import cli
from rdal.harness import matrix
from rdal.harness.ledger import LEDGER_FILE
from rdal.harness.ledger import ExperimentLedger
from rdal.harness.masknet import MaskPretrainResult
from rdal.schemas.config import MaskNetConfig
from rdal.schemas.config import RunSpec


@pytest.fixture
def tiny_spec(tmp_path, tiny_experiment, tiny_corpus_config, tiny_attacker) -> RunSpec:
    return RunSpec(
        experiment=tiny_experiment,
        corpus=tiny_corpus_config,
        attacker=tiny_attacker,
        mask_net=MaskNetConfig(channels=(4, 4, 4), epochs=1, batch_size=8),
        output_dir=tmp_path / "runs",
        tau_grid=[1],
        seeds=[0],
    )


def test_matrix_completes_every_cell_and_resumes(tiny_spec, tmp_path, monkeypatch):
    ledger = matrix.run_matrix(tiny_spec, cache_root=tmp_path / "cache")

    assert sorted(ledger.entries) == [
        "baseline/tau=-/seed=0",
        "naive_adv/tau=-/seed=0",
        "rdal/tau=1/seed=0",
        "rdal_m/tau=1/seed=0",
    ]
    assert all(entry.status == "completed" for entry in ledger.entries.values())
    assert ledger.entries["rdal/tau=1/seed=0"].validation is not None

    selection = json.loads((tiny_spec.output_dir / matrix.SELECTION_FILE).read_text(encoding="utf-8"))
    assert selection["selected"] == {"rdal": 1, "rdal_m": 1}
    table = (tiny_spec.output_dir / matrix.REPORT_TEXT).read_text(encoding="utf-8")
    for label in ("Baseline", "NaiveAdv", "RDAL (tau=1)", "RDAL+M (tau=1)"):
        assert label in table

    def _fail(*args, **kwargs):
        raise AssertionError("completed cells must not be retrained")

    monkeypatch.setattr(matrix, "fit", _fail)
    monkeypatch.setattr(matrix, "pretrain_masknet", _fail)
    resumed = matrix.run_matrix(tiny_spec, cache_root=tmp_path / "cache")

    assert {key: entry.checksums for key, entry in resumed.entries.items()} == {
        key: entry.checksums for key, entry in ledger.entries.items()
    }
    reloaded = ExperimentLedger.load(tiny_spec.output_dir / LEDGER_FILE)
    assert len(reloaded.completed_entries()) == 4


def test_failed_cell_is_blocked_then_retried(tiny_spec, tmp_path, monkeypatch):
    spec = tiny_spec.model_copy(update={"methods": ["baseline"]})
    real_fit = matrix.fit

    def _explode(*args, **kwargs):
        raise RuntimeError("out of memory")

    monkeypatch.setattr(matrix, "fit", _explode)
    ledger = matrix.run_matrix(spec, cache_root=tmp_path / "cache")

    entry = ledger.entries["baseline/tau=-/seed=0"]
    assert entry.status == "blocked"
    assert entry.error == "out of memory"
    assert ExperimentLedger.load(spec.output_dir / LEDGER_FILE).entries[entry.key].status == "blocked"

    monkeypatch.setattr(matrix, "fit", real_fit)
    retried = matrix.run_matrix(spec, cache_root=tmp_path / "cache")

    assert retried.entries[entry.key].status == "completed"
    assert retried.entries[entry.key].error is None


def _unreadable_mask(spec: RunSpec) -> None:
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    torch.save({"format_version": 99}, spec.output_dir / matrix.MASK_FILE)


def test_blocked_cell_does_not_stop_later_cells(tiny_spec, tmp_path):
    spec = tiny_spec.model_copy(update={"methods": ["baseline", "rdal_m", "rdal"]})
    _unreadable_mask(spec)

    ledger = matrix.run_matrix(spec, cache_root=tmp_path / "cache")

    assert {key: entry.status for key, entry in ledger.entries.items()} == {
        "baseline/tau=-/seed=0": "completed",
        "rdal_m/tau=1/seed=0": "blocked",
        "rdal/tau=1/seed=0": "completed",
    }
    assert "Unsupported mask network format" in ledger.entries["rdal_m/tau=1/seed=0"].error
    selection = json.loads((spec.output_dir / matrix.SELECTION_FILE).read_text(encoding="utf-8"))
    assert selection["selected"] == {"rdal": 1}


def test_run_matrix_command_exits_nonzero_with_blocked_cells(tiny_spec, tmp_path, capsys):
    config = tmp_path / "run.toml"
    config.write_text(
        "methods = [\"rdal_m\"]\n"
        "tau_grid = [1]\n"
        "seeds = [0]\n"
        "\n"
        "[corpus]\n"
        "num_classes = 2\n"
        "events_per_class = 20\n"
        "seed = 3\n",
        encoding="utf-8",
    )
    out = tmp_path / "cli-runs"
    _unreadable_mask(tiny_spec.model_copy(update={"output_dir": out}))

    code = cli._cli(["run-matrix", "--config", str(config), "--out", str(out)])

    assert code == 1
    assert json.loads(capsys.readouterr().out)["cells"] == {"rdal_m/tau=1/seed=0": "blocked"}


def test_mask_is_reused_from_disk(tiny_spec, tiny_corpus, tiny_cache, monkeypatch):
    first, kind = matrix.prepare_mask(tiny_spec, tiny_corpus, tiny_cache)

    def _fail(*args, **kwargs) -> MaskPretrainResult:
        raise AssertionError("mask should be loaded, not retrained")

    monkeypatch.setattr(matrix, "pretrain_masknet", _fail)
    second, again = matrix.prepare_mask(tiny_spec, tiny_corpus, tiny_cache)

    assert kind == again
    for name, tensor in first.state_dict().items():
        assert (tensor == second.state_dict()[name]).all(), name
