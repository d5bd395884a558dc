"""End-to-end method matrix: corpus, features, mask, training, evaluation, tau selection."""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Sequence
import json
import logging
from pathlib import Path

from rdal.core.config import get_runtime_settings
from rdal.core.reproducibility import derive_seed
from rdal.corpus.builder import MANIFEST_FILE
from rdal.corpus.builder import build_corpus
from rdal.corpus.builder import read_manifest
from rdal.features.cache import LOGMEL
from rdal.features.cache import FeatureCache
from rdal.features.cache import featurize_manifest
from rdal.harness.ledger import LEDGER_FILE
from rdal.harness.ledger import ExperimentLedger
from rdal.harness.masknet import load_mask_net
from rdal.harness.masknet import pretrain_masknet
from rdal.harness.masknet import save_mask_net
from rdal.models.checkpoint import config_hash
from rdal.models.checkpoint import file_checksum
from rdal.models.masknet import MaskNet
from rdal.models.masknet import mask_apply
from rdal.privacy_eval import report as report_io
from rdal.privacy_eval.evaluate import aggregate
from rdal.privacy_eval.evaluate import evaluate
from rdal.schemas.config import PROBE_METHODS
from rdal.schemas.config import ExperimentConfig
from rdal.schemas.config import RunSpec
from rdal.schemas.corpus import CorpusManifest
from rdal.schemas.metrics import AggregateReport
from rdal.schemas.metrics import LedgerEntry
from rdal.schemas.metrics import TauCandidate
from rdal.training.trainer import fit

logger = logging.getLogger(__name__)

CORPUS_DIR = "corpus"
MASK_FILE = "mask_net.pt"
SELECTION_FILE = "tau_selection.json"
REPORT_TEXT = "report.txt"


def selection_criterion(sed_guard: float) -> str:
    return (
        "highest converged probe validation L_sp among tau values whose validation SED accuracy "
        f"is within {sed_guard:.2f} of the best; ties go to the smaller tau"
    )


def select_tau(candidates: Sequence[TauCandidate], *, sed_guard: float = 0.02) -> int:
    """Pick the most private tau that keeps event accuracy within ``sed_guard`` of the best."""
    if not candidates:
        raise ValueError("select_tau needs at least one candidate")
    best_sed = max(candidate.sed_accuracy for candidate in candidates)
    eligible = [candidate for candidate in candidates if candidate.sed_accuracy >= best_sed - sed_guard]
    return min(eligible, key=lambda candidate: (-candidate.probe_loss_sp, candidate.tau)).tau


def mean_candidates(entries: Sequence[LedgerEntry]) -> list[TauCandidate]:
    """Average validation evidence per tau over seeds."""
    grouped: dict[int, list[TauCandidate]] = defaultdict(list)
    for entry in entries:
        if entry.validation is not None and entry.tau is not None:
            grouped[entry.tau].append(entry.validation)
    return [
        TauCandidate(
            tau=tau,
            probe_loss_sp=sum(item.probe_loss_sp for item in items) / len(items),
            sed_accuracy=sum(item.sed_accuracy for item in items) / len(items),
        )
        for tau, items in sorted(grouped.items())
    ]


def prepare_corpus(spec: RunSpec) -> CorpusManifest:
    root = spec.output_dir / CORPUS_DIR
    if (root / MANIFEST_FILE).is_file():
        return read_manifest(root)
    return build_corpus(spec.corpus, root)


def prepare_mask(
    spec: RunSpec,
    manifest: CorpusManifest,
    cache: FeatureCache,
    path: Path | None = None,
) -> tuple[MaskNet, str]:
    """Pre-train (or reload) the mask and cache masked features; returns the network and its feature kind."""
    path = path or spec.output_dir / MASK_FILE
    if path.is_file():
        mask_net = load_mask_net(path)
    else:
        result = pretrain_masknet(manifest, spec.mask_net, spec.features)
        logger.info(
            "Mask network: validation MSE %.4f vs identity %.4f", result.validation_mse, result.identity_mse
        )
        mask_net = result.mask_net
        save_mask_net(path, mask_net)
    kind = f"{LOGMEL}-masked-{file_checksum(path)[:12]}"
    featurize_manifest(
        manifest,
        cache,
        spec.features,
        kind=kind,
        transform=lambda magnitude: mask_apply(magnitude, mask_net),
    )
    return mask_net, kind


def cell_config(spec: RunSpec, method: str, tau: int | None, seed: int) -> ExperimentConfig:
    return ExperimentConfig.model_validate(
        {**spec.experiment.model_dump(), "method": method, "tau": tau or spec.experiment.tau, "seed": seed}
    )


def cell_dir(spec: RunSpec, method: str, tau: int | None, seed: int) -> Path:
    return spec.output_dir / "runs" / method / f"tau{'-' if tau is None else tau}" / f"seed{seed}"


def _pipeline_seeds(spec: RunSpec, seed: int) -> list[int]:
    if spec.attacker.variance_mode == "attacker_seed":
        return [seed]
    return [seed] + [derive_seed(seed, "pipeline", run) % (2**31) for run in range(1, spec.attacker.runs)]


def run_cell(
    spec: RunSpec,
    ledger: ExperimentLedger,
    entry: LedgerEntry,
    manifest: CorpusManifest,
    cache: FeatureCache,
    *,
    feature_kind: str,
    mask_net: MaskNet | None,
) -> LedgerEntry:
    """Train and evaluate one cell and mark it completed; failures propagate to the caller."""
    ledger.start(entry.key)
    directory = cell_dir(spec, entry.method, entry.tau, entry.seed)
    checkpoints = []
    candidate = None
    for train_seed in _pipeline_seeds(spec, entry.seed):
        config = cell_config(spec, entry.method, entry.tau, train_seed)
        result = fit(
            config,
            manifest,
            cache=cache,
            out_dir=directory / f"train-{train_seed}",
            config_digest=config_hash(config),
            feature_kind=feature_kind,
            mask_net=mask_net,
        )
        checkpoints.append(result.checkpoint_path)
        candidate = candidate or result.candidate
    evaluate(
        checkpoints[0] if len(checkpoints) == 1 else checkpoints,
        manifest,
        cache,
        spec.attacker,
        seed=entry.seed,
        out_dir=directory / "eval",
    )
    return ledger.complete(
        entry.key,
        checkpoint_path=checkpoints[0],
        metrics_path=directory / "eval" / report_io.METRICS_FILE,
        report_path=directory / "eval" / report_io.REPORT_FILE,
        validation=candidate,
    )


def run_matrix(spec: RunSpec, *, cache_root: Path | None = None) -> ExperimentLedger:
    """Execute every (method, tau, seed) cell not yet completed; safe to rerun after interruption.

    A failing cell is marked blocked and the remaining cells still run. Blocked cells are retried on the
    next call.
    """
    logger.info("Running matrix %s with settings %s", spec.methods, get_runtime_settings().safe_for_logging())
    manifest = prepare_corpus(spec)
    cache = FeatureCache(manifest.manifest_id, cache_root)
    featurize_manifest(manifest, cache, spec.features)

    ledger = ExperimentLedger.load(spec.output_dir / LEDGER_FILE)
    mask: tuple[MaskNet, str] | None = None
    for method in spec.methods:
        taus: list[int | None] = list(spec.tau_grid) if method in PROBE_METHODS else [None]
        for tau in taus:
            for seed in spec.seeds:
                config = cell_config(spec, method, tau, seed)
                digest = config_hash(spec.model_copy(update={"experiment": config, "seeds": [seed]}))
                entry = ledger.ensure(method, tau, seed, digest)
                if ledger.is_completed(entry.key):
                    logger.info("Skipping completed cell %s", entry.key)
                    continue
                mask_net, kind = None, LOGMEL
                try:
                    if method == "rdal_m":
                        mask = mask or prepare_mask(spec, manifest, cache)
                        mask_net, kind = mask
                    run_cell(spec, ledger, entry, manifest, cache, feature_kind=kind, mask_net=mask_net)
                except Exception as exc:
                    logger.exception("Cell %s failed; continuing with the remaining cells", entry.key)
                    ledger.block(entry.key, str(exc))

    write_selection(spec, ledger)
    write_matrix_report(spec, ledger)
    return ledger


def selected_taus(spec: RunSpec, ledger: ExperimentLedger) -> dict[str, int]:
    chosen = {}
    for method in PROBE_METHODS.intersection(spec.methods):
        candidates = mean_candidates([entry for entry in ledger.completed_entries() if entry.method == method])
        if candidates:
            chosen[method] = select_tau(candidates, sed_guard=spec.sed_guard)
    return chosen


def write_selection(spec: RunSpec, ledger: ExperimentLedger) -> Path:
    chosen = selected_taus(spec, ledger)
    payload = {
        "criterion": selection_criterion(spec.sed_guard),
        "selected": chosen,
        "candidates": {
            method: [
                candidate.model_dump()
                for candidate in mean_candidates([e for e in ledger.completed_entries() if e.method == method])
            ]
            for method in chosen
        },
    }
    path = spec.output_dir / SELECTION_FILE
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def matrix_reports(spec: RunSpec, ledger: ExperimentLedger) -> list[AggregateReport]:
    """One pooled report per method, restricted to the selected tau for probe methods."""
    chosen = selected_taus(spec, ledger)
    reports = []
    for method in spec.methods:
        entries = [
            entry
            for entry in ledger.completed_entries()
            if entry.method == method and (method not in chosen or entry.tau == chosen[method])
        ]
        runs = [
            run
            for entry in entries
            if entry.report_path
            for run in report_io.load_report(ledger.root / entry.report_path).runs
        ]
        if runs:
            reports.append(aggregate(method, chosen.get(method), runs))
    return reports


def write_matrix_report(spec: RunSpec, ledger: ExperimentLedger) -> Path:
    text = report_io.render_table(matrix_reports(spec, ledger), criterion=selection_criterion(spec.sed_guard))
    path = spec.output_dir / REPORT_TEXT
    path.write_text(text, encoding="utf-8")
    return path
