"""Command-line entry point: ``rdal <verb> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
import sys
from typing import Any

from rdal.core.config import build_run_spec
from rdal.core.config import get_runtime_settings
from rdal.core.config import load_run_spec
from rdal.core.errors import ConfigError
from rdal.core.errors import RdalError
from rdal.core.errors import format_error
from rdal.core.logging import configure_logging
from rdal.corpus.builder import build_corpus
from rdal.corpus.builder import read_manifest
from rdal.features.cache import LOGMEL
from rdal.features.cache import FeatureCache
from rdal.features.cache import featurize_manifest
from rdal.harness.ledger import LEDGER_FILE
from rdal.harness.ledger import ExperimentLedger
from rdal.harness.masknet import pretrain_masknet
from rdal.harness.masknet import save_mask_net
from rdal.harness.matrix import CORPUS_DIR
from rdal.harness.matrix import MASK_FILE
from rdal.harness.matrix import prepare_mask
from rdal.harness.matrix import run_matrix
from rdal.harness.matrix import write_matrix_report
from rdal.models.checkpoint import config_hash
from rdal.privacy_eval import report as report_io
from rdal.privacy_eval.evaluate import evaluate
from rdal.schemas.config import RunSpec
from rdal.schemas.corpus import CorpusManifest
from rdal.training.trainer import fit

logger = logging.getLogger(__name__)


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    experiment: dict[str, Any] = {}
    if args.preset is not None:
        overrides["preset"] = args.preset
    if args.seed is not None:
        experiment["seed"] = args.seed
        overrides["seeds"] = [args.seed]
    if getattr(args, "method", None) is not None:
        experiment["method"] = args.method
        overrides["methods"] = [args.method]
    if getattr(args, "tau", None) is not None:
        experiment["tau"] = args.tau
        overrides["tau_grid"] = [args.tau]
    if experiment:
        overrides["experiment"] = experiment
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    return overrides


def _load_spec(args: argparse.Namespace) -> RunSpec:
    overrides = _overrides(args)
    preset = overrides.pop("preset", None)
    if args.config is None:
        return build_run_spec({"preset": preset} if preset else {}, overrides=overrides)
    if preset is not None:
        raise ConfigError("--preset cannot be combined with --config; set 'preset' in the file instead")
    return load_run_spec(args.config, overrides=overrides)


def _manifest(args: argparse.Namespace, spec: RunSpec) -> CorpusManifest:
    return read_manifest(args.corpus or spec.output_dir / CORPUS_DIR)


def _print_json(payload: dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, default=str))


def _synth_corpus(args: argparse.Namespace, spec: RunSpec) -> int:
    manifest = build_corpus(spec.corpus, args.corpus or spec.output_dir / CORPUS_DIR)
    _print_json(
        {
            "manifest_id": manifest.manifest_id,
            "examples": len(manifest.records),
            "per_class": manifest.per_class_counts(),
            "speech_per_split": manifest.per_split_speech_counts(),
            "gender_per_split": manifest.per_split_gender_counts(),
        }
    )
    return 0


def _featurize(args: argparse.Namespace, spec: RunSpec) -> int:
    manifest = _manifest(args, spec)
    computed = featurize_manifest(manifest, FeatureCache(manifest.manifest_id), spec.features)
    _print_json({"manifest_id": manifest.manifest_id, "computed": computed, "examples": len(manifest.records)})
    return 0


def _pretrain_mask(args: argparse.Namespace, spec: RunSpec) -> int:
    manifest = _manifest(args, spec)
    result = pretrain_masknet(manifest, spec.mask_net, spec.features)
    path = save_mask_net(args.mask or spec.output_dir / MASK_FILE, result.mask_net)
    _print_json(
        {
            "mask_net": path,
            "validation_mse": result.validation_mse,
            "identity_mse": result.identity_mse,
            "epochs_trained": result.epochs_trained,
        }
    )
    return 0


def _train(args: argparse.Namespace, spec: RunSpec) -> int:
    manifest = _manifest(args, spec)
    cache = FeatureCache(manifest.manifest_id)
    featurize_manifest(manifest, cache, spec.features)
    config = spec.experiment
    mask_net, kind = None, LOGMEL
    if config.method == "rdal_m":
        mask_net, kind = prepare_mask(spec, manifest, cache, args.mask)
    result = fit(
        config,
        manifest,
        cache=cache,
        out_dir=spec.output_dir,
        config_digest=config_hash(config),
        feature_kind=kind,
        mask_net=mask_net,
    )
    _print_json(
        {
            "checkpoint": result.checkpoint_path,
            "training_log": result.log_path,
            "best_epoch": result.best_epoch,
            "epochs_run": result.epochs_run,
            "stopped_early": result.stopped_early,
            "validation": None if result.candidate is None else result.candidate.model_dump(),
        }
    )
    return 0


def _evaluate(args: argparse.Namespace, spec: RunSpec) -> int:
    if not args.checkpoint:
        raise ConfigError("evaluate needs at least one --checkpoint")
    manifest = _manifest(args, spec)
    report = evaluate(
        args.checkpoint[0] if len(args.checkpoint) == 1 else args.checkpoint,
        manifest,
        FeatureCache(manifest.manifest_id),
        spec.attacker,
        seed=spec.experiment.seed,
        out_dir=spec.output_dir,
    )
    print(report_io.render_table([report]), end="")
    return 0


def _report(args: argparse.Namespace, spec: RunSpec) -> int:
    if args.reports:
        print(report_io.render_table([report_io.load_report(path) for path in args.reports]), end="")
        return 0
    ledger_path = spec.output_dir / LEDGER_FILE
    if not ledger_path.is_file():
        raise ConfigError(f"No ledger at {ledger_path}; pass report files with --reports")
    path = write_matrix_report(spec, ExperimentLedger.load(ledger_path))
    print(path.read_text(encoding="utf-8"), end="")
    return 0


def _plots(args: argparse.Namespace, spec: RunSpec) -> int:
    written = report_io.render_plots(args.plot_dir or spec.output_dir)
    _print_json({"written": written})
    return 0


def _run_matrix(args: argparse.Namespace, spec: RunSpec) -> int:
    ledger = run_matrix(spec)
    statuses = {entry.key: entry.status for entry in ledger.entries.values()}
    _print_json({"ledger": ledger.path, "cells": statuses})
    return 0 if all(status == "completed" for status in statuses.values()) else 1


COMMANDS = {
    "synth-corpus": _synth_corpus,
    "featurize": _featurize,
    "pretrain-mask": _pretrain_mask,
    "train": _train,
    "evaluate": _evaluate,
    "report": _report,
    "plots": _plots,
    "run-matrix": _run_matrix,
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="TOML run spec")
    common.add_argument("--preset", choices=["full", "desk"], default=None, help="Preset when no --config is given")
    common.add_argument("--seed", type=int, default=None, help="Experiment seed")
    common.add_argument("--out", type=Path, default=None, help="Output directory")
    common.add_argument("--corpus", type=Path, default=None, help="Corpus directory (default <out>/corpus)")

    parser = argparse.ArgumentParser(prog="rdal", description="Speech-private sound event representations.")
    verbs = parser.add_subparsers(dest="command", required=True)
    verbs.add_parser("synth-corpus", parents=[common], help="Simulate the labeled mixture corpus")
    verbs.add_parser("featurize", parents=[common], help="Cache log-mel features for a corpus")
    mask = verbs.add_parser("pretrain-mask", parents=[common], help="Pre-train the masking front-end")
    mask.add_argument("--mask", type=Path, default=None, help="Where to write the mask network")

    train = verbs.add_parser("train", parents=[common], help="Train one method/tau/seed cell")
    train.add_argument("--method", choices=["baseline", "naive_adv", "rdal", "rdal_m", "lower_bound"])
    train.add_argument("--tau", type=int, default=None)
    train.add_argument("--mask", type=Path, default=None, help="Pre-trained mask network for rdal_m")

    evaluation = verbs.add_parser("evaluate", parents=[common], help="Run attackers against checkpoints")
    evaluation.add_argument("--checkpoint", type=Path, action="append", default=[])

    report = verbs.add_parser("report", parents=[common], help="Render the results table")
    report.add_argument("--reports", type=Path, nargs="*", default=None, help="report.json files to tabulate")

    plots = verbs.add_parser("plots", parents=[common], help="Render plot CSVs to PNG (needs the plots extra)")
    plots.add_argument("--plot-dir", type=Path, default=None)

    verbs.add_parser("run-matrix", parents=[common], help="Run the whole method matrix from a run spec")
    return parser


def _cli(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    spec = _load_spec(args)
    logger.info("rdal %s with settings %s", args.command, get_runtime_settings().safe_for_logging())
    return COMMANDS[args.command](args, spec)


def main() -> None:
    """CLI entrypoint."""
    configure_logging(get_runtime_settings().log_level)
    try:
        code = _cli()
    except RdalError as exc:
        print(format_error(exc), file=sys.stderr)
        code = 2
    except Exception:
        logger.exception("Unexpected failure")
        code = 1
    raise SystemExit(code)


if __name__ == "__main__":
    main()
