"""Attacker-based privacy evaluation of learned latents."""

from rdal.privacy_eval.attacker import train_attacker
from rdal.privacy_eval.evaluate import aggregate
from rdal.privacy_eval.evaluate import evaluate
from rdal.privacy_eval.latents import LatentDataset
from rdal.privacy_eval.latents import extract_latents
from rdal.privacy_eval.metrics import auc
from rdal.privacy_eval.metrics import density_overlap
from rdal.privacy_eval.metrics import probability_density
from rdal.privacy_eval.metrics import roc_curve
from rdal.privacy_eval.projection import project_2d

__all__ = [
    "LatentDataset",
    "aggregate",
    "auc",
    "density_overlap",
    "evaluate",
    "extract_latents",
    "probability_density",
    "project_2d",
    "roc_curve",
    "train_attacker",
]
