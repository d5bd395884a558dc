"""Losses, schedule, probes and the adversarial training loop."""

from rdal.training.losses import loss_adv
from rdal.training.losses import loss_cls
from rdal.training.probe import fit_probe_on_latents
from rdal.training.probe import retrain_probe
from rdal.training.probe import swap_probe
from rdal.training.schedule import GrlSchedule
from rdal.training.schedule import lambda_schedule
from rdal.training.trainer import FitResult
from rdal.training.trainer import TrainState
from rdal.training.trainer import fit
from rdal.training.trainer import train_step

__all__ = [
    "FitResult",
    "GrlSchedule",
    "TrainState",
    "fit",
    "fit_probe_on_latents",
    "lambda_schedule",
    "loss_adv",
    "loss_cls",
    "retrain_probe",
    "swap_probe",
    "train_step",
]
