"""Networks, gradient reversal, masking front-end and checkpoints."""

from rdal.models.grl import GradientReversalLayer
from rdal.models.grl import grl_backward
from rdal.models.grl import grl_forward
from rdal.models.masknet import MaskNet
from rdal.models.masknet import mask_apply
from rdal.models.networks import EventClassifier
from rdal.models.networks import FeatureExtractor
from rdal.models.networks import Networks
from rdal.models.networks import SpeechClassifier
from rdal.models.networks import build_networks
from rdal.models.networks import forward_event
from rdal.models.networks import forward_speech

__all__ = [
    "EventClassifier",
    "FeatureExtractor",
    "GradientReversalLayer",
    "MaskNet",
    "Networks",
    "SpeechClassifier",
    "build_networks",
    "forward_event",
    "forward_speech",
    "grl_backward",
    "grl_forward",
    "mask_apply",
]
