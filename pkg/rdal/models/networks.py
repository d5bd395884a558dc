"""Feature extractor F, event classifier C and speech classifier D."""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass

import torch
from torch import nn
import torch.nn.functional as F

from rdal.core.errors import ShapeMismatchError
from rdal.core.reproducibility import derive_seed
from rdal.schemas.config import ModelConfig

N_MELS = 64


def init_weights(module: nn.Module, *, leaky_slope: float | None = None) -> None:
    """Kaiming-uniform weights with zero bias; batch-norm scale 1, shift 0."""
    for layer in module.modules():
        if isinstance(layer, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
            if leaky_slope is None:
                nn.init.kaiming_uniform_(layer.weight, nonlinearity="relu")
            else:
                nn.init.kaiming_uniform_(layer.weight, a=leaky_slope, nonlinearity="leaky_relu")
            if layer.bias is not None:
                nn.init.zeros_(layer.bias)
        elif isinstance(layer, nn.BatchNorm2d):
            nn.init.ones_(layer.weight)
            nn.init.zeros_(layer.bias)


@contextmanager
def seeded(seed: int) -> Iterator[None]:
    """Run a block under its own torch seed without touching the global stream."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        yield


class ConvBlock(nn.Module):
    def __init__(self, in_channels: int, out_channels: int, *, pool: bool) -> None:
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=1, bias=False)
        self.bn = nn.BatchNorm2d(out_channels)
        self.pool = nn.MaxPool2d(2) if pool else nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.pool(F.relu(self.bn(self.conv(x))))


class FeatureExtractor(nn.Module):
    """Four conv blocks, global max pooling and a projection to the latent space."""

    def __init__(self, channels: tuple[int, ...] = (64, 128, 256, 512), latent_dim: int = 64) -> None:
        super().__init__()
        widths = (1, *channels)
        self.blocks = nn.Sequential(
            *(
                ConvBlock(widths[index], widths[index + 1], pool=index < len(channels) - 1)
                for index in range(len(channels))
            )
        )
        self.projection = nn.Linear(channels[-1], latent_dim)
        self.latent_dim = latent_dim

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim == 3:
            x = x.unsqueeze(1)
        if x.ndim != 4 or x.shape[1] != 1 or x.shape[2] != N_MELS:
            raise ShapeMismatchError(f"expected (batch, {N_MELS}, frames) log-mel input, got {tuple(x.shape)}")
        hidden = self.blocks(x)
        return self.projection(torch.amax(hidden, dim=(2, 3)))


class EventClassifier(nn.Module):
    """Single linear layer; ``forward`` returns logits."""

    def __init__(self, latent_dim: int, num_classes: int) -> None:
        super().__init__()
        self.linear = nn.Linear(latent_dim, num_classes)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.linear(z)


class SpeechClassifier(nn.Module):
    """Latent -> 48 -> 32 -> 16 -> 1 with LeakyReLU; ``forward`` returns one logit per row.

    Used for the in-loop discriminator, the periodic probe and the post-hoc attacker.
    """

    def __init__(
        self,
        latent_dim: int = 64,
        hidden: tuple[int, ...] = (48, 32, 16),
        leaky_slope: float = 0.01,
    ) -> None:
        super().__init__()
        layers: list[nn.Module] = []
        width = latent_dim
        for size in hidden:
            layers += [nn.Linear(width, size), nn.LeakyReLU(leaky_slope)]
            width = size
        layers.append(nn.Linear(width, 1))
        self.layers = nn.Sequential(*layers)
        self.leaky_slope = leaky_slope

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.layers(z).squeeze(-1)


def forward_event(
    x: torch.Tensor, feature_extractor: FeatureExtractor, event_classifier: EventClassifier
) -> torch.Tensor:
    """Class probabilities C(F(x))."""
    return torch.softmax(event_classifier(feature_extractor(x)), dim=-1)


def forward_speech(z: torch.Tensor, speech_classifier: SpeechClassifier) -> torch.Tensor:
    """Speech probability D(z)."""
    return torch.sigmoid(speech_classifier(z))


def build_speech_classifier(
    config: ModelConfig, seed: int, *, hidden: tuple[int, ...] | None = None
) -> SpeechClassifier:
    with seeded(seed):
        network = SpeechClassifier(config.latent_dim, hidden or config.probe_hidden, config.leaky_slope)
        init_weights(network, leaky_slope=config.leaky_slope)
    return network


@dataclass
class Networks:
    """Trainable parameter handles of one run; ``speech_classifier`` is None for the baseline."""

    feature_extractor: FeatureExtractor
    event_classifier: EventClassifier
    speech_classifier: SpeechClassifier | None = None

    def modules(self) -> list[nn.Module]:
        found: list[nn.Module] = [self.feature_extractor, self.event_classifier]
        if self.speech_classifier is not None:
            found.append(self.speech_classifier)
        return found

    def train(self, mode: bool = True) -> None:
        for module in self.modules():
            module.train(mode)

    def eval(self) -> None:
        self.train(False)

    def to(self, device: torch.device | str) -> Networks:
        for module in self.modules():
            module.to(device)
        return self


def build_networks(num_classes: int, config: ModelConfig, *, seed: int, with_speech: bool) -> Networks:
    """Initialize F, C and optionally D, each from its own derived seed."""
    with seeded(derive_seed(seed, "feature_extractor")):
        feature_extractor = FeatureExtractor(config.conv_channels, config.latent_dim)
        init_weights(feature_extractor)
    with seeded(derive_seed(seed, "event_classifier")):
        event_classifier = EventClassifier(config.latent_dim, num_classes)
        init_weights(event_classifier)
    speech_classifier = None
    if with_speech:
        speech_classifier = build_speech_classifier(config, derive_seed(seed, "speech_classifier"))
    return Networks(feature_extractor, event_classifier, speech_classifier)


@torch.no_grad()
def encode(feature_extractor: FeatureExtractor, features: torch.Tensor, *, batch_size: int = 256) -> torch.Tensor:
    """Latents of ``features`` in eval mode; the module's training flag is restored."""
    was_training = feature_extractor.training
    feature_extractor.eval()
    try:
        chunks = [
            feature_extractor(features[start : start + batch_size]) for start in range(0, len(features), batch_size)
        ]
    finally:
        feature_extractor.train(was_training)
    if not chunks:
        return torch.empty((0, feature_extractor.latent_dim))
    return torch.cat(chunks)
