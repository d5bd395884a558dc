"""U-shaped masking front-end applied to magnitude spectrograms."""

from __future__ import annotations

import numpy as np
import torch
from torch import nn
import torch.nn.functional as F

from rdal.core.errors import ShapeMismatchError
from rdal.features.spectral import MagnitudeSpectrogram
from rdal.models.networks import init_weights
from rdal.models.networks import seeded

# sigmoid(50) rounds to exactly 1.0 in float32 and float64
IDENTITY_BIAS = 50.0
_LEVELS = 2


class DoubleConv(nn.Module):
    def __init__(self, in_channels: int, out_channels: int) -> None:
        super().__init__()
        self.layers = nn.Sequential(
            nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=1, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(out_channels, out_channels, kernel_size=3, padding=1, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.layers(x)


class MaskNet(nn.Module):
    """Three-level encoder/decoder with skip connections and a sigmoid mask head.

    Input is a (batch, freq_bins, frames) magnitude; output is a mask of the same shape.
    """

    def __init__(self, channels: tuple[int, int, int] = (16, 32, 64)) -> None:
        super().__init__()
        c1, c2, c3 = channels
        self.enc1 = DoubleConv(1, c1)
        self.enc2 = DoubleConv(c1, c2)
        self.bottleneck = DoubleConv(c2, c3)
        self.up2 = nn.ConvTranspose2d(c3, c2, kernel_size=2, stride=2)
        self.dec2 = DoubleConv(2 * c2, c2)
        self.up1 = nn.ConvTranspose2d(c2, c1, kernel_size=2, stride=2)
        self.dec1 = DoubleConv(2 * c1, c1)
        self.head = nn.Conv2d(c1, 1, kernel_size=1)
        self.channels = channels

    def forward(self, magnitude: torch.Tensor) -> torch.Tensor:
        if magnitude.ndim != 3:
            raise ShapeMismatchError(f"expected (batch, bins, frames) magnitudes, got {tuple(magnitude.shape)}")
        bins, frames = magnitude.shape[1:]
        multiple = 2**_LEVELS
        x = torch.log1p(magnitude).unsqueeze(1)
        x = F.pad(x, (0, -frames % multiple, 0, -bins % multiple))

        skip1 = self.enc1(x)
        skip2 = self.enc2(F.max_pool2d(skip1, 2))
        hidden = self.bottleneck(F.max_pool2d(skip2, 2))
        hidden = self.dec2(torch.cat([self.up2(hidden), skip2], dim=1))
        hidden = self.dec1(torch.cat([self.up1(hidden), skip1], dim=1))
        mask = torch.sigmoid(self.head(hidden))
        return mask[:, 0, :bins, :frames]

    def identity_init(self) -> None:
        """Make the mask exactly one everywhere."""
        with torch.no_grad():
            self.head.weight.zero_()
            self.head.bias.fill_(IDENTITY_BIAS)

    def freeze(self) -> MaskNet:
        for parameter in self.parameters():
            parameter.requires_grad_(False)
        return self.eval()


def build_mask_net(channels: tuple[int, int, int], *, seed: int, identity: bool = False) -> MaskNet:
    with seeded(seed):
        network = MaskNet(channels)
        init_weights(network)
    if identity:
        network.identity_init()
    return network


@torch.no_grad()
def mask_apply(spec: MagnitudeSpectrogram, mask_net: MaskNet) -> MagnitudeSpectrogram:
    """Entrywise product of the predicted mask with ``spec``; the network is left untouched."""
    was_training = mask_net.training
    mask_net.eval()
    try:
        mask = mask_net(torch.from_numpy(spec.values).float().unsqueeze(0))[0]
    finally:
        mask_net.train(was_training)
    weights = np.clip(mask.double().numpy(), 0.0, 1.0)
    return MagnitudeSpectrogram(weights * spec.values)
