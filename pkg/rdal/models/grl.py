"""Gradient reversal: identity forward, gradient scaled by -lambda backward."""

from __future__ import annotations

import torch
from torch import nn
from torch.autograd import Function


class GradientReversal(Function):
    @staticmethod
    def forward(ctx, x: torch.Tensor, lambda_: float) -> torch.Tensor:  # type: ignore[override]
        ctx.lambda_ = lambda_
        return x.view_as(x)

    @staticmethod
    def backward(ctx, grad_output: torch.Tensor) -> tuple[torch.Tensor, None]:  # type: ignore[override]
        return grad_output.neg() * ctx.lambda_, None


def _check_lambda(lambda_: float) -> float:
    if lambda_ < 0:
        raise ValueError(f"lambda must be >= 0, got {lambda_}")
    return float(lambda_)


def grl_forward(z: torch.Tensor, lambda_: float = 1.0) -> torch.Tensor:
    """Pass ``z`` through unchanged while recording the reversal for backprop."""
    return GradientReversal.apply(z, _check_lambda(lambda_))


def grl_backward(upstream_grad: torch.Tensor, lambda_: float) -> torch.Tensor:
    """Gradient the layer hands back to its input for a given upstream gradient."""
    probe = torch.zeros_like(upstream_grad, requires_grad=True)
    (grad,) = torch.autograd.grad(grl_forward(probe, lambda_), probe, grad_outputs=upstream_grad)
    return grad


class GradientReversalLayer(nn.Module):
    """Module form with a mutable coefficient, updated by the training schedule."""

    def __init__(self, lambda_: float = 0.0) -> None:
        super().__init__()
        self.lambda_ = _check_lambda(lambda_)

    def set_lambda(self, lambda_: float) -> None:
        self.lambda_ = _check_lambda(lambda_)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return grl_forward(z, self.lambda_)

    def extra_repr(self) -> str:
        return f"lambda_={self.lambda_:.6f}"
