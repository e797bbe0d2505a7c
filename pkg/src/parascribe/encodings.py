"""Positional encodings shared by the recognizer, conditioning stage and
denoising network.

The adaptive 2D encoding adds sinusoidal row/column encodings modulated by
input-dependent per-channel gates: a two-layer perceptron on the globally
average-pooled feature vector emits 2*d values squashed to (0, 1), giving
the spatial transformers a content-aware sense of global position.
"""

from __future__ import annotations

import torch
import torch.nn as nn

FREQ_BASE = 10000.0


def sinusoidal_1d(length: int, dim: int, dtype=torch.float32, device=None) -> torch.Tensor:
    """(length, dim) table; row t alternates sin/cos at geometric frequencies.

    dim must be even; every row has L2 norm sqrt(dim / 2).
    """
    if dim % 2 != 0:
        raise ValueError(f"encoding dim must be even, got {dim}")
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    pos = torch.arange(length, dtype=dtype, device=device).unsqueeze(1)
    idx = torch.arange(0, dim, 2, dtype=dtype, device=device)
    freq = torch.pow(torch.tensor(FREQ_BASE, dtype=dtype, device=device), -idx / dim)
    angles = pos * freq
    table = torch.zeros(length, dim, dtype=dtype, device=device)
    table[:, 0::2] = torch.sin(angles)
    table[:, 1::2] = torch.cos(angles)
    return table


def apply_gated_pe(x: torch.Tensor, alpha: torch.Tensor, beta: torch.Tensor) -> torch.Tensor:
    """x + alpha * P_row + beta * P_col for feature maps (B, d, H, W).

    P_row/P_col are 1D sinusoidal tables along height/width broadcast over
    the other axis. Zero gates give the input back exactly.
    """
    b, d, h, w = x.shape
    p_row = sinusoidal_1d(h, d, dtype=x.dtype, device=x.device).t().reshape(1, d, h, 1)
    p_col = sinusoidal_1d(w, d, dtype=x.dtype, device=x.device).t().reshape(1, d, 1, w)
    return x + alpha * p_row + beta * p_col


class Adaptive2DPositionalEncoding(nn.Module):
    """Content-gated 2D sinusoidal positional encoding (shape preserving)."""

    def __init__(self, dim: int):
        super().__init__()
        if dim % 2 != 0:
            raise ValueError(f"feature dim must be even, got {dim}")
        self.dim = dim
        self.gate_net = nn.Sequential(
            nn.Linear(dim, dim),
            nn.ReLU(),
            nn.Linear(dim, 2 * dim),
        )

    def gates(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Per-channel row/column gates in (0, 1), each shaped (B, d, 1, 1)."""
        pooled = x.mean(dim=(2, 3))
        raw = torch.sigmoid(self.gate_net(pooled))
        alpha, beta = raw.chunk(2, dim=1)
        return alpha[:, :, None, None], beta[:, :, None, None]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 4 or x.shape[1] != self.dim:
            raise ValueError(f"expected (B, {self.dim}, H, W), got {tuple(x.shape)}")
        alpha, beta = self.gates(x)
        return apply_gated_pe(x, alpha, beta)
