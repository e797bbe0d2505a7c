"""Residual building blocks shared by the VAE, recognizers, style encoder
and denoising network. GroupNorm + SiLU convention throughout; no batch
norm anywhere so eval-mode forwards are pure functions of the parameters.
"""

from __future__ import annotations

import torch
import torch.nn as nn


def group_norm(channels: int) -> nn.GroupNorm:
    for groups in (32, 16, 8, 4, 2, 1):
        if channels % groups == 0:
            return nn.GroupNorm(groups, channels)
    return nn.GroupNorm(1, channels)


class ResBlock(nn.Module):
    """Two-conv residual block with optional timestep-embedding injection."""

    def __init__(self, in_ch: int, out_ch: int, dropout: float = 0.0, temb_dim: int | None = None):
        super().__init__()
        self.norm1 = group_norm(in_ch)
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, padding=1)
        self.temb_proj = nn.Linear(temb_dim, out_ch) if temb_dim else None
        self.norm2 = group_norm(out_ch)
        self.dropout = nn.Dropout(dropout)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1)
        self.skip = nn.Conv2d(in_ch, out_ch, 1) if in_ch != out_ch else nn.Identity()
        self.act = nn.SiLU()

    def forward(self, x: torch.Tensor, temb: torch.Tensor | None = None) -> torch.Tensor:
        h = self.conv1(self.act(self.norm1(x)))
        if self.temb_proj is not None:
            if temb is None:
                raise ValueError("this ResBlock expects a timestep embedding")
            h = h + self.temb_proj(self.act(temb))[:, :, None, None]
        h = self.conv2(self.dropout(self.act(self.norm2(h))))
        return self.skip(x) + h


class Downsample(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, stride=2, padding=1)

    def forward(self, x):
        return self.conv(x)


class Upsample(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x):
        return self.conv(nn.functional.interpolate(x, scale_factor=2.0, mode="nearest"))


def timestep_embedding(t: torch.Tensor, dim: int, dtype=torch.float32) -> torch.Tensor:
    """Sinusoidal embedding of (integer) timesteps, shape (B, dim)."""
    if dim % 2 != 0:
        raise ValueError(f"embedding dim must be even, got {dim}")
    idx = torch.arange(0, dim, 2, dtype=dtype, device=t.device)
    freq = torch.pow(torch.tensor(10000.0, dtype=dtype, device=t.device), -idx / dim)
    angles = t.to(dtype).unsqueeze(1) * freq
    emb = torch.zeros(t.shape[0], dim, dtype=dtype, device=t.device)
    emb[:, 0::2] = torch.sin(angles)
    emb[:, 1::2] = torch.cos(angles)
    return emb
