"""Encoder-decoder stage: a KL-regularized VAE compressing paragraphs to a
1-channel latent at 1/8 spatial resolution.

Training combines L1 reconstruction, a (tiny) KL penalty and feedback from
two frozen auxiliary models reading the reconstruction: a paragraph text
recognizer and a writer-identification CNN. The discriminator used by
stock latent-autoencoder recipes is deliberately absent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn

from .blocks import Downsample, ResBlock, Upsample, group_norm

SPATIAL_FACTOR = 8


@dataclass(frozen=True)
class VaeConfig:
    base_channels: int = 32
    channel_mults: tuple[int, ...] = (1, 2, 4, 8)
    z_channels: int = 1
    res_blocks: int = 2
    dropout: float = 0.1

    def __post_init__(self):
        if 2 ** (len(self.channel_mults) - 1) != SPATIAL_FACTOR:
            raise ValueError("channel multipliers must give a spatial factor of 8")


@dataclass
class LatentPosterior:
    """Diagonal Gaussian over the latent; mean/logvar are (B, 1, h, w)."""

    mean: torch.Tensor
    logvar: torch.Tensor

    def sample(self, generator: torch.Generator | None = None) -> torch.Tensor:
        eps = torch.randn(
            self.mean.shape, generator=generator, dtype=self.mean.dtype, device=self.mean.device
        )
        return self.mean + torch.exp(0.5 * self.logvar) * eps

    def kl(self) -> torch.Tensor:
        """KL(q || N(0, I)), summed over latent elements, averaged over batch."""
        per_elem = 0.5 * (self.mean.pow(2) + self.logvar.exp() - 1.0 - self.logvar)
        return per_elem.flatten(1).sum(dim=1).mean()


def to_model_range(x01: torch.Tensor) -> torch.Tensor:
    return x01 * 2.0 - 1.0


def to_unit_range(x: torch.Tensor) -> torch.Tensor:
    return ((x + 1.0) / 2.0).clamp(0.0, 1.0)


class ParagraphVae(nn.Module):
    def __init__(self, config: VaeConfig = VaeConfig()):
        super().__init__()
        self.config = config
        widths = [config.base_channels * m for m in config.channel_mults]

        # encoder
        enc: list[nn.Module] = [nn.Conv2d(1, widths[0], 3, padding=1)]
        ch = widths[0]
        for i, w in enumerate(widths):
            for _ in range(config.res_blocks):
                enc.append(ResBlock(ch, w, dropout=config.dropout))
                ch = w
            if i < len(widths) - 1:
                enc.append(Downsample(ch))
        enc += [group_norm(ch), nn.SiLU(), nn.Conv2d(ch, 2 * config.z_channels, 3, padding=1)]
        self.encoder = nn.Sequential(*enc)

        # decoder (mirrored)
        dec: list[nn.Module] = [nn.Conv2d(config.z_channels, widths[-1], 3, padding=1)]
        ch = widths[-1]
        for i, w in enumerate(reversed(widths)):
            for _ in range(config.res_blocks):
                dec.append(ResBlock(ch, w, dropout=config.dropout))
                ch = w
            if i < len(widths) - 1:
                dec.append(Upsample(ch))
        dec += [group_norm(ch), nn.SiLU(), nn.Conv2d(ch, 1, 3, padding=1)]
        self.decoder = nn.Sequential(*dec)

    def encode(self, x: torch.Tensor) -> LatentPosterior:
        """x: (B, 1, H, W) in model range [-1, 1]; H and W divisible by 8."""
        _, _, h, w = x.shape
        if h % SPATIAL_FACTOR or w % SPATIAL_FACTOR:
            raise ValueError(f"spatial dims must be divisible by {SPATIAL_FACTOR}, got {h}x{w}")
        mean, logvar = self.encoder(x).chunk(2, dim=1)
        return LatentPosterior(mean=mean, logvar=logvar.clamp(-30.0, 20.0))

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        """z: (B, 1, h, w) -> reconstruction in model range (B, 1, 8h, 8w)."""
        if z.ndim != 4 or z.shape[1] != self.config.z_channels:
            raise ValueError(f"expected (B, {self.config.z_channels}, h, w), got {tuple(z.shape)}")
        return self.decoder(z)

    def decode01(self, z: torch.Tensor) -> torch.Tensor:
        return to_unit_range(self.decode(z))


@dataclass(frozen=True)
class EdsLossWeights:
    kl: float = 1e-6
    htr: float = 0.3
    wi: float = 0.005

    @classmethod
    def vanilla(cls) -> "EdsLossWeights":
        return cls(kl=1e-6, htr=0.0, wi=0.0)


@dataclass
class EdsLossReport:
    """First-stage loss decomposition; total = rec + w_kl*kl + w_htr*htr + w_wi*wi."""

    total: torch.Tensor
    rec: torch.Tensor
    kl: torch.Tensor
    htr: torch.Tensor
    wi: torch.Tensor
    weights: EdsLossWeights = field(default_factory=EdsLossWeights)

    def detached(self) -> dict:
        return {
            "total": float(self.total),
            "rec": float(self.rec),
            "kl": float(self.kl),
            "htr": float(self.htr),
            "wi": float(self.wi),
        }


def eds_loss(
    x: torch.Tensor,
    x_rec: torch.Tensor,
    posterior: LatentPosterior,
    weights: EdsLossWeights,
    target_tokens: torch.Tensor | None = None,
    writer_labels: torch.Tensor | None = None,
    frozen_htr=None,
    frozen_wi=None,
) -> EdsLossReport:
    """Combined first-stage loss on a batch.

    ``x``/``x_rec`` are in model range [-1, 1]. The auxiliary models see the
    reconstruction only and must already be frozen (requires_grad False);
    gradients flow into the autoencoder through ``x_rec``.
    """
    from .recognizers import htr_loss as _htr_loss

    rec = (x_rec - x).abs().mean()
    kl = posterior.kl()
    zero = torch.zeros((), dtype=x.dtype, device=x.device)
    htr = zero
    wi = zero
    if weights.htr > 0.0:
        if frozen_htr is None or target_tokens is None:
            raise ValueError("htr weight > 0 requires a frozen recognizer and target tokens")
        htr = _htr_loss(frozen_htr, x_rec, target_tokens)
    if weights.wi > 0.0:
        if frozen_wi is None or writer_labels is None:
            raise ValueError("wi weight > 0 requires a frozen writer model and labels")
        wi = nn.functional.cross_entropy(frozen_wi(x_rec), writer_labels)
    total = rec + weights.kl * kl + weights.htr * htr + weights.wi * wi
    return EdsLossReport(total=total, rec=rec, kl=kl, htr=htr, wi=wi, weights=weights)


def reconstruction_metrics(pairs) -> dict:
    """MAE/MSE over aligned (original, reconstruction) pairs, in percent of
    the [0, 1] dynamic range."""
    if not pairs:
        raise ValueError("no image pairs given")
    abs_err, sq_err, n = 0.0, 0.0, 0
    for a, b in pairs:
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape:
            raise ValueError(f"pair shapes differ: {a.shape} vs {b.shape}")
        d = a - b
        abs_err += np.abs(d).sum()
        sq_err += (d * d).sum()
        n += d.size
    return {"mae": 100.0 * abs_err / n, "mse": 100.0 * sq_err / n}
