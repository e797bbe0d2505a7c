"""Image augmentation for recognizer/VAE/diffusion training.

All inputs and outputs are float32 images in [0, 1], white background and
dark ink. With every probability at zero the input array is returned as a
bit-exact copy. Dilation and erosion are mutually exclusive per draw: a
single uniform variable is partitioned into [0, p_dil) -> dilation,
[p_dil, p_dil + p_ero) -> erosion, so each keeps its marginal probability
while never co-occurring (this requires p_dil + p_ero <= 1).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import cv2
import numpy as np


@dataclass(frozen=True)
class AugmentPolicy:
    dilation: float = 0.0
    erosion: float = 0.0
    distort_noise: float = 0.0
    elastic: float = 0.0
    perspective: float = 0.0
    gaussian_noise: float = 0.0
    contrast: float = 0.0
    brightness: float = 0.0

    def __post_init__(self):
        for name, p in vars(self).items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {name}={p} outside [0, 1]")
        if self.dilation + self.erosion > 1.0:
            raise ValueError("dilation and erosion are exclusive; probabilities must sum to <= 1")

    @classmethod
    def none(cls) -> "AugmentPolicy":
        return cls()

    @classmethod
    def vae(cls) -> "AugmentPolicy":
        return cls(dilation=0.3, erosion=0.3, distort_noise=0.3)

    @classmethod
    def recognizer(cls) -> "AugmentPolicy":
        return cls(dilation=0.3, erosion=0.3, distort_noise=0.3, elastic=0.3, perspective=0.3)

    @classmethod
    def diffusion(cls) -> "AugmentPolicy":
        return cls(gaussian_noise=0.2, contrast=0.2, brightness=0.2)

    def scaled(self, factor: float) -> "AugmentPolicy":
        return replace(self, **{k: v * factor for k, v in vars(self).items()})


def augment(image: np.ndarray, policy: AugmentPolicy, rng: np.random.Generator) -> np.ndarray:
    """Apply one random draw of the policy to ``image``."""
    out = image.astype(np.float32, copy=True)
    if all(p == 0.0 for p in vars(policy).values()):
        return out

    # ink morphology (joint exclusive draw)
    u = rng.random()
    if u < policy.dilation:
        out = _ink_dilate(out)
    elif u < policy.dilation + policy.erosion:
        out = _ink_erode(out)

    if rng.random() < policy.distort_noise:
        out = _distort_with_noise(out, rng)
    if rng.random() < policy.elastic:
        out = _elastic(out, rng)
    if rng.random() < policy.perspective:
        out = _perspective(out, rng)
    if rng.random() < policy.gaussian_noise:
        out = out + rng.normal(0.0, 0.03, size=out.shape).astype(np.float32)
    if rng.random() < policy.contrast:
        out = 0.5 + (out - 0.5) * rng.uniform(0.7, 1.3)
    if rng.random() < policy.brightness:
        out = out + rng.uniform(-0.1, 0.1)

    return np.clip(out, 0.0, 1.0, out=np.asarray(out, dtype=np.float32))


def _ink_dilate(image: np.ndarray) -> np.ndarray:
    # thicker strokes: grow the dark foreground = grayscale erosion of values
    if min(image.shape) < 3:
        return image
    return cv2.erode(image, np.ones((2, 2), dtype=np.uint8))


def _ink_erode(image: np.ndarray) -> np.ndarray:
    if min(image.shape) < 3:
        return image
    return cv2.dilate(image, np.ones((2, 2), dtype=np.uint8))


def _distort_with_noise(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Jagged per-pixel displacement by an unsmoothed noise field."""
    h, w = image.shape
    if min(h, w) < 3:
        return image
    amp = 1.0
    dx = rng.uniform(-amp, amp, size=(h, w)).astype(np.float32)
    dy = rng.uniform(-amp, amp, size=(h, w)).astype(np.float32)
    return _remap(image, dx, dy)


def _elastic(image: np.ndarray, rng: np.random.Generator, alpha: float = 8.0, sigma: float = 6.0) -> np.ndarray:
    """Smooth elastic warp: gaussian-filtered displacement field."""
    h, w = image.shape
    if min(h, w) < 3:
        return image
    dx = cv2.GaussianBlur(rng.uniform(-1, 1, size=(h, w)).astype(np.float32), (0, 0), sigma) * alpha
    dy = cv2.GaussianBlur(rng.uniform(-1, 1, size=(h, w)).astype(np.float32), (0, 0), sigma) * alpha
    return _remap(image, dx, dy)


def _remap(image: np.ndarray, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    h, w = image.shape
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float32), np.arange(h, dtype=np.float32))
    return cv2.remap(
        image,
        xs + dx,
        ys + dy,
        interpolation=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=1.0,
    )


def _perspective(image: np.ndarray, rng: np.random.Generator, max_shift: float = 0.04) -> np.ndarray:
    h, w = image.shape
    if min(h, w) < 3:
        return image
    src = np.array([[0, 0], [w, 0], [w, h], [0, h]], dtype=np.float32)
    jitter = rng.uniform(-max_shift, max_shift, size=(4, 2)).astype(np.float32)
    dst = src + jitter * np.array([w, h], dtype=np.float32)
    m = cv2.getPerspectiveTransform(src, dst)
    return cv2.warpPerspective(
        image, m, (w, h), flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_CONSTANT, borderValue=1.0
    )
