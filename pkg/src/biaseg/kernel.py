"""Disk-shaped indicator kernel and exact truncated convolution.

The kernel is the set of integer pixel offsets within Euclidean distance
``rho`` of the origin (pixel-center distances, inclusive boundary).
Convolution sums field values over the in-image part of the window; offsets
falling outside the image contribute nothing and no normalization is applied,
so boundary windows are simply smaller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

__all__ = ["DiskKernel", "disk_offsets", "conv_disk", "area_field"]


@dataclass(frozen=True)
class DiskKernel:
    """Integer offsets with dx^2 + dy^2 <= rho^2.

    ``spans`` groups the offsets by row: an entry ``(dy, half)`` means row
    ``dy`` contributes every ``dx`` in ``[-half, half]``. The offset set is
    symmetric under negation and always contains (0, 0).
    """

    rho: float
    offsets: tuple[tuple[int, int], ...]
    spans: tuple[tuple[int, int], ...]


def disk_offsets(rho: float) -> DiskKernel:
    """Enumerate the disk kernel of radius ``rho``."""
    if not (rho > 0) or not math.isfinite(rho):
        raise InvalidArgumentError(f"rho must be a positive real, got {rho}")
    r = int(math.floor(rho))
    r2 = rho * rho
    offsets: list[tuple[int, int]] = []
    spans: list[tuple[int, int]] = []
    for dy in range(-r, r + 1):
        half = int(math.sqrt(max(0.0, r2 - dy * dy)))
        # fix up any floating-point fuzz in the sqrt
        while (half + 1) * (half + 1) + dy * dy <= r2:
            half += 1
        while half > 0 and half * half + dy * dy > r2:
            half -= 1
        spans.append((dy, half))
        offsets.extend((dx, dy) for dx in range(-half, half + 1))
    return DiskKernel(rho=float(rho), offsets=tuple(offsets), spans=tuple(spans))


def conv_disk(field: np.ndarray, kernel: DiskKernel) -> np.ndarray:
    """Truncated disk convolution: out(x) = sum of f over the in-image window.

    Computed row by row with prefix sums, O(height * width) per kernel row;
    agrees with the naive double loop to better than 1e-12 relative.
    """
    f = np.asarray(field, dtype=np.float64)
    h, w = f.shape
    prefix = np.zeros((h, w + 1), dtype=np.float64)
    np.cumsum(f, axis=1, out=prefix[:, 1:])
    idx = np.arange(w)
    out = np.zeros_like(f)
    for dy, half in kernel.spans:
        if abs(dy) >= h:
            continue
        hi = np.minimum(idx + half + 1, w)
        lo = np.maximum(idx - half, 0)
        rows = prefix[:, hi] - prefix[:, lo]
        if dy == 0:
            out += rows
        elif dy > 0:
            out[: h - dy] += rows[dy:]
        else:
            out[-dy:] += rows[: h + dy]
    return out


def area_field(width: int, height: int, kernel: DiskKernel) -> np.ndarray:
    """Per-pixel count of in-image window offsets; equals conv_disk(ones)."""
    return conv_disk(np.ones((height, width), dtype=np.float64), kernel)
