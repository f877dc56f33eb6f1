"""Statistical core of the segmentation model.

Pixels are modeled as Gaussian classes whose local means are a smooth
multiplicative bias times a per-class constant. Soft region memberships are
built from an arctan-smoothed step function of the level set(s). For each
class the windowed negative log-likelihood gives a per-pixel data cost
("force field"); summing cost times membership over the image gives the
energy that every update below decreases:

* class constants: ratio of window-correlated image/bias moments, the exact
  energy minimizer for fixed bias, deviations and memberships;
* bias field: per-pixel ratio of class-weighted normalized convolutions
  (exact per-pixel minimizer);
* class deviations: square root of the windowed residual second moment,
  clamped to a small positive floor so the log and inverse-variance terms
  stay finite.

All functions are pure; fields are treated as immutable.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBiasError, DegenerateClassError, InvalidArgumentError
from .kernel import DiskKernel, conv_disk

__all__ = [
    "SIGMA_FLOOR",
    "ModelParams",
    "heaviside",
    "dirac",
    "memberships",
    "update_means",
    "update_bias",
    "update_sigmas",
    "force_fields",
    "energy",
]

SIGMA_FLOOR = 1e-4

_DEGENERATE_EPS = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Class constants, class standard deviations, and the bias field."""

    c: tuple[float, ...]
    sigma: tuple[float, ...]
    bias: np.ndarray


def heaviside(z, epsilon: float):
    """Smoothed step 0.5 * (1 + (2/pi) * arctan(z / epsilon)), in (0, 1)."""
    if not epsilon > 0:
        raise InvalidArgumentError(f"epsilon must be positive, got {epsilon}")
    return 0.5 * (1.0 + (2.0 / np.pi) * np.arctan(z / epsilon))


def dirac(z, epsilon: float):
    """Derivative of :func:`heaviside`: (epsilon/pi) / (epsilon^2 + z^2)."""
    if not epsilon > 0:
        raise InvalidArgumentError(f"epsilon must be positive, got {epsilon}")
    return (epsilon / np.pi) / (epsilon * epsilon + np.square(z))


def _as_level_sets(phi) -> list[np.ndarray]:
    if isinstance(phi, np.ndarray):
        phis = [phi]
    else:
        phis = [np.asarray(p, dtype=np.float64) for p in phi]
    if len(phis) not in (1, 2):
        raise InvalidArgumentError(f"expected 1 or 2 level sets, got {len(phis)}")
    if any(p.shape != phis[0].shape for p in phis):
        raise InvalidArgumentError("level sets must share dimensions")
    return phis


def memberships(phi, epsilon: float) -> list[np.ndarray]:
    """Soft per-pixel class weights from the level set(s).

    One level set yields two classes [H, 1-H]; two level sets yield four
    classes from the products of H(phi1), H(phi2). The weights sum to 1 at
    every pixel, exactly.
    """
    phis = _as_level_sets(phi)
    if len(phis) == 1:
        m1 = heaviside(phis[0], epsilon)
        return [m1, 1.0 - m1]
    h1 = heaviside(phis[0], epsilon)
    h2 = heaviside(phis[1], epsilon)
    m1 = h1 * h2
    m2 = h1 * (1.0 - h2)
    m3 = (1.0 - h1) * h2
    m4 = 1.0 - (m1 + m2 + m3)  # closes the partition of unity exactly
    return [m1, m2, m3, m4]


def _bias_moments(bias, kernel, conv_b, conv_b2):
    if conv_b is None:
        conv_b = conv_disk(bias, kernel)
    if conv_b2 is None:
        conv_b2 = conv_disk(bias * bias, kernel)
    return conv_b, conv_b2


def update_means(
    image: np.ndarray,
    members: Sequence[np.ndarray],
    bias: np.ndarray,
    kernel: DiskKernel,
    *,
    conv_b: np.ndarray | None = None,
    conv_b2: np.ndarray | None = None,
) -> list[float]:
    """Exact minimizers of the energy with respect to the class constants.

    c_i = sum((K*b) * I * M_i) / sum((K*b^2) * M_i). Raises
    :class:`DegenerateClassError` when a class denominator vanishes.
    """
    conv_b, conv_b2 = _bias_moments(bias, kernel, conv_b, conv_b2)
    means = []
    for i, m in enumerate(members):
        den = float(np.sum(conv_b2 * m))
        if den < _DEGENERATE_EPS:
            raise DegenerateClassError(i, "mean denominator vanished")
        num = float(np.sum(conv_b * image * m))
        means.append(num / den)
    return means


def update_bias(
    image: np.ndarray,
    members: Sequence[np.ndarray],
    c: Sequence[float],
    sigma: Sequence[float],
    kernel: DiskKernel,
) -> np.ndarray:
    """Exact per-pixel minimizer of the energy with respect to the bias.

    b(x) = sum_i (c_i/sigma_i^2) * K*(I*M_i) / sum_i (c_i^2/sigma_i^2) * K*M_i,
    a ratio of normalized convolutions, hence smooth.
    """
    num = np.zeros_like(image)
    den = np.zeros_like(image)
    for m, ci, si in zip(members, c, sigma):
        wi = ci / (si * si)
        num += wi * conv_disk(image * m, kernel)
        den += (ci * wi) * conv_disk(m, kernel)
    small = den < _DEGENERATE_EPS
    if small.any():
        yy, xx = np.nonzero(small)
        raise DegenerateBiasError(int(xx[0]), int(yy[0]))
    return num / den


def update_sigmas(
    image: np.ndarray,
    members: Sequence[np.ndarray],
    bias: np.ndarray,
    c: Sequence[float],
    kernel: DiskKernel,
    *,
    floor: float = SIGMA_FLOOR,
    area: np.ndarray | None = None,
    conv_b: np.ndarray | None = None,
    conv_b2: np.ndarray | None = None,
) -> list[float]:
    """Windowed residual root-mean-square per class, clamped below by ``floor``.

    sigma_i^2 = sum over pixel pairs (y in window of x) of
    M_i(y) * (I(y) - b(x) c_i)^2, divided by the same sum of M_i(y), computed
    via the expansion I^2*A - 2*I*(K*b)*c_i + (K*b^2)*c_i^2.
    """
    if area is None:
        area = conv_disk(np.ones_like(image), kernel)
    conv_b, conv_b2 = _bias_moments(bias, kernel, conv_b, conv_b2)
    i_sq_area = image * image * area
    two_i_kb = 2.0 * image * conv_b
    sigmas = []
    for i, (m, ci) in enumerate(zip(members, c)):
        mass = float(np.sum(m * area))
        if mass < _DEGENERATE_EPS:
            raise DegenerateClassError(i, "zero class mass")
        quad = i_sq_area - ci * two_i_kb + (ci * ci) * conv_b2
        num = float(np.sum(m * quad))
        sigmas.append(max(floor, math.sqrt(max(0.0, num / mass))))
    return sigmas


def force_fields(
    image: np.ndarray,
    params: ModelParams,
    kernel: DiskKernel,
    *,
    area: np.ndarray | None = None,
    conv_b: np.ndarray | None = None,
    conv_b2: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Per-class data costs d_i: window-integrated Gaussian negative log-likelihood.

    d_i(y) = A(y)*log(sigma_i)
           + [I(y)^2*A(y) - 2*I(y)*c_i*(K*b)(y) + c_i^2*(K*b^2)(y)] / (2*sigma_i^2).

    Only three convolutions are needed in total (A, K*b, K*b^2), shared by
    every class; pass them in to reuse across calls.
    """
    if any(not s > 0 for s in params.sigma):
        raise InvalidArgumentError(f"sigmas must be positive, got {params.sigma}")
    if area is None:
        area = conv_disk(np.ones_like(image), kernel)
    conv_b, conv_b2 = _bias_moments(params.bias, kernel, conv_b, conv_b2)
    i_sq_area = image * image * area
    two_i_kb = 2.0 * image * conv_b
    forces = []
    for ci, si in zip(params.c, params.sigma):
        quad = i_sq_area - ci * two_i_kb + (ci * ci) * conv_b2
        forces.append(area * math.log(si) + quad / (2.0 * si * si))
    return forces


def energy(
    image: np.ndarray,
    params: ModelParams,
    phi,
    epsilon: float,
    kernel: DiskKernel,
    *,
    area: np.ndarray | None = None,
) -> float:
    """Total energy: sum over classes of sum(d_i * M_i)."""
    members = memberships(phi, epsilon)
    forces = force_fields(image, params, kernel, area=area)
    return float(sum(np.sum(d * m) for d, m in zip(forces, members)))
