"""Level set time stepping and the diffusion regularizer.

Evolution is an explicit forward-difference step driven by the class force
differences, weighted by the smoothed Dirac of the level set so that all
level curves move. After each step the level set is diffused with a 5-point
Laplacian; the explicit diffusion step is stable only for strengths in
[0, 0.25] (Von Neumann bound), which is enforced.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import StabilityError
from .model import dirac, heaviside

__all__ = ["DT2_MAX", "laplacian", "regularize", "step_two_phase", "step_four_phase"]

DT2_MAX = 0.25


def laplacian(phi: np.ndarray) -> np.ndarray:
    """5-point stencil with replicate (zero-flux) boundaries."""
    p = np.pad(phi, 1, mode="edge")
    return p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * phi


def regularize(phi: np.ndarray, dt2: float) -> np.ndarray:
    """One explicit diffusion step phi + dt2 * laplacian(phi)."""
    if not 0.0 <= dt2 <= DT2_MAX:
        raise StabilityError(
            f"diffusion strength {dt2} outside the stable range [0, {DT2_MAX}]"
        )
    return phi + dt2 * laplacian(phi)


def step_two_phase(
    phi: np.ndarray,
    d1: np.ndarray,
    d2: np.ndarray,
    dt: float,
    epsilon: float,
) -> np.ndarray:
    """Forward step of the two-phase flow dphi/dt = (d2 - d1) * dirac(phi)."""
    return phi + dt * (d2 - d1) * dirac(phi, epsilon)


def step_four_phase(
    phi1: np.ndarray,
    phi2: np.ndarray,
    d: Sequence[np.ndarray],
    dt: float,
    epsilon: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Forward step of the coupled four-phase flow.

    Both level sets are advanced from the same input state (Jacobi style):

        dphi1/dt = -[(d1 - d2 - d3 + d4) H(phi2) + d2 - d4] dirac(phi1)
        dphi2/dt = -[(d1 - d2 - d3 + d4) H(phi1) + d3 - d4] dirac(phi2)
    """
    d1, d2, d3, d4 = d
    cross = d1 - d2 - d3 + d4
    h1 = heaviside(phi1, epsilon)
    h2 = heaviside(phi2, epsilon)
    new1 = phi1 - dt * (cross * h2 + d2 - d4) * dirac(phi1, epsilon)
    new2 = phi2 - dt * (cross * h1 + d3 - d4) * dirac(phi2, epsilon)
    return new1, new2
