"""End-to-end segmentation drivers.

``segment`` runs the full alternating scheme: per iteration it refreshes the
class constants, the bias field and the class deviations by their closed
forms, rebuilds the force fields, advances the level set(s) one explicit
step and applies the diffusion regularizer, then checks stationarity as the
fraction of pixels whose region sign changed. ``cv_segment`` is the classic
global two-constant (Chan-Vese, zero length-penalty) baseline sharing the
same evolution machinery, for comparison on inhomogeneous images.

The bias/constant pair is identifiable only up to a global scale, so the
returned bias is normalized to mean one (constants rescaled to match) before
the corrected image is formed.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateClassError,
    DegenerateInputError,
    InvalidArgumentError,
    StabilityError,
)
from .evolve import DT2_MAX, regularize, step_four_phase, step_two_phase
from .field import read_pgm
from .kernel import area_field, conv_disk, disk_offsets
from .model import (
    ModelParams,
    dirac,
    force_fields,
    heaviside,
    memberships,
    update_bias,
    update_means,
    update_sigmas,
)

__all__ = [
    "SolverConfig",
    "SegOutcome",
    "init_level_set",
    "segment",
    "cv_segment",
    "stop_check",
    "cv_reduction_force",
    "bias_correct",
]

_BIAS_CORRECT_FLOOR = 1e-6
_MAX_STALE_ITERS = 50


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters; the defaults are the recommended settings.

    ``init`` holds one contour spec string for two-phase, two for
    four-phase (see :func:`init_level_set`); ``None`` means a centered
    circle of radius min(width, height)/4 (two-phase only).
    """

    rho: float = 6.0
    dt: float = 1.0
    dt2: float = 0.1
    epsilon: float = 1.0
    n_classes: int = 2
    max_iter: int = 500
    stop_tol: float = 1e-4
    sigma_floor: float = 1e-4
    init: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.rho > 0:
            raise InvalidArgumentError(f"rho must be positive, got {self.rho}")
        if not self.dt > 0:
            raise InvalidArgumentError(f"dt must be positive, got {self.dt}")
        if not 0.0 <= self.dt2 <= DT2_MAX:
            raise StabilityError(
                f"dt2={self.dt2} outside the stable range [0, {DT2_MAX}]"
            )
        if not self.epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be positive, got {self.epsilon}")
        if self.n_classes not in (2, 4):
            raise InvalidArgumentError(f"n_classes must be 2 or 4, got {self.n_classes}")
        if self.max_iter < 1:
            raise InvalidArgumentError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.stop_tol < 0:
            raise InvalidArgumentError(f"stop_tol must be >= 0, got {self.stop_tol}")
        if not self.sigma_floor > 0:
            raise InvalidArgumentError(
                f"sigma_floor must be positive, got {self.sigma_floor}"
            )


@dataclass
class SegOutcome:
    """Everything a segmentation run produces."""

    labels: np.ndarray
    level_sets: tuple[np.ndarray, ...]
    bias: np.ndarray
    corrected: np.ndarray
    c: list[float]
    sigma: list[float]
    iterations: int
    energy_trace: list[float] = field(default_factory=list)
    converged: bool = False


def init_level_set(width: int, height: int, spec: str) -> np.ndarray:
    """Binary +-1 step function from a contour description.

    ``spec`` is one of ``circle:cx,cy,r``, ``rect:x0,y0,x1,y1``,
    ``checker:cell``, or ``mask:<pgm path>`` (inside where pixel > 127).
    The value is +1 strictly inside the region and -1 outside (pixel-center
    test); an empty or full region is rejected.
    """
    kind, _, arg = str(spec).partition(":")
    xs = np.arange(width, dtype=np.float64)[None, :]
    ys = np.arange(height, dtype=np.float64)[:, None]
    try:
        if kind == "circle":
            cx, cy, r = (float(t) for t in arg.split(","))
            inside = (xs - cx) ** 2 + (ys - cy) ** 2 < r * r
        elif kind == "rect":
            x0, y0, x1, y1 = (float(t) for t in arg.split(","))
            inside = (xs >= x0) & (xs <= x1) & (ys >= y0) & (ys <= y1)
        elif kind == "checker":
            cell = int(arg)
            if cell < 1:
                raise InvalidArgumentError(f"checker cell must be >= 1, got {cell}")
            inside = ((xs.astype(int) // cell) + (ys.astype(int) // cell)) % 2 == 0
        elif kind == "mask":
            with open(arg, "rb") as fh:
                mask = read_pgm(fh.read())
            if mask.shape != (height, width):
                raise InvalidArgumentError(
                    f"mask {arg} is {mask.shape[1]}x{mask.shape[0]}, "
                    f"expected {width}x{height}"
                )
            inside = mask > 127
        else:
            raise InvalidArgumentError(f"unknown init spec kind {kind!r}")
    except ValueError as exc:
        raise InvalidArgumentError(f"malformed init spec {spec!r}: {exc}") from None
    inside = np.broadcast_to(inside, (height, width))
    if not inside.any():
        raise InvalidArgumentError(f"init spec {spec!r} selects an empty region")
    if inside.all():
        raise InvalidArgumentError(f"init spec {spec!r} covers the whole image")
    return np.where(inside, 1.0, -1.0)


def _initial_level_sets(shape: tuple[int, int], cfg: SolverConfig) -> list[np.ndarray]:
    h, w = shape
    need = 1 if cfg.n_classes == 2 else 2
    specs = cfg.init
    if specs is None:
        if need == 2:
            raise InvalidArgumentError("four-phase segmentation needs two init specs")
        specs = (f"circle:{w / 2},{h / 2},{min(w, h) / 4}",)
    if len(specs) != need:
        raise InvalidArgumentError(
            f"{cfg.n_classes}-phase segmentation needs {need} init spec(s), "
            f"got {len(specs)}"
        )
    return [init_level_set(w, h, s) for s in specs]


def stop_check(phi_prev, phi_next, stop_tol: float) -> bool:
    """True when the fraction of pixels whose region sign changed is small.

    A pixel counts as changed if the sign (>= 0 versus < 0) of any level set
    differs between the two states.
    """
    prev = [phi_prev] if isinstance(phi_prev, np.ndarray) else list(phi_prev)
    nxt = [phi_next] if isinstance(phi_next, np.ndarray) else list(phi_next)
    changed = np.zeros(prev[0].shape, dtype=bool)
    for p, q in zip(prev, nxt):
        changed |= (p >= 0) != (q >= 0)
    return bool(np.mean(changed) <= stop_tol)


def bias_correct(image: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Divide out the bias, flooring the denominator at 1e-6."""
    return image / np.maximum(bias, _BIAS_CORRECT_FLOOR)


def cv_reduction_force(
    image: np.ndarray,
    c1: float,
    c2: float,
    kernel,
    area: np.ndarray | None = None,
) -> np.ndarray:
    """Force d2 - d1 with unit deviations and unit bias.

    Reduces to (A/2) * [(I - c2)^2 - (I - c1)^2]; since the window area A is
    positive everywhere, its sign equals the sign of the global two-constant
    force at every pixel.
    """
    if area is None:
        h, w = image.shape
        area = area_field(w, h, kernel)
    return 0.5 * area * ((image - c2) ** 2 - (image - c1) ** 2)


def _labels_from(phis: Sequence[np.ndarray], epsilon: float) -> np.ndarray:
    if len(phis) == 1:
        return np.where(phis[0] >= 0, 0, 1).astype(np.int64)
    members = memberships(phis, epsilon)
    return np.argmax(np.stack(members), axis=0).astype(np.int64)


def _guarded_means(image, members, bias, kernel, conv_b, conv_b2, previous):
    """Per-class fallback to the previous value when a class is empty."""
    try:
        return update_means(image, members, bias, kernel, conv_b=conv_b, conv_b2=conv_b2), []
    except DegenerateClassError:
        pass
    out, empty = [], []
    for i, m in enumerate(members):
        try:
            out.append(
                update_means(image, [m], bias, kernel, conv_b=conv_b, conv_b2=conv_b2)[0]
            )
        except DegenerateClassError:
            out.append(previous[i])
            empty.append(i)
    return out, empty


def _guarded_sigmas(image, members, bias, c, kernel, floor, area, conv_b, conv_b2, previous):
    try:
        return (
            update_sigmas(
                image, members, bias, c, kernel,
                floor=floor, area=area, conv_b=conv_b, conv_b2=conv_b2,
            ),
            [],
        )
    except DegenerateClassError:
        pass
    out, empty = [], []
    for i, m in enumerate(members):
        try:
            out.append(
                update_sigmas(
                    image, [m], bias, [c[i]], kernel,
                    floor=floor, area=area, conv_b=conv_b, conv_b2=conv_b2,
                )[0]
            )
        except DegenerateClassError:
            out.append(previous[i])
            empty.append(i)
    return out, empty


def segment(
    image: np.ndarray,
    cfg: SolverConfig = SolverConfig(),
    init_bias: np.ndarray | None = None,
) -> SegOutcome:
    """Segment an image with simultaneous bias field estimation.

    Each iteration updates, in order: class constants, bias field, class
    deviations, force fields, one evolution step, one regularization step,
    then tests stationarity. The bias starts at 1 (or ``init_bias``), the
    deviations at 1, 2, ... and the constants come from their closed form on
    the first pass. An empty class keeps its previous constants; the run
    aborts only if a class stays empty for 50 consecutive iterations.

    Returns a :class:`SegOutcome` with hard labels (two-phase: class 0 where
    phi >= 0; four-phase: membership argmax), the mean-normalized bias, the
    bias-corrected image, and the per-iteration energy trace.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.min() == image.max():
        raise DegenerateInputError("constant image cannot be segmented")
    h, w = image.shape
    kernel = disk_offsets(cfg.rho)
    area = area_field(w, h, kernel)
    phis = _initial_level_sets(image.shape, cfg)

    n = cfg.n_classes
    if init_bias is None:
        bias = np.ones_like(image)
    else:
        bias = np.asarray(init_bias, dtype=np.float64).copy()
        if bias.shape != image.shape:
            raise InvalidArgumentError("init_bias shape must match the image")
    sigma = [float(i) for i in range(1, n + 1)]
    c = [0.0] * n
    stale = [0] * n
    trace: list[float] = []
    converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iter + 1):
        members = memberships(phis, cfg.epsilon)
        conv_b = conv_disk(bias, kernel)
        conv_b2 = conv_disk(bias * bias, kernel)
        c, empty_c = _guarded_means(image, members, bias, kernel, conv_b, conv_b2, c)
        bias = update_bias(image, members, c, sigma, kernel)
        conv_b = conv_disk(bias, kernel)
        conv_b2 = conv_disk(bias * bias, kernel)
        sigma, empty_s = _guarded_sigmas(
            image, members, bias, c, kernel, cfg.sigma_floor, area, conv_b, conv_b2, sigma
        )
        empty = set(empty_c) | set(empty_s)
        for i in range(n):
            stale[i] = stale[i] + 1 if i in empty else 0
            if stale[i] >= _MAX_STALE_ITERS:
                raise DegenerateClassError(
                    i, f"empty for {stale[i]} consecutive iterations"
                )

        params = ModelParams(tuple(c), tuple(sigma), bias)
        forces = force_fields(
            image, params, kernel, area=area, conv_b=conv_b, conv_b2=conv_b2
        )
        if n == 2:
            new_phis = [
                step_two_phase(phis[0], forces[0], forces[1], cfg.dt, cfg.epsilon)
            ]
        else:
            new_phis = list(
                step_four_phase(phis[0], phis[1], forces, cfg.dt, cfg.epsilon)
            )
        new_phis = [regularize(p, cfg.dt2) for p in new_phis]

        new_members = memberships(new_phis, cfg.epsilon)
        trace.append(float(sum(np.sum(d * m) for d, m in zip(forces, new_members))))
        stopped = stop_check(phis, new_phis, cfg.stop_tol)
        phis = new_phis
        if stopped:
            converged = True
            break

    labels = _labels_from(phis, cfg.epsilon)
    scale = float(np.mean(bias))  # fix the bias/constant scale gauge
    bias = bias / scale
    c = [ci * scale for ci in c]
    corrected = bias_correct(image, bias)
    return SegOutcome(
        labels=labels,
        level_sets=tuple(phis),
        bias=bias,
        corrected=corrected,
        c=c,
        sigma=list(sigma),
        iterations=iterations,
        energy_trace=trace,
        converged=converged,
    )


def cv_segment(image: np.ndarray, cfg: SolverConfig = SolverConfig()) -> SegOutcome:
    """Global two-constant baseline (Chan-Vese data term, no length penalty).

    The constants are the membership-weighted global means of the image; the
    level set follows phi + dt * [(I-c2)^2 - (I-c1)^2] * dirac(phi) and the
    same diffusion regularizer. No bias or deviations are estimated.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.min() == image.max():
        raise DegenerateInputError("constant image cannot be segmented")
    if cfg.n_classes != 2:
        raise InvalidArgumentError("the two-constant baseline is two-phase only")
    phis = _initial_level_sets(image.shape, cfg)
    phi = phis[0]
    trace: list[float] = []
    converged = False
    iterations = 0
    c1 = c2 = 0.0

    for iterations in range(1, cfg.max_iter + 1):
        m1 = heaviside(phi, cfg.epsilon)
        m2 = 1.0 - m1
        c1 = float(np.sum(image * m1) / np.sum(m1))
        c2 = float(np.sum(image * m2) / np.sum(m2))
        force = (image - c2) ** 2 - (image - c1) ** 2
        new_phi = regularize(phi + cfg.dt * force * dirac(phi, cfg.epsilon), cfg.dt2)
        m1_new = heaviside(new_phi, cfg.epsilon)
        trace.append(
            float(
                np.sum((image - c1) ** 2 * m1_new)
                + np.sum((image - c2) ** 2 * (1.0 - m1_new))
            )
        )
        stopped = stop_check(phi, new_phi, cfg.stop_tol)
        phi = new_phi
        if stopped:
            converged = True
            break

    labels = np.where(phi >= 0, 0, 1).astype(np.int64)
    return SegOutcome(
        labels=labels,
        level_sets=(phi,),
        bias=np.ones_like(image),
        corrected=image.copy(),
        c=[c1, c2],
        sigma=[],
        iterations=iterations,
        energy_trace=trace,
        converged=converged,
    )
