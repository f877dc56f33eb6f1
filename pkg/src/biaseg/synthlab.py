"""Synthetic phantoms with known signal, bias and labels, plus scoring metrics.

A phantom is built as image = bias * signal + noise: the signal is piecewise
constant (shapes painted over a background class), the bias is a smooth
strictly positive field, and the noise is i.i.d. zero-mean Gaussian from a
seeded generator, so phantoms are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError
from .field import write_field_dump, write_pgm

__all__ = [
    "RNG_ID",
    "PhantomSpec",
    "Phantom",
    "gen_bias",
    "gen_phantom",
    "jaccard",
    "bias_similarity",
    "write_phantom",
]

RNG_ID = "numpy-pcg64-standard-normal"

# a shape is (kind, params, class_index); kinds: disk, ring, rect, cross
Shape = tuple[str, tuple[float, ...], int]


@dataclass(frozen=True)
class PhantomSpec:
    width: int
    height: int
    shapes: tuple[Shape, ...]
    class_levels: tuple[float, ...]
    bias_kind: str = "ramp"
    bias_params: tuple[float, ...] = (1.0, 1.0)
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidArgumentError(
                f"phantom dimensions must be positive, got {self.width}x{self.height}"
            )
        if len(set(self.class_levels)) != len(self.class_levels):
            raise InvalidArgumentError("class levels must be pairwise distinct")
        if self.noise_sigma < 0:
            raise InvalidArgumentError(
                f"noise sigma must be >= 0, got {self.noise_sigma}"
            )


@dataclass(frozen=True)
class Phantom:
    image: np.ndarray
    truth_labels: np.ndarray
    truth_bias: np.ndarray
    truth_signal: np.ndarray


def gen_bias(kind: str, params, width: int, height: int) -> np.ndarray:
    """Smooth strictly positive bias field.

    * ``ramp``: (lo, hi), affine in x from lo to hi;
    * ``gauss_bump``: (a, x0, y0, s), 1 + a*exp(-((x-x0)^2+(y-y0)^2)/(2 s^2));
    * ``poly2``: (lo, hi), a fixed off-center quadratic bowl min-max
      normalized to [lo, hi].
    """
    params = tuple(float(p) for p in params)
    xs = np.arange(width, dtype=np.float64)[None, :]
    ys = np.arange(height, dtype=np.float64)[:, None]
    if kind == "ramp":
        lo, hi = params
        if lo <= 0 or hi <= 0:
            raise InvalidArgumentError(f"ramp endpoints must be positive, got {params}")
        t = xs / (width - 1) if width > 1 else np.zeros_like(xs)
        bias = np.broadcast_to(lo + (hi - lo) * t, (height, width)).copy()
    elif kind == "gauss_bump":
        a, x0, y0, s = params
        if s <= 0:
            raise InvalidArgumentError(f"bump width must be positive, got {s}")
        if a <= -1:
            raise InvalidArgumentError(f"bump amplitude must exceed -1, got {a}")
        r2 = (xs - x0) ** 2 + (ys - y0) ** 2
        bias = 1.0 + a * np.exp(-r2 / (2.0 * s * s))
    elif kind == "poly2":
        lo, hi = params
        if lo <= 0 or hi < lo:
            raise InvalidArgumentError(
                f"poly2 range must satisfy 0 < lo <= hi, got {params}"
            )
        xn = xs / max(width - 1, 1)
        yn = ys / max(height - 1, 1)
        q = (xn - 0.3) ** 2 + 0.5 * (yn - 0.7) ** 2 + 0.25 * xn * yn
        q = np.broadcast_to(q, (height, width))
        span = float(q.max() - q.min())
        if span == 0.0:
            bias = np.full((height, width), lo)
        else:
            bias = lo + (hi - lo) * (q - q.min()) / span
    else:
        raise InvalidArgumentError(f"unknown bias kind {kind!r}")
    if bias.min() <= 0:
        raise InvalidArgumentError(f"bias kind {kind!r} with {params} is not positive")
    return bias


def _paint(labels: np.ndarray, shape: Shape) -> None:
    kind, params, cls = shape
    h, w = labels.shape
    xs = np.arange(w, dtype=np.float64)[None, :]
    ys = np.arange(h, dtype=np.float64)[:, None]
    if kind == "disk":
        cx, cy, r = params
        inside = (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
    elif kind == "ring":
        cx, cy, r_in, r_out = params
        d2 = (xs - cx) ** 2 + (ys - cy) ** 2
        inside = (d2 >= r_in * r_in) & (d2 <= r_out * r_out)
    elif kind == "rect":
        x0, y0, x1, y1 = params
        inside = (xs >= x0) & (xs <= x1) & (ys >= y0) & (ys <= y1)
    elif kind == "cross":
        cx, cy, arm, thick = params
        horiz = (np.abs(ys - cy) <= thick / 2) & (np.abs(xs - cx) <= arm)
        vert = (np.abs(xs - cx) <= thick / 2) & (np.abs(ys - cy) <= arm)
        inside = horiz | vert
    else:
        raise InvalidArgumentError(f"unknown shape kind {kind!r}")
    labels[np.broadcast_to(inside, labels.shape)] = cls


def gen_phantom(spec: PhantomSpec) -> Phantom:
    """Generate image = bias * signal + noise with its ground truth."""
    n = len(spec.class_levels)
    labels = np.zeros((spec.height, spec.width), dtype=np.int64)
    for shape in spec.shapes:
        kind, params, cls = shape
        if not 0 <= cls < n:
            raise InvalidArgumentError(
                f"shape class {cls} outside [0, {n - 1}]"
            )
        _paint(labels, (kind, tuple(float(p) for p in params), int(cls)))
    present = np.bincount(labels.ravel(), minlength=n)
    if (present == 0).any():
        missing = int(np.flatnonzero(present == 0)[0])
        raise InvalidArgumentError(f"class {missing} has no pixels")
    signal = np.asarray(spec.class_levels, dtype=np.float64)[labels]
    bias = gen_bias(spec.bias_kind, spec.bias_params, spec.width, spec.height)
    rng = np.random.default_rng(spec.seed)
    noise = spec.noise_sigma * rng.standard_normal(labels.shape)
    return Phantom(
        image=bias * signal + noise,
        truth_labels=labels,
        truth_bias=bias,
        truth_signal=signal,
    )


def jaccard(region_a: np.ndarray, region_b: np.ndarray) -> float:
    """|A intersect B| / |A union B|; two empty regions count as identical."""
    a = np.asarray(region_a, dtype=bool)
    b = np.asarray(region_b, dtype=bool)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"region shapes differ: {a.shape} vs {b.shape}")
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(a & b)) / union


def bias_similarity(est: np.ndarray, truth: np.ndarray) -> tuple[float, float]:
    """(Pearson correlation, gauged RMSE) between bias fields.

    The RMSE is taken after dividing each field by its mean, which removes
    the global bias/constant scale ambiguity.
    """
    est = np.asarray(est, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if est.shape != truth.shape:
        raise InvalidArgumentError(f"field shapes differ: {est.shape} vs {truth.shape}")
    if truth.min() == truth.max():
        raise InvalidArgumentError("truth bias is constant")
    if est.min() == est.max():
        raise InvalidArgumentError("estimated bias is constant; correlation undefined")
    pearson = float(np.corrcoef(est.ravel(), truth.ravel())[0, 1])
    gauged = est / est.mean() - truth / truth.mean()
    return pearson, float(math.sqrt(np.mean(gauged * gauged)))


def _fmt(x: float) -> str:
    return format(float(x), "g")


def write_phantom(phantom: Phantom, spec: PhantomSpec, prefix: str | Path) -> list[Path]:
    """Emit <prefix>.pgm, _mask.pgm, _bias.f64, _signal.f64 and _spec.txt."""
    prefix = Path(prefix)
    n = len(spec.class_levels)
    step = 255.0 / (n - 1) if n > 1 else 0.0
    shapes_txt = ";".join(
        f"{kind}:{','.join(_fmt(p) for p in params)}@{cls}"
        for kind, params, cls in spec.shapes
    )
    sidecar = "".join(
        f"{key}={value}\n"
        for key, value in [
            ("width", spec.width),
            ("height", spec.height),
            ("shapes", shapes_txt),
            ("class_levels", ",".join(_fmt(v) for v in spec.class_levels)),
            ("bias", f"{spec.bias_kind}:{','.join(_fmt(p) for p in spec.bias_params)}"),
            ("noise_sigma", _fmt(spec.noise_sigma)),
            ("seed", spec.seed),
            ("rng", RNG_ID),
        ]
    )
    outputs = [
        (prefix.with_name(prefix.name + ".pgm"), write_pgm(phantom.image, clamp=True)),
        (
            prefix.with_name(prefix.name + "_mask.pgm"),
            write_pgm(phantom.truth_labels * step, clamp=False),
        ),
        (
            prefix.with_name(prefix.name + "_bias.f64"),
            write_field_dump(phantom.truth_bias),
        ),
        (
            prefix.with_name(prefix.name + "_signal.f64"),
            write_field_dump(phantom.truth_signal),
        ),
        (
            prefix.with_name(prefix.name + "_spec.txt"),
            sidecar.encode("ascii"),
        ),
    ]
    paths = []
    for path, data in outputs:
        path.write_bytes(data)
        paths.append(path)
    return paths
