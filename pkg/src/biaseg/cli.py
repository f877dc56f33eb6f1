"""Batch command line: ``segment``, ``synth`` and ``eval`` subcommands.

Exit codes: 0 success, 2 bad flags or parameter values, 3 file or format
errors, 4 solver degeneracy. Outputs are a pure function of inputs and
flags; no timestamps or other nondeterminism is ever written.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateBiasError,
    DegenerateClassError,
    DegenerateInputError,
    FormatError,
    InvalidArgumentError,
    RangeError,
    StabilityError,
)
from .field import (
    normalize_display,
    read_field_dump,
    read_pgm,
    write_field_dump,
    write_pgm,
)
from .pipeline import SegOutcome, SolverConfig, cv_segment, segment
from .synthlab import PhantomSpec, bias_similarity, gen_phantom, jaccard, write_phantom

__all__ = ["main"]


def _read_image(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        return read_pgm(fh.read())


def _read_dump(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        return read_field_dump(fh.read())


def _parse_kind_params(text: str, what: str) -> tuple[str, tuple[float, ...]]:
    kind, sep, rest = text.partition(":")
    if not sep or not kind:
        raise InvalidArgumentError(f"malformed {what} {text!r}, expected kind:p1,p2,...")
    try:
        params = tuple(float(t) for t in rest.split(","))
    except ValueError:
        raise InvalidArgumentError(f"malformed {what} parameters in {text!r}") from None
    return kind, params


def _parse_shape(text: str, default_class: int) -> tuple[str, tuple[float, ...], int]:
    body, sep, cls_txt = text.partition("@")
    kind, params = _parse_kind_params(body, "shape")
    cls = default_class
    if sep:
        try:
            cls = int(cls_txt)
        except ValueError:
            raise InvalidArgumentError(f"malformed shape class in {text!r}") from None
    return kind, params, cls


def _with_suffix_index(path: Path, index: int) -> Path:
    return path.with_name(f"{path.stem}_{index}{path.suffix}")


def cmd_segment(args: argparse.Namespace) -> int:
    image = _read_image(args.infile)
    init = tuple(args.init) if args.init else None
    cfg = SolverConfig(
        rho=args.rho,
        dt=args.dt,
        dt2=args.dt2,
        epsilon=args.eps,
        n_classes=args.phases,
        max_iter=args.max_iter,
        stop_tol=args.stop_tol,
        init=init,
    )
    outcome: SegOutcome
    if args.baseline:
        outcome = cv_segment(image, cfg)
    else:
        outcome = segment(image, cfg)

    if args.out_mask:
        step = 255.0 / (args.phases - 1)
        Path(args.out_mask).write_bytes(write_pgm(outcome.labels * step))
    if args.out_bias:
        Path(args.out_bias).write_bytes(write_field_dump(outcome.bias))
        display = Path(args.out_bias + ".pgm")
        display.write_bytes(write_pgm(normalize_display(outcome.bias)))
    if args.out_corrected:
        Path(args.out_corrected).write_bytes(write_pgm(outcome.corrected, clamp=True))
    if args.out_phi:
        if len(outcome.level_sets) == 1:
            Path(args.out_phi).write_bytes(write_field_dump(outcome.level_sets[0]))
        else:
            for i, phi in enumerate(outcome.level_sets, start=1):
                _with_suffix_index(Path(args.out_phi), i).write_bytes(
                    write_field_dump(phi)
                )
    if args.trace:
        lines = ["iter,energy"]
        lines += [f"{i},{e!r}" for i, e in enumerate(outcome.energy_trace, start=1)]
        Path(args.trace).write_text("\n".join(lines) + "\n", encoding="ascii")

    converged = "true" if outcome.converged else "false"
    final_energy = outcome.energy_trace[-1]
    print(f"iters={outcome.iterations} converged={converged} energy={final_energy:.6f}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        w_txt, h_txt = args.size.lower().split("x")
        width, height = int(w_txt), int(h_txt)
    except ValueError:
        raise InvalidArgumentError(f"malformed --size {args.size!r}, expected WxH") from None
    try:
        levels = tuple(float(t) for t in args.levels.split(","))
    except ValueError:
        raise InvalidArgumentError(f"malformed --levels {args.levels!r}") from None
    shapes = tuple(
        _parse_shape(text, default_class=i + 1) for i, text in enumerate(args.shape)
    )
    bias_kind, bias_params = _parse_kind_params(args.bias, "--bias")
    spec = PhantomSpec(
        width=width,
        height=height,
        shapes=shapes,
        class_levels=levels,
        bias_kind=bias_kind,
        bias_params=bias_params,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    phantom = gen_phantom(spec)
    write_phantom(phantom, spec, args.out_prefix)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    did_something = False
    if (args.pred is None) != (args.truth is None):
        raise InvalidArgumentError("--pred and --truth must be given together")
    if (args.bias_pred is None) != (args.bias_truth is None):
        raise InvalidArgumentError("--bias-pred and --bias-truth must be given together")
    if args.pred:
        pred = _read_image(args.pred)
        truth = _read_image(args.truth)
        if pred.shape != truth.shape:
            print(
                f"error: mask dimensions differ: {pred.shape} vs {truth.shape}",
                file=sys.stderr,
            )
            return 3
        values = np.union1d(np.unique(pred), np.unique(truth))
        if not 0 <= args.cls < len(values):
            raise InvalidArgumentError(
                f"--class {args.cls} out of range; masks hold {len(values)} value(s)"
            )
        selected = values[args.cls]
        js = jaccard(pred == selected, truth == selected)
        print(f"js={js:.6f}")
        did_something = True
    if args.bias_pred:
        est = _read_dump(args.bias_pred)
        truth_b = _read_dump(args.bias_truth)
        if est.shape != truth_b.shape:
            print(
                f"error: field dimensions differ: {est.shape} vs {truth_b.shape}",
                file=sys.stderr,
            )
            return 3
        try:
            pearson, rmse = bias_similarity(est, truth_b)
        except InvalidArgumentError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3
        print(f"pearson={pearson:.6f} rmse={rmse:.6f}")
        did_something = True
    if not did_something:
        raise InvalidArgumentError("nothing to evaluate: give --pred/--truth and/or --bias-pred/--bias-truth")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biaseg",
        description="Level-set segmentation with simultaneous bias field correction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment a PGM image")
    seg.add_argument("--in", dest="infile", required=True, help="input PGM (P2 or P5)")
    seg.add_argument("--phases", type=int, choices=(2, 4), default=2)
    seg.add_argument("--rho", type=float, default=6.0, help="window radius (default 6)")
    seg.add_argument("--dt", type=float, default=1.0, help="evolution step (default 1)")
    seg.add_argument(
        "--dt2", type=float, default=0.1, help="regularization strength (default 0.1)"
    )
    seg.add_argument("--eps", type=float, default=1.0, help="smoothing width (default 1)")
    seg.add_argument("--max-iter", type=int, default=500)
    seg.add_argument("--stop-tol", type=float, default=1e-4)
    seg.add_argument(
        "--init",
        action="append",
        help="contour spec circle:cx,cy,r | rect:x0,y0,x1,y1 | checker:cell | "
        "mask:path; default centered circle; give twice for 4-phase",
    )
    seg.add_argument(
        "--baseline",
        action="store_true",
        help="run the global two-constant baseline instead",
    )
    seg.add_argument("--out-mask", help="label map PGM (labels scaled to 0..255)")
    seg.add_argument(
        "--out-bias", help="estimated bias F64FIELD; also writes <path>.pgm display"
    )
    seg.add_argument("--out-corrected", help="bias-corrected image PGM (clamped)")
    seg.add_argument("--out-phi", help="final level set F64FIELD (_1/_2 for 4-phase)")
    seg.add_argument("--trace", help="energy trace CSV")
    seg.set_defaults(func=cmd_segment)

    syn = sub.add_parser("synth", help="generate a ground-truth phantom")
    syn.add_argument("--size", required=True, help="WxH, e.g. 128x128")
    syn.add_argument(
        "--shape",
        action="append",
        required=True,
        help="disk:cx,cy,r | ring:cx,cy,rin,rout | rect:x0,y0,x1,y1 | "
        "cross:cx,cy,arm,thick, optionally @class (default: position)",
    )
    syn.add_argument("--levels", required=True, help="per-class intensities, comma separated")
    syn.add_argument(
        "--bias",
        default="ramp:1,1",
        help="ramp:lo,hi | gauss_bump:a,x0,y0,s | poly2:lo,hi",
    )
    syn.add_argument("--noise-sigma", type=float, default=0.0)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--out-prefix", required=True)
    syn.set_defaults(func=cmd_synth)

    ev = sub.add_parser("eval", help="score masks and bias fields")
    ev.add_argument("--pred", help="predicted mask PGM")
    ev.add_argument("--truth", help="ground-truth mask PGM")
    ev.add_argument(
        "--class",
        dest="cls",
        type=int,
        default=0,
        help="region to score: k-th darkest mask value (default 0)",
    )
    ev.add_argument("--bias-pred", help="estimated bias F64FIELD")
    ev.add_argument("--bias-truth", help="ground-truth bias F64FIELD")
    ev.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InvalidArgumentError, StabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, RangeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DegenerateInputError, DegenerateClassError, DegenerateBiasError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
