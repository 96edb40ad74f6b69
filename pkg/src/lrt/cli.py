"""Command line front end: ``lrt rectify`` and ``lrt bench``."""
import argparse
import logging
import os
import sys

import numpy as np

from . import geometry as geo
from .bench import CSV_HEADER, make_suite, run_benchmark
from .outer import (OuterConfig, RectificationError, default_init_angles,
                    default_lambda, rectify)
from .pnm import PnmError, read_gray, to_byte_range, write_pgm
from .solvers import GOLDEN, DivergenceError, SolverConfig, get_solver

log = logging.getLogger("lrt")

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


def format_transform(tau):
    return "".join(f"{v:.11e}\n" for v in tau)


def parse_transform(text):
    vals = [float(line) for line in text.splitlines() if line.strip()]
    if len(vals) != 6:
        raise ValueError(f"expected 6 parameters, found {len(vals)}")
    return np.array(vals)


def parse_window(text, image_shape=None):
    try:
        x, y, w, h = (int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"window must be x,y,w,h integers, got {text!r}") from None
    if w < 2 or h < 2 or x < 0 or y < 0:
        raise UsageError(f"window {text} must have x,y >= 0 and w,h >= 2")
    if image_shape is not None:
        H, W = image_shape
        if x + w > W or y + h > H:
            raise UsageError(f"window {text} exceeds the {W}x{H} image")
    return geo.Window(x, y, w, h)


def _lambda_arg(text):
    if text == "auto":
        return None
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("lambda must be 'auto' or a number") from None
    if not val > 0:
        raise argparse.ArgumentTypeError("lambda must be positive")
    return val


def build_parser():
    p = argparse.ArgumentParser(prog="lrt", description="Low-rank texture rectification")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rectify", help="rectify a window of a PGM/PPM image")
    r.add_argument("--input", required=True)
    r.add_argument("--window", required=True, help="x,y,w,h")
    r.add_argument("--solver", default="sgs", choices=["direct", "sgs", "sgs-g"])
    r.add_argument("--lambda", dest="lam", type=_lambda_arg, default=None)
    r.add_argument("--xi", type=float, default=1.618)
    r.add_argument("--rho", type=float, default=1.8)
    r.add_argument("--tol", type=float, default=1e-3)
    r.add_argument("--max-iter", type=int, default=1000)
    r.add_argument("--max-outer", type=int, default=30)
    r.add_argument("--init-search", action="store_true")
    r.add_argument("--out", default=".")

    b = sub.add_parser("bench", help="run the synthetic solver comparison")
    b.add_argument("--suite", default="default", choices=["tiny", "default"])
    b.add_argument("--solvers", default="direct,sgs,sgs-g")
    b.add_argument("--seed", type=int, default=1)
    b.add_argument("--out", default=".")
    return p


def _outer_config(args, solver):
    inner = SolverConfig(xi=args.xi, rho=args.rho, tol=args.tol, max_iter=args.max_iter)
    if not 0 < args.xi < GOLDEN:
        raise UsageError(f"--xi must lie in (0, {GOLDEN:.6f}), got {args.xi}")
    if not 0 < args.rho < 2:
        raise UsageError(f"--rho must lie in (0, 2), got {args.rho}")
    if not args.tol > 0 or args.max_iter < 1 or args.max_outer < 1:
        raise UsageError("--tol must be positive; --max-iter and --max-outer at least 1")
    return OuterConfig(inner_solver=solver, inner=inner, max_outer=args.max_outer,
                       lam=args.lam,
                       init_angles=default_init_angles() if args.init_search else None)


def _write_scaled(path, img, scales, name):
    scaled, lo, hi = to_byte_range(img)
    write_pgm(path, scaled)
    scales.append(f"{name} {lo:.11e} {hi:.11e}")


def cmd_rectify(args):
    cfg = _outer_config(args, args.solver.replace("-", "_"))
    try:
        scene = read_gray(args.input)
    except (OSError, PnmError) as exc:
        raise UsageError(f"cannot read input image {args.input}: {exc}") from None
    window = parse_window(args.window, scene.shape)
    try:
        res = rectify(scene, window, cfg)
    except (RectificationError, DivergenceError, geo.OutOfBoundsError,
            geo.DegenerateInputError, geo.DegenerateJacobianError) as exc:
        raise UsageError(f"rectification failed: {exc}") from None

    os.makedirs(args.out, exist_ok=True)
    rectified, _ = geo.normalize(geo.warp(scene, res.tau_final, window))
    scales = ["# image min max (pixel = 255 * (value - min) / (max - min))"]
    _write_scaled(os.path.join(args.out, "rectified.pgm"), rectified, scales, "rectified")
    _write_scaled(os.path.join(args.out, "lowrank.pgm"), res.X_final, scales, "lowrank")
    _write_scaled(os.path.join(args.out, "sparse.pgm"), np.abs(res.E_final), scales, "sparse")
    with open(os.path.join(args.out, "scales.txt"), "w") as fh:
        fh.write("\n".join(scales) + "\n")
    with open(os.path.join(args.out, "transform.txt"), "w") as fh:
        fh.write(format_transform(res.tau_final))
    with open(os.path.join(args.out, "report.csv"), "w") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for r in res.per_round:
            fh.write(f"0,{r.round},{cfg.inner_solver},{r.iterations},{r.wall_time:.2e},"
                     f"{r.rank},{r.e_l1:.2e},{r.eta:.2e}\n")
    lam = cfg.lam if cfg.lam is not None else default_lambda(window)
    print(f"rounds={res.rounds} rotation={np.rad2deg(geo.rotation_angle(res.tau_final)):.4f}deg "
          f"rank={res.per_round[-1].rank} f={res.per_round[-1].objective:.6g} lambda={lam:.4g}")
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def cmd_bench(args):
    solvers = [s.strip().replace("-", "_") for s in args.solvers.split(",") if s.strip()]
    if not solvers:
        raise UsageError("--solvers needs at least one solver")
    for s in solvers:
        try:
            get_solver(s)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    report = run_benchmark(make_suite(args.suite, args.seed), solvers)
    try:
        os.makedirs(args.out, exist_ok=True)
        report.write_csv(os.path.join(args.out, "bench.csv"))
    except OSError as exc:
        raise UsageError(f"cannot write report: {exc}") from None
    for line in report.summary():
        print(line)
    return EXIT_OK if report.all_converged() else EXIT_NONCONVERGED


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad usage; usage errors are 1 here
        return EXIT_INPUT if exc.code else EXIT_OK
    handler = cmd_rectify if args.command == "rectify" else cmd_bench
    try:
        return handler(args)
    except UsageError as exc:
        print(f"lrt: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
