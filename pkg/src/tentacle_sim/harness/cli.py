"""Command-line entry point: ``tentacle-sim {fold,simulate,sweep,metrics,validate}``.

Exit codes: 0 on success, 2 for invalid input, 3 when a simulation aborts
numerically.
"""

import argparse
import configparser
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from ..actuation import rod_profile
from ..origami import DesignError, UnreachableRetraction, export_cut_pattern, fold_design, read_design, write_curvature_csv
from ..rod import StabilityError
from .config import ConfigError, apply_preset, load_scene, load_sweep, scene_to_ini
from .sweep import run_sweep
from .trial import metric_columns, recompute_metrics, run_trial

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("tentacle_sim")


def _common(p):
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--preset", choices=("desk", "paper"), help="resolution preset; overrides the file's duration, dt and resolution")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--decimation", type=float, metavar="MS", help="metric recording interval in milliseconds")
    p.add_argument("--zero-g", action="store_true", help="switch gravity off")
    p.add_argument("-v", "--verbose", action="store_true", help="progress and info logging")


def _overlay(config, args):
    if args.preset:
        config = apply_preset(config, args.preset)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.decimation is not None:
        config = replace(config, decimation=args.decimation * 1e-3)
    if args.zero_g:
        config = replace(config, gravity=False)
    return config.validate()


def cmd_fold(args):
    design = read_design(args.design)
    report = fold_design(design, args.gamma)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    shape = report.shape
    s = np.cumsum(shape.segment_lengths)[:-1]
    write_curvature_csv(os.path.join(out, "curvature.csv"), s, report.kappa)
    smooth = rod_profile(design, args.gamma, args.elements, design.length, args.sigma)
    h = design.length / args.elements
    write_curvature_csv(os.path.join(out, "curvature_rod.csv"), h * np.arange(1, args.elements), smooth)
    np.savetxt(
        os.path.join(out, "holes.csv"), shape.hole_positions, delimiter=",", header="x,y,z", comments="", fmt="%.12e"
    )
    sol = report.solution
    summary = dict(
        gamma=sol.retraction,
        scale_constant=sol.scale_constant,
        fold_angles_deg=np.degrees(sol.fold_angles).tolist(),
        saturated=sol.saturated.tolist(),
        tip=shape.hole_positions[-1].tolist(),
    )
    with open(os.path.join(out, "fold.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    if args.cut_pattern:
        with open(os.path.join(out, "cut_pattern.svg"), "w") as fh:
            fh.write(export_cut_pattern(design))
    print(f"k = {sol.scale_constant:.12g}  creases = {len(sol.fold_angles)}  saturated = {int(sol.saturated.sum())}")
    return EXIT_OK


def cmd_simulate(args):
    config = _overlay(load_scene(args.scene), args)
    out = args.out or "run"
    col = metric_columns(config.n_tentacles).index("performance")

    def progress(t, row):
        if args.verbose:
            print(f"t = {t:.3f} s  performance = {row[col]:.4f}", flush=True)

    result = run_trial(config, out, write_trajectory=not args.no_trajectory, progress=progress)
    rep = result.report
    print(
        f"performance = {rep.performance:.6f}  mutual = {rep.mutual_avg:.6f}  object = {rep.object_avg:.6f}  "
        f"max penetration = {result.max_penetration:.4f}  wall = {result.wall_time:.1f} s"
    )
    print(f"wrote {result.metrics_path}")
    return EXIT_OK


def cmd_sweep(args):
    spec, template = load_sweep(args.sweep)
    template = _overlay(template, argparse.Namespace(**dict(vars(args), seed=None, zero_g=False)))
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.zero_g:
        spec = replace(spec, gravity=False)
    out = args.out or "sweep"
    result = run_sweep(spec, template, out, workers=args.workers)
    sys.stdout.write(result.cell_csv)
    if result.failures:
        log.warning("%d of %d trials failed", len(result.failures), len(result.outcomes))
    return EXIT_OK


def cmd_metrics(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "metrics_recomputed.csv")
    try:
        recompute_metrics(args.trajectory, path)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"wrote {path}")
    return EXIT_OK


def _is_sweep(path):
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error:
        return False
    return parser.has_section("sweep")


def cmd_validate(args):
    if _is_sweep(args.file):
        spec, template = load_sweep(args.file)
        _overlay(template, args)
        print(f"{args.file}: valid sweep, {len(spec.cells())} cells x {spec.trials} trials")
    else:
        config = _overlay(load_scene(args.file), args)
        print(f"{args.file}: valid scene, {config.n_steps} steps")
        if args.echo:
            sys.stdout.write(scene_to_ini(config))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="tentacle-sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fold", help="solve one ribbon design and export its curvature")
    p.add_argument("design", help="file with a [design] section")
    p.add_argument("--gamma", type=float, default=0.3, help="tendon retraction (default 0.3)")
    p.add_argument("--elements", type=int, default=100, help="rod elements of the smoothed profile")
    p.add_argument("--sigma", type=float, default=2.0, help="smoothing width in segments")
    p.add_argument("--cut-pattern", action="store_true", help="also write cut_pattern.svg")
    _common(p)
    p.set_defaults(func=cmd_fold)

    p = sub.add_parser("simulate", help="run one trial from a scene file")
    p.add_argument("scene")
    p.add_argument("--no-trajectory", action="store_true", help="skip trajectory.bin")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a design grid from a sweep file")
    p.add_argument("sweep")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("metrics", help="recompute link quantities from a trajectory file")
    p.add_argument("trajectory")
    _common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("validate", help="check a scene or sweep file")
    p.add_argument("file")
    p.add_argument("--echo", action="store_true", help="print the resolved scene")
    _common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DesignError, UnreachableRetraction, configparser.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except StabilityError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
