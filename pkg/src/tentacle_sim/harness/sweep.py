"""Design-space sweeps: independent seeded trials per design cell."""

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ..origami import DesignError
from ..rod import StabilityError
from ..rotations import rotation_matrix
from ..seeding import derive_seed
from .config import ConfigError, echo_lines, sweep_to_ini
from .trial import run_trial

log = logging.getLogger(__name__)

CELL_COLUMNS = [
    "cell",
    "alpha_deg",
    "beta_deg",
    "taper_ratio",
    "spacing_ratio",
    "trials",
    "completed",
    "mean_performance",
    "std_performance",
    "mean_mutual",
    "mean_object",
    "max_penetration",
]
TRIAL_COLUMNS = [
    "cell",
    "trial",
    "seed",
    "failed",
    "performance",
    "mutual_avg",
    "object_avg",
    "max_penetration",
    "max_cylinder_penetration",
]


def _varied_object(obj, spec, trial):
    """Object pose for ``trial`` in ``object`` mode; the lists are cycled together."""
    offset = spec.object_offsets[trial % len(spec.object_offsets)]
    tilt = spec.object_tilts[trial % len(spec.object_tilts)]
    radius = spec.object_radii[trial % len(spec.object_radii)]
    axis = np.asarray(obj.axis, dtype=float)
    # pitch about the horizontal normal of the axis keeps the axis in its vertical plane
    pivot = np.cross(axis, [0.0, 0.0, 1.0])
    if np.linalg.norm(pivot) > 1e-12:
        axis = rotation_matrix(tilt * pivot / np.linalg.norm(pivot)) @ axis
    center = np.asarray(obj.center, dtype=float) + [0.0, 0.0, offset]
    return replace(obj, axis=tuple(float(a) for a in axis), center=tuple(float(c) for c in center), radius=float(radius))


def cell_config(spec, template, cell, trial):
    """Scene of trial ``trial`` of design cell ``cell``; the seed depends only on (sweep seed, cell, trial)."""
    params = spec.cells()[cell]
    config = replace(
        template,
        design=replace(template.design, **params),
        seed=derive_seed(spec.seed, cell, trial),
        gravity=template.gravity and spec.gravity,
    )
    if spec.mode == "object":
        config = replace(config, object=_varied_object(config.object, spec, trial))
    return config


@dataclass
class TrialOutcome:
    cell: int
    trial: int
    seed: int
    performance: float = math.nan
    mutual_avg: float = math.nan
    object_avg: float = math.nan
    max_penetration: float = math.nan
    max_cylinder_penetration: float = math.nan
    failed: str = None
    wall_time: float = 0.0


def _run_one(task):
    spec, template, cell, trial, out_dir = task
    config = cell_config(spec, template, cell, trial)
    outcome = TrialOutcome(cell, trial, config.seed)
    trial_dir = None if out_dir is None else os.path.join(out_dir, f"cell{cell:03d}_trial{trial:03d}")
    try:
        result = run_trial(config, trial_dir, write_trajectory=False)
    except (StabilityError, ConfigError, DesignError) as exc:
        outcome.failed = f"{type(exc).__name__}: {exc}"
        return outcome
    outcome.performance = result.performance
    outcome.mutual_avg = result.report.final.mutual_avg
    outcome.object_avg = result.report.final.object_avg
    outcome.max_penetration = result.max_penetration
    outcome.max_cylinder_penetration = result.max_cylinder_penetration
    outcome.wall_time = result.wall_time
    return outcome


@dataclass
class SweepResult:
    spec: object
    template: object
    outcomes: list
    cell_rows: list
    cell_csv: str
    trial_csv: str

    def cell_performance(self, **params):
        """Mean performance of the cell whose design parameters match ``params`` (radians for angles)."""
        for cell, p in enumerate(self.spec.cells()):
            if all(math.isclose(p[k], v, abs_tol=1e-12) for k, v in params.items()):
                return self.cell_rows[cell][CELL_COLUMNS.index("mean_performance")]
        raise KeyError(params)

    @property
    def failures(self):
        return [o for o in self.outcomes if o.failed]


def _summaries(spec, outcomes):
    rows = []
    for cell, p in enumerate(spec.cells()):
        mine = [o for o in outcomes if o.cell == cell]
        ok = [o for o in mine if not o.failed]
        perf = np.array([o.performance for o in ok])
        mean = float(perf.mean()) if len(ok) else math.nan
        std = float(perf.std()) if len(ok) else math.nan
        rows.append(
            [
                cell,
                math.degrees(p["crease_angle_alpha"]),
                math.degrees(p["crease_angle_beta"]),
                p["taper_ratio"],
                p["spacing_ratio"],
                len(mine),
                len(ok),
                mean,
                std,
                float(np.mean([o.mutual_avg for o in ok])) if ok else math.nan,
                float(np.mean([o.object_avg for o in ok])) if ok else math.nan,
                max((o.max_penetration for o in ok), default=math.nan),
            ]
        )
    return rows


def _value(v):
    return str(v) if isinstance(v, (int, np.integer)) else format(float(v), ".12e")


def _cell_csv(rows, header):
    lines = list(header) + [",".join(CELL_COLUMNS)]
    lines += [",".join(_value(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _trial_csv(outcomes, header):
    lines = list(header) + [",".join(TRIAL_COLUMNS)]
    for o in outcomes:
        vals = [o.performance, o.mutual_avg, o.object_avg, o.max_penetration, o.max_cylinder_penetration]
        failed = "" if not o.failed else '"' + o.failed.replace('"', "'") + '"'
        lines.append(",".join([str(o.cell), str(o.trial), str(o.seed), failed] + [format(v, ".12e") for v in vals]))
    return "\n".join(lines) + "\n"


def run_sweep(spec, template, out_dir=None, workers=1):
    """Run every (cell, trial); failed trials are recorded and skipped in the means.

    Writes ``cells.csv`` (mean and population standard deviation of the
    performance per cell), ``trials.csv`` and per-trial metrics under
    ``out_dir`` when given. Rows are ordered by cell, then trial, whatever
    the completion order of the workers.
    """
    spec.validate()
    template.validate()
    tasks = [(spec, template, c, t, out_dir) for c in range(len(spec.cells())) for t in range(spec.trials)]
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, tasks))
    else:
        outcomes = [_run_one(t) for t in tasks]
    outcomes.sort(key=lambda o: (o.cell, o.trial))
    for o in outcomes:
        if o.failed:
            log.warning("cell %d trial %d failed: %s", o.cell, o.trial, o.failed)
    header = ["# " + line for line in sweep_to_ini(spec).splitlines() if line] + echo_lines(template)
    rows = _summaries(spec, outcomes)
    cell_csv = _cell_csv(rows, header)
    trial_csv = _trial_csv(outcomes, header)
    if out_dir is not None:
        with open(os.path.join(out_dir, "cells.csv"), "w") as fh:
            fh.write(cell_csv)
        with open(os.path.join(out_dir, "trials.csv"), "w") as fh:
            fh.write(trial_csv)
    return SweepResult(spec, template, outcomes, rows, cell_csv, trial_csv)
