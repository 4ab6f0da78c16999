"""Run one entanglement trial and record its metrics."""

import json
import logging
import os
import time as wallclock
from dataclasses import dataclass, field, replace

import numpy as np

from ..actuation import ActuationDriver, base_remap
from ..rod import StabilityError, kinetic_energy, momentum, step
from ..rotations import matrix_from_quaternion
from ..topology import DirectedCurve, LinkReport, link_frame
from .config import echo_lines, parse_scene, scene_to_ini
from .scene import build_scene
from .trajectory import TrajectoryWriter, read_trajectory

log = logging.getLogger(__name__)


def node_normals(frames):
    """Per-node unit normals from element ``d1`` directors, shape (R, n + 1, 3)."""
    d1 = np.asarray(frames)[..., 0, :]
    out = np.empty(d1.shape[:-2] + (d1.shape[-2] + 1, 3))
    out[..., 0, :] = d1[..., 0, :]
    out[..., -1, :] = d1[..., -1, :]
    out[..., 1:-1, :] = d1[..., 1:, :] + d1[..., :-1, :]
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def node_radii(radius):
    r = np.asarray(radius)
    out = np.empty(r.shape[:-1] + (r.shape[-1] + 1,))
    out[..., 0] = r[..., 0]
    out[..., -1] = r[..., -1]
    out[..., 1:-1] = 0.5 * (r[..., 1:] + r[..., :-1])
    return out


def links_of(positions, frames, radius, config):
    """Link quantities of one configuration of all rods."""
    normals = node_normals(frames)
    offsets = config.self_link_offset * node_radii(radius)
    curves = [DirectedCurve(positions[i], normals[i]) for i in range(len(positions))]
    obj = config.object
    return link_frame(curves, list(offsets), obj.axis, obj.center, config.extension_factor)


def metric_columns(n):
    cols = ["time", "gamma_mean"]
    cols += [f"self_{i}" for i in range(n)]
    cols += [f"mutual_{i}_{j}" for i in range(n) for j in range(i + 1, n)]
    cols += [f"object_{i}" for i in range(n)]
    cols += ["mutual_avg", "object_avg", "performance"]
    cols += ["contact_pairs", "max_penetration", "max_cylinder_penetration", "contact_impulse"]
    cols += ["cylinder_reaction", "net_pair_force", "kinetic_energy", "momentum"]
    return cols


def _metric_row(t, gam, frame, stats, rods):
    n = len(frame.self_link)
    iu = np.triu_indices(n, k=1)
    return np.concatenate(
        [
            [t, float(np.mean(gam))],
            frame.self_link,
            frame.mutual[iu],
            frame.object_link,
            [frame.mutual_avg, frame.object_avg, frame.performance],
            [
                stats.pairs,
                stats.max_penetration,
                stats.max_cylinder_penetration,
                stats.impulse,
                float(np.linalg.norm(stats.cylinder_reaction)),
                stats.net_pair_force,
                kinetic_energy(rods),
                float(np.linalg.norm(momentum(rods))),
            ],
        ]
    )


def format_csv(columns, rows, header_lines=()):
    lines = list(header_lines) + [",".join(columns)]
    for row in rows:
        lines.append(",".join(format(float(v), ".12e") for v in row))
    return "\n".join(lines) + "\n"


def read_csv(path_or_text):
    """Parse a metrics CSV back into ``(header_lines, columns, rows)``; ``#`` lines are the header."""
    text = path_or_text
    if "\n" not in text:
        with open(text) as fh:
            text = fh.read()
    lines = text.splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if ln and not ln.startswith("#")]
    columns = body[0].split(",")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in body[1:]]).reshape(-1, len(columns))
    return header, columns, rows


@dataclass
class TrialResult:
    config: object
    report: LinkReport
    columns: list
    rows: np.ndarray
    csv_text: str
    wall_time: float
    delays: np.ndarray
    rates: np.ndarray
    max_penetration: float
    max_cylinder_penetration: float
    metrics_path: str = None
    trajectory_path: str = None
    failed: str = None
    extra: dict = field(default_factory=dict)

    @property
    def performance(self):
        return self.report.performance

    def column(self, name):
        return self.rows[:, self.columns.index(name)]


def trial_header(config, resolved):
    lines = echo_lines(config)
    lines += [f"# draw.delay_{i} = {d!r}" for i, d in enumerate(resolved.delays)]
    lines += [f"# draw.rate_{i} = {r!r}" for i, r in enumerate(resolved.rates)]
    return lines


def run_trial(config, out_dir=None, write_trajectory=True, progress=None):
    """Step a scene for ``duration``; metrics are recorded every ``decimation`` seconds.

    With ``out_dir`` the metrics CSV (``metrics.csv``), the trajectory
    (``trajectory.bin``) and a small ``run.json`` (wall time, failure) are
    written there. A :class:`StabilityError` is re-raised after the partial
    metrics are saved.
    """
    t0 = wallclock.perf_counter()
    scene = build_scene(config)
    system = scene.system
    rods = system.rods
    N = rods.n_rods
    resolved = replace(config.schedule, seed=config.seed).resolve(N)
    driver = ActuationDriver(resolved, scene.tables)
    remap = config.base_remap != "off"
    per_tentacle = config.base_remap == "per_tentacle"

    header = trial_header(config, resolved)
    columns = metric_columns(N)
    rows, frames, times = [], [], []
    writer = None
    metrics_path = traj_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        metrics_path = os.path.join(out_dir, "metrics.csv")
        if write_trajectory:
            traj_path = os.path.join(out_dir, "trajectory.bin")
            meta = dict(
                dt_output=config.decimation_steps * config.dt,
                radius=rods.radius.tolist(),
                scene=scene_to_ini(config),
            )
            writer = TrajectoryWriter(traj_path, N, rods.n_elements, meta)

    def record(gam):
        frame = links_of(rods.positions, rods.frames, rods.radius, config)
        stats = scene.contact.peak
        rows.append(_metric_row(system.time, gam, frame, stats, rods))
        frames.append(frame)
        times.append(system.time)
        scene.contact.reset_peaks()
        if writer is not None:
            writer.write(system.time, rods.positions, rods.frames)

    dt = config.dt
    gam = driver.apply(system, 0.0)
    if remap:
        base_remap(system, scene.base, gam, per_tentacle)
    scene.contact.forces(rods)
    record(gam)
    failed = None
    every = config.decimation_steps
    n_steps = config.n_steps
    try:
        for k in range(n_steps):
            gam = driver.apply(system, system.time)
            if remap:
                base_remap(system, scene.base, gam, per_tentacle)
            step(system, dt, scene.external)
            if (k + 1) % every == 0 or k + 1 == n_steps:
                record(gam)
                if progress is not None:
                    progress(system.time, rows[-1])
    except StabilityError as exc:
        failed = str(exc)
        log.error("%s", failed)
        raise
    finally:
        if writer is not None:
            writer.close()
        arr = np.array(rows).reshape(-1, len(columns))
        csv_text = format_csv(columns, arr, header)
        wall = wallclock.perf_counter() - t0
        if metrics_path is not None:
            with open(metrics_path, "w") as fh:
                fh.write(csv_text)
            with open(os.path.join(out_dir, "run.json"), "w") as fh:
                json.dump(dict(wall_time=wall, failed=failed, steps=n_steps, rebuilds=scene.contact.rebuilds), fh, indent=2)

    pen = arr[:, columns.index("max_penetration")]
    cpen = arr[:, columns.index("max_cylinder_penetration")]
    return TrialResult(
        config=config,
        report=LinkReport.from_frames(times, frames),
        columns=columns,
        rows=arr,
        csv_text=csv_text,
        wall_time=wall,
        delays=resolved.delays,
        rates=resolved.rates,
        max_penetration=float(pen.max()),
        max_cylinder_penetration=float(cpen.max()),
        metrics_path=metrics_path,
        trajectory_path=traj_path,
        failed=failed,
    )


def recompute_metrics(path, out_path=None):
    """Link quantities of every frame of a trajectory file; returns the CSV text."""
    header, times, positions, quats = read_trajectory(path)
    config = parse_scene(header["scene"])
    radius = np.array(header["radius"])
    N = header["n_rods"]
    cols = ["time"] + [f"self_{i}" for i in range(N)]
    cols += [f"mutual_{i}_{j}" for i in range(N) for j in range(i + 1, N)]
    cols += [f"object_{i}" for i in range(N)] + ["mutual_avg", "object_avg", "performance"]
    iu = np.triu_indices(N, k=1)
    rows = []
    for t, x, q in zip(times, positions, quats):
        f = links_of(x, matrix_from_quaternion(q), radius, config)
        rows.append(np.concatenate([[t], f.self_link, f.mutual[iu], f.object_link, [f.mutual_avg, f.object_avg, f.performance]]))
    text = format_csv(cols, rows, echo_lines(config))
    if out_path is not None:
        with open(out_path, "w") as fh:
            fh.write(text)
    return text
