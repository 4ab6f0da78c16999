"""Tendon retraction schedules and their mapping onto rod rest curvature.

Each tentacle retracts its tendon at a constant rate after a random delay.
The folded curvature at a retraction ``gamma`` comes from the origami model
and is cached per design on a uniform ``gamma`` grid. Rods keep their rest
length, so a folded profile is rescaled to the same total turning on the
longer rod, and the gripper bases are spread apart by ``1 / (1 - gamma)`` to
keep the arrangement proportional to the shortened tentacles.
"""

from dataclasses import dataclass, field

import numpy as np

from .origami import UnreachableRetraction, build_layout, max_retraction, reconstruct, smooth_resample, solve_fold, tendon_curvature
from .rod import clamp_base
from .seeding import stream


@dataclass(frozen=True)
class ActuationSchedule:
    """Open-loop retraction schedule shared by the tentacles of one trial.

    ``rate`` and ``rate_perturbation`` are fractions of the tendon length per
    second; each tentacle draws a delay on ``[0, max_delay]`` and a rate
    offset on ``[-rate_perturbation, rate_perturbation]`` from its own stream.
    A zero ``rate`` means no actuation at all (the perturbation is ignored).
    """

    rate: float = 0.03
    gamma_final: float = 0.3
    max_delay: float = 0.5
    rate_perturbation: float = 0.001875
    seed: int = 0

    def __post_init__(self):
        if self.rate < 0 or self.max_delay < 0 or self.rate_perturbation < 0:
            raise ValueError("rate, max_delay and rate_perturbation must be >= 0")
        if not 0.0 <= self.gamma_final < 1.0:
            raise ValueError("gamma_final must lie in [0, 1)")
        if self.rate > 0 and self.rate_perturbation >= self.rate:
            raise ValueError("rate_perturbation must be smaller than rate")

    def draw(self, tentacle):
        """(delay, effective rate) of one tentacle."""
        if self.rate == 0:
            return 0.0, 0.0
        rng = stream(self.seed, tentacle)
        delay = rng.uniform(0.0, self.max_delay)
        offset = rng.uniform(-self.rate_perturbation, self.rate_perturbation)
        return float(delay), float(self.rate + offset)

    def resolve(self, n_tentacles):
        return ResolvedSchedule.from_schedule(self, n_tentacles)


@dataclass(frozen=True)
class ResolvedSchedule:
    """Per-tentacle delays and rates drawn once from an :class:`ActuationSchedule`."""

    delays: np.ndarray
    rates: np.ndarray
    gamma_final: float

    @classmethod
    def from_schedule(cls, schedule, n_tentacles):
        draws = np.array([schedule.draw(i) for i in range(n_tentacles)]).reshape(n_tentacles, 2)
        return cls(draws[:, 0].copy(), draws[:, 1].copy(), schedule.gamma_final)

    def gammas(self, t):
        return np.clip(self.rates * (t - self.delays), 0.0, self.gamma_final)

    def completion_time(self):
        """Time at which the slowest tentacle reaches ``gamma_final``."""
        active = self.rates > 0
        if not active.any():
            return 0.0
        return float(np.max(self.delays[active] + self.gamma_final / self.rates[active]))


def gamma_of_t(schedule, tentacle_index, t):
    """Retraction of one tentacle at time ``t``."""
    delay, rate = schedule.draw(tentacle_index)
    return float(np.clip(rate * (t - delay), 0.0, schedule.gamma_final))


@dataclass
class CurvatureTable:
    """Rod rest-curvature profiles of one design on a uniform retraction grid."""

    gammas: np.ndarray  # (levels,)
    profiles: np.ndarray  # (levels, n_elements - 1, 3)
    n_elements: int
    rod_length: float
    sigma: float
    design: object = field(default=None, repr=False)

    def at(self, gamma):
        """Linear interpolation in ``gamma``, clamped to the grid."""
        g = self.gammas
        x = float(np.clip(gamma, g[0], g[-1]))
        j = int(np.clip(np.searchsorted(g, x, side="right") - 1, 0, len(g) - 2))
        w = (x - g[j]) / (g[j + 1] - g[j])
        return (1.0 - w) * self.profiles[j] + w * self.profiles[j + 1]

    def at_many(self, gammas):
        return np.stack([self.at(v) for v in np.atleast_1d(gammas)])


def rod_profile(design, gamma, n_elements=100, rod_length=None, sigma=2.0, layout=None):
    """Rest curvature for a constant-length rod that matches the folded tendon at ``gamma``.

    The piecewise tendon curvature is smoothed, resampled onto the rod's
    interior nodes and scaled by (folded tendon length between joint cells) /
    (rod length between interior nodes), which keeps the turning angle of
    the folded ribbon.
    """
    layout = build_layout(design) if layout is None else layout
    rod_length = design.length if rod_length is None else rod_length
    if gamma == 0:
        return np.zeros((n_elements - 1, 3))
    shape = reconstruct(layout, solve_fold(layout, gamma))
    kappa = tendon_curvature(shape)
    D = shape.voronoi_lengths
    profile = smooth_resample(kappa, n_elements, sigma=sigma, lengths=D)
    return profile * (np.sum(D) / (rod_length * (n_elements - 1) / n_elements))


def build_table(design, gamma_final=0.3, levels=64, n_elements=100, rod_length=None, sigma=2.0):
    """Cache :func:`rod_profile` on ``levels`` retractions from 0 to ``gamma_final``."""
    if levels < 2:
        raise ValueError("a curvature table needs at least two levels")
    layout = build_layout(design)
    gmax = max_retraction(layout)
    if gamma_final >= gmax:
        raise UnreachableRetraction(gamma_final, gmax)
    rod_length = design.length if rod_length is None else rod_length
    gammas = np.linspace(0.0, gamma_final, levels)
    profiles = np.stack([rod_profile(design, g, n_elements, rod_length, sigma, layout) for g in gammas])
    return CurvatureTable(gammas, profiles, n_elements, rod_length, sigma, design)


def apply_actuation(system, resolved, tables, t):
    """Set each rod's rest curvature from its table at its own retraction; returns the gammas."""
    gam = resolved.gammas(t)
    kappa0 = system.rods.kappa0
    for i, table in enumerate(tables):
        kappa0[i] = table.at(gam[i])
    return gam


@dataclass
class GripperBase:
    """Base poses of the gripper: vertices of a regular polygon around ``center``.

    ``frames`` are the clamped element frames (tilt and surface normal), which
    the remap never changes.
    """

    center: np.ndarray
    radius: float
    angles: np.ndarray
    frames: np.ndarray

    @property
    def n(self):
        return len(self.angles)

    def positions(self, scale=1.0):
        scale = np.broadcast_to(np.asarray(scale, dtype=float), (self.n,))
        ring = np.stack([np.cos(self.angles), np.sin(self.angles), np.zeros(self.n)], axis=-1)
        return np.asarray(self.center) + (self.radius * scale)[:, None] * ring


def base_scale(gammas, per_tentacle=False):
    """Radial scale ``1 / (1 - gamma)`` from the mean (or each) retraction."""
    gammas = np.asarray(gammas, dtype=float)
    g = gammas if per_tentacle else np.full_like(gammas, gammas.mean())
    return 1.0 / (1.0 - g)


def base_remap(system, base, gammas, per_tentacle=False):
    """Move the clamped bases radially so the spacing follows the shortened tentacles."""
    pos = base.positions(base_scale(gammas, per_tentacle))
    clamp_base(system, np.arange(base.n), pos, base.frames)
    return pos


class ActuationDriver:
    """Vectorised :func:`apply_actuation` for tables sharing one retraction grid."""

    def __init__(self, resolved, tables):
        grids = [t.gammas for t in tables]
        if any(g.shape != grids[0].shape or np.any(g != grids[0]) for g in grids):
            raise ValueError("all tables must share the same retraction grid")
        self.resolved = resolved
        self.grid = grids[0]
        self.profiles = np.stack([t.profiles for t in tables])  # (R, levels, m, 3)
        self._rows = np.arange(len(tables))

    def profiles_at(self, gammas):
        g = self.grid
        x = np.clip(gammas, g[0], g[-1])
        j = np.clip(np.searchsorted(g, x, side="right") - 1, 0, len(g) - 2)
        w = ((x - g[j]) / (g[j + 1] - g[j]))[:, None, None]
        P = self.profiles
        return (1.0 - w) * P[self._rows, j] + w * P[self._rows, j + 1]

    def apply(self, system, t):
        gam = self.resolved.gammas(t)
        system.rods.kappa0[...] = self.profiles_at(gam)
        return gam
