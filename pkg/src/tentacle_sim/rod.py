"""Discrete Cosserat rods with actuated rest curvature.

Rods are discretised into ``n + 1`` nodes and ``n`` cylindrical elements.
Node quantities (positions, velocities, forces) live in the lab frame;
element quantities (director frames, angular velocities, couples) live in
the local frame of each element. Curvature lives on the ``n - 1`` interior
nodes ("Voronoi" points) and uses the same frame curvature as the origami
model.

All rods of one :class:`RodState` share the element count and are stored as
stacked arrays with a leading rod axis so that one step is a handful of
vectorised numpy operations regardless of how many tentacles are simulated.
"""

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .rotations import cross, frame_curvature, frame_from_tangent, orthonormalize, rotation_matrix

SHEAR_CORRECTION = 4.0 / 3.0
MAX_SPEED = 1e3


class StabilityError(RuntimeError):
    """Node speeds exceeded the divergence threshold."""

    def __init__(self, time, max_speed):
        super().__init__(f"integration diverged at t = {time:.6g} s (max node speed {max_speed:.3g} m/s)")
        self.time = time
        self.max_speed = max_speed


@dataclass(frozen=True)
class RodGeometry:
    """Geometry and surrogate material of one tapered circular rod.

    ``tip_radius`` defaults to ``base_radius`` (no taper) and ``shear_modulus``
    to ``E / 3`` (Poisson ratio 0.5).
    """

    length: float = 0.75
    n_elements: int = 100
    base_radius: float = 0.02
    tip_radius: float = None
    density: float = 100.0
    youngs_modulus: float = 1.0e5
    shear_modulus: float = None
    damping: float = 5.0

    def __post_init__(self):
        if self.tip_radius is None:
            object.__setattr__(self, "tip_radius", self.base_radius)
        if self.shear_modulus is None:
            object.__setattr__(self, "shear_modulus", self.youngs_modulus / 3.0)
        if not (self.length > 0 and self.n_elements >= 2):
            raise ValueError("rod needs positive length and at least two elements")
        if not self.base_radius >= self.tip_radius > 0:
            raise ValueError(f"need base_radius >= tip_radius > 0 (got {self.base_radius}, {self.tip_radius})")
        if self.damping < 0:
            raise ValueError("damping must be >= 0")

    @property
    def element_length(self):
        return self.length / self.n_elements

    def element_radii(self):
        s = (np.arange(self.n_elements) + 0.5) / self.n_elements
        return self.base_radius + (self.tip_radius - self.base_radius) * s

    def stable_dt(self):
        """Explicit stability estimate ``h sqrt(rho / E) / pi``."""
        return self.element_length * math.sqrt(self.density / self.youngs_modulus) / math.pi

    def mass(self):
        r = self.element_radii()
        return float(np.sum(self.density * math.pi * r**2 * self.element_length))


@dataclass
class RodState:
    """Stacked state of ``R`` rods with ``n`` elements each."""

    positions: np.ndarray  # (R, n+1, 3)
    velocities: np.ndarray  # (R, n+1, 3)
    frames: np.ndarray  # (R, n, 3, 3) rows d1, d2, d3
    omega: np.ndarray  # (R, n, 3) local
    kappa0: np.ndarray  # (R, n-1, 3)
    rest_lengths: np.ndarray  # (R, n)
    radius: np.ndarray  # (R, n)
    node_mass: np.ndarray  # (R, n+1)
    inertia: np.ndarray  # (R, n, 3) diagonal mass moment of inertia
    bend_stiffness: np.ndarray  # (R, n-1, 3) on interior nodes
    shear_stiffness: np.ndarray  # (R, n, 3)
    damping: np.ndarray  # (R,)
    density: np.ndarray  # (R,)
    geometries: tuple = field(default=())

    @property
    def n_rods(self):
        return self.positions.shape[0]

    @property
    def n_elements(self):
        return self.frames.shape[1]

    @property
    def rest_voronoi(self):
        return 0.5 * (self.rest_lengths[:, 1:] + self.rest_lengths[:, :-1])

    def copy(self):
        return replace(self, **{f.name: np.array(getattr(self, f.name)) for f in fields(self) if f.name != "geometries"})

    def curvature(self):
        return frame_curvature(self.frames, self.rest_voronoi)

    def element_centers(self):
        return 0.5 * (self.positions[:, 1:] + self.positions[:, :-1])

    def rod(self, i):
        """Copy of rod ``i`` as a single-rod state."""
        sl = slice(i, i + 1)
        out = {f.name: np.array(getattr(self, f.name)[sl]) for f in fields(self) if f.name != "geometries"}
        return RodState(**out, geometries=self.geometries[sl])

    @classmethod
    def stack(cls, states):
        states = list(states)
        out = {
            f.name: np.concatenate([getattr(s, f.name) for s in states])
            for f in fields(cls)
            if f.name != "geometries"
        }
        return cls(**out, geometries=tuple(g for s in states for g in s.geometries))


@dataclass
class Cylinder:
    """Fixed rigid cylinder given by its axis segment and radius."""

    center: np.ndarray
    axis: np.ndarray
    radius: float
    length: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        axis = np.asarray(self.axis, dtype=float)
        self.axis = axis / np.linalg.norm(axis)

    @property
    def endpoints(self):
        h = 0.5 * self.length * self.axis
        return self.center - h, self.center + h


@dataclass
class SystemState:
    rods: RodState
    cylinders: list = field(default_factory=list)
    time: float = 0.0
    clamp_mask: np.ndarray = None
    clamp_position: np.ndarray = None
    clamp_frame: np.ndarray = None

    def __post_init__(self):
        R = self.rods.n_rods
        if self.clamp_mask is None:
            self.clamp_mask = np.zeros(R, dtype=bool)
            self.clamp_position = np.zeros((R, 3))
            self.clamp_frame = np.tile(np.eye(3), (R, 1, 1))

    def copy(self):
        return SystemState(
            self.rods.copy(),
            list(self.cylinders),
            self.time,
            self.clamp_mask.copy(),
            self.clamp_position.copy(),
            self.clamp_frame.copy(),
        )


def init_rod(geometry, base_position=(0.0, 0.0, 0.0), direction=(0.0, 0.0, -1.0), normal=None):
    """Straight, resting rod starting at ``base_position`` along ``direction``.

    ``normal`` is the preferred ``d1`` director; it is projected normal to the
    rod. When omitted an arbitrary perpendicular is chosen.
    """
    g = geometry
    n = g.n_elements
    t = np.asarray(direction, dtype=float)
    t = t / np.linalg.norm(t)
    if normal is None:
        trial = np.array([1.0, 0.0, 0.0]) if abs(t[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        normal = trial
    Q = frame_from_tangent(t, normal)
    h = g.element_length
    s = np.arange(n + 1) * h
    x = np.asarray(base_position, dtype=float) + s[:, None] * t

    r = g.element_radii()
    A = math.pi * r**2
    I = math.pi * r**4 / 4.0
    lengths = np.full(n, h)
    m_el = g.density * A * lengths
    m_node = np.zeros(n + 1)
    m_node[:-1] += 0.5 * m_el
    m_node[1:] += 0.5 * m_el
    J = g.density * lengths[:, None] * np.stack([I, I, 2 * I], axis=-1)
    B_el = np.stack([g.youngs_modulus * I, g.youngs_modulus * I, g.shear_modulus * 2 * I], axis=-1)
    w = lengths[:, None]
    B = (B_el[:-1] * w[:-1] + B_el[1:] * w[1:]) / (w[:-1] + w[1:])
    S = np.stack([SHEAR_CORRECTION * g.shear_modulus * A, SHEAR_CORRECTION * g.shear_modulus * A, g.youngs_modulus * A], -1)

    return RodState(
        positions=x[None],
        velocities=np.zeros((1, n + 1, 3)),
        frames=np.tile(Q, (1, n, 1, 1)),
        omega=np.zeros((1, n, 3)),
        kappa0=np.zeros((1, n - 1, 3)),
        rest_lengths=lengths[None],
        radius=r[None],
        node_mass=m_node[None],
        inertia=J[None],
        bend_stiffness=B[None],
        shear_stiffness=S[None],
        damping=np.array([g.damping]),
        density=np.array([g.density]),
        geometries=(g,),
    )


def _strains(rods):
    dx = rods.positions[:, 1:] - rods.positions[:, :-1]
    local = np.einsum("rnij,rnj->rni", rods.frames, dx)
    sigma = local / rods.rest_lengths[..., None]
    sigma[..., 2] -= 1.0
    return local, sigma


def _log_jacobian_coeff(theta):
    small = theta < 1e-3
    t = np.where(small, 1.0, theta)
    exact = 1.0 / t**2 - (1.0 + np.cos(t)) / (2.0 * t * np.sin(t))
    return np.where(small, 1.0 / 12.0 + theta**2 / 720.0, exact)


def internal_loads(rods):
    """Elastic node forces (lab frame) and element couples (local frame).

    Stretch/shear: ``n = S (Q x_s - d3)``. Bend/twist: ``tau = B (kappa -
    kappa0)`` on interior nodes, differenced onto elements, plus the
    ``kappa x tau`` transport term (with the second-order correction that
    makes the couples the exact gradient of the discrete bending energy),
    the ``Q x_s x n`` term and the gyroscopic ``(J w) x w`` term.
    """
    local, sigma = _strains(rods)
    n_local = rods.shear_stiffness * sigma
    n_lab = np.einsum("rnji,rnj->rni", rods.frames, n_local)
    R, n = rods.n_rods, rods.n_elements
    forces = np.zeros((R, n + 1, 3))
    forces[:, :-1] += n_lab
    forces[:, 1:] -= n_lab

    D = rods.rest_voronoi
    kappa = frame_curvature(rods.frames, D)
    tau = rods.bend_stiffness * (kappa - rods.kappa0)
    couples = np.zeros((R, n, 3))
    couples[:, :-1] += tau
    couples[:, 1:] -= tau
    # exact gradient of the log map: J^-1 = I +/- [u]/2 + c(|u|) [u]^2 with u = kappa D
    u = kappa * D[..., None]
    transport = 0.5 * cross(u, tau)
    second = _log_jacobian_coeff(np.linalg.norm(u, axis=-1))[..., None] * cross(u, cross(u, tau))
    couples[:, :-1] += transport + second
    couples[:, 1:] += transport - second
    couples += cross(local, n_local)
    couples += cross(rods.inertia * rods.omega, rods.omega)
    return forces, couples


def set_reference_curvature(rods, profile, index=None):
    """Replace the rest curvature of one rod (``index``) or of all rods."""
    profile = np.asarray(profile, dtype=float)
    target = rods.kappa0 if index is None else rods.kappa0[index]
    if profile.shape[-2:] != target.shape[-2:]:
        raise ValueError(f"profile has {profile.shape[-2]} stations, rod has {target.shape[-2]} interior nodes")
    if index is None:
        rods.kappa0[...] = profile
    else:
        rods.kappa0[index] = profile
    return rods


def clamp_base(system, index, position, frame):
    """Pin node 0 and element 0 of rod ``index`` to a pose from now on."""
    system.clamp_mask[index] = True
    system.clamp_position[index] = position
    system.clamp_frame[index] = frame
    _impose_clamps(system)


def release_base(system, index):
    system.clamp_mask[index] = False


def _impose_clamps(system):
    m = system.clamp_mask
    if not m.any():
        return
    rods = system.rods
    rods.positions[m, 0] = system.clamp_position[m]
    rods.velocities[m, 0] = 0.0
    rods.frames[m, 0] = system.clamp_frame[m]
    rods.omega[m, 0] = 0.0


def _drift(rods, h):
    rods.positions += h * rods.velocities
    rods.frames = rotation_matrix(-h * rods.omega) @ rods.frames


def step(system, dt, external=None):
    """Advance ``system`` in place by one position-Verlet step.

    ``external`` is either ``None``, a tuple ``(forces, couples)`` of arrays
    shaped like the node/element arrays, or a callable ``external(system)``
    returning such a tuple evaluated at the mid-step configuration.
    Velocity-proportional damping is applied exactly as ``exp(-nu dt)``.
    """
    rods = system.rods
    half = 0.5 * dt
    _drift(rods, half)
    _impose_clamps(system)
    system.time += half

    forces, couples = internal_loads(rods)
    if external is not None:
        ext = external(system) if callable(external) else external
        if ext is not None:
            fe, ce = ext
            if fe is not None:
                forces += fe
            if ce is not None:
                couples += ce
    rods.velocities += dt * forces / rods.node_mass[..., None]
    rods.omega += dt * couples / rods.inertia
    if np.any(rods.damping > 0):
        decay = np.exp(-rods.damping * dt)[:, None, None]
        rods.velocities *= decay
        rods.omega *= decay
    _impose_clamps(system)

    _drift(rods, half)
    rods.frames = orthonormalize(rods.frames)
    _impose_clamps(system)
    system.time += half

    vmax = float(np.sqrt(np.max(np.sum(rods.velocities**2, axis=-1))))
    if not vmax < MAX_SPEED:
        raise StabilityError(system.time, vmax)
    return system


def kinetic_energy(rods):
    trans = 0.5 * np.sum(rods.node_mass * np.sum(rods.velocities**2, axis=-1))
    rot = 0.5 * np.sum(rods.inertia * rods.omega**2)
    return float(trans + rot)


def elastic_energy(rods):
    _, sigma = _strains(rods)
    stretch = 0.5 * np.sum(rods.rest_lengths[..., None] * rods.shear_stiffness * sigma**2)
    dk = rods.curvature() - rods.kappa0
    bend = 0.5 * np.sum(rods.rest_voronoi[..., None] * rods.bend_stiffness * dk**2)
    return float(stretch + bend)


def momentum(rods):
    return np.sum(rods.node_mass[..., None] * rods.velocities, axis=(0, 1))


def max_frame_error(rods):
    QQt = rods.frames @ np.swapaxes(rods.frames, -1, -2)
    return float(np.max(np.abs(QQt - np.eye(3))))
