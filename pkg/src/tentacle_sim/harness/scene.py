"""Assemble a gripper scene from a :class:`SceneConfig`."""

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from ..actuation import GripperBase, build_table
from ..interaction import ContactModel, gravity_forces
from ..rod import Cylinder, RodGeometry, RodState, SystemState, clamp_base, init_rod
from ..rotations import frame_from_tangent


@lru_cache(maxsize=64)
def cached_table(design, gamma_final, levels, n_elements, sigma):
    """Curvature tables are pure functions of their inputs; share them across trials."""
    return build_table(design, gamma_final, levels, n_elements, design.length, sigma)


def tentacle_designs(config):
    """Per-tentacle designs with odd tentacles mirrored when chirality alternates."""
    out = []
    for i, d in enumerate(config.designs()):
        out.append(d.mirror() if config.alternate_chirality and i % 2 == 1 else d)
    return out


def rod_geometry(config, design):
    r = config.rod
    return RodGeometry(
        length=design.length,
        n_elements=r.n_elements,
        base_radius=r.base_radius,
        tip_radius=r.base_radius * design.taper_ratio,
        density=r.density,
        youngs_modulus=r.youngs_modulus,
        shear_modulus=r.shear_modulus,
        damping=r.damping,
    )


def base_layout(config):
    """Octagon-style base ring: positions at ``k 360/N`` degrees, tilted inward.

    The surface normal ``d1`` points radially outward on even tentacles and
    inward on odd ones when chirality alternates.
    """
    N = config.n_tentacles
    angles = 2.0 * np.pi * np.arange(N) / N
    frames = []
    for i, a in enumerate(angles):
        radial = np.array([math.cos(a), math.sin(a), 0.0])
        direction = -math.sin(config.tilt) * radial - math.cos(config.tilt) * np.array([0.0, 0.0, 1.0])
        sign = -1.0 if config.alternate_chirality and i % 2 == 1 else 1.0
        frames.append(frame_from_tangent(direction, sign * radial))
    center = np.array([0.0, 0.0, config.base_height])
    return GripperBase(center, config.circumradius, angles, np.array(frames))


@dataclass
class Scene:
    config: object
    system: SystemState
    base: GripperBase
    designs: list
    geometries: list
    tables: list
    contact: ContactModel
    gravity: np.ndarray
    cylinder: Cylinder

    def external(self, system):
        forces = self.contact.forces(system.rods, self.config.dt)
        if self.gravity is not None:
            forces += self.gravity
        return forces, None


def build_scene(config):
    """Clamped rods on the base ring, the target cylinder and per-design tables."""
    config.validate()
    designs = tentacle_designs(config)
    base = base_layout(config)
    positions = base.positions()
    rods, geoms = [], []
    for i, d in enumerate(designs):
        g = rod_geometry(config, d)
        frame = base.frames[i]
        rods.append(init_rod(g, positions[i], frame[2], frame[0]))
        geoms.append(g)
    state = RodState.stack(rods)
    obj = config.object
    cylinder = Cylinder(np.array(obj.center), np.array(obj.axis), obj.radius, obj.length)
    system = SystemState(state, [cylinder])
    clamp_base(system, np.arange(len(designs)), positions, base.frames)
    sched = config.schedule
    tables = [
        cached_table(d, sched.gamma_final, config.table_levels, config.rod.n_elements, config.smoothing_sigma) for d in designs
    ]
    contact = ContactModel(config.contact, [cylinder])
    gravity = gravity_forces(state, config.g) if config.gravity and config.g != 0 else None
    return Scene(config, system, base, designs, geoms, tables, contact, gravity, cylinder)


def with_seed(config, seed):
    return replace(config, seed=int(seed))
