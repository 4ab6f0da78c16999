"""Object link of synthetic tentacle curves around the default object.

A straight lead reaching the object, then coils of half a turn up to three
turns. The bare lead already scores one half: its extended end tangent
passes the axis line on one side.

    python demos/wrap_link.py
"""

import math

import numpy as np

from tentacle_sim.harness.config import SceneConfig
from tentacle_sim.topology import DirectedCurve, object_links


def coil(config, turns, per_turn=48, pitch=0.04):
    obj = config.object
    c = np.asarray(obj.center, dtype=float)
    a = np.asarray(obj.axis, dtype=float) / np.linalg.norm(obj.axis)
    base = np.array([config.circumradius, 0.0, 0.0])
    rel = base - c
    start = rel @ a
    u = rel - start * a
    u /= np.linalg.norm(u)
    w = np.cross(a, u)
    r = obj.radius + config.rod.base_radius
    th = np.linspace(0.0, 2 * math.pi * turns, int(per_turn * turns) + 1)
    ring = c + (start - pitch * th / (2 * math.pi))[:, None] * a + r * (np.cos(th)[:, None] * u + np.sin(th)[:, None] * w)
    lead = np.linspace(base, ring[0], 12)[:-1]
    return np.concatenate([lead, ring])


def main():
    config = SceneConfig()
    print(f"{'turns':>5s} {'object':>7s}")
    for turns in (0.0, 0.5, 1.0, 2.0, 3.0):
        x = coil(config, turns)
        lk = object_links([DirectedCurve(x)], config.object.axis, config.object.center)[0]
        print(f"{turns:5.1f} {lk:7.3f}")


if __name__ == "__main__":
    main()
