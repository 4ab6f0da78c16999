"""Print how taper, spacing and crease angle change the folded tendon curve.

Columns: largest bending and twisting curvature (rad/m), the ratio of the
last to the first fold angle, and the tip hole in the ribbon base frame (m).

    python demos/fold_modes.py [gamma]
"""

import math
import sys

import numpy as np

from tentacle_sim.origami import RibbonDesign, fold_design

DEG = math.pi / 180

DESIGNS = {
    "uniform": RibbonDesign(),
    "tapered": RibbonDesign(taper_ratio=0.5),
    "uneven spacing": RibbonDesign(spacing_ratio=0.5),
    "oblique crease": RibbonDesign(crease_angle_beta=75 * DEG),
    "all three": RibbonDesign(taper_ratio=0.5, spacing_ratio=0.5, crease_angle_beta=75 * DEG),
}


def summary(design, gamma):
    rep = fold_design(design, gamma)
    k = np.abs(rep.kappa)
    phi = rep.solution.fold_angles
    tip = rep.shape.hole_positions[-1]
    return k[:, :2].max(), k[:, 2].max(), phi[-1] / phi[0], tip


def main(gamma=0.3):
    print(f"retraction {gamma:.2f}")
    print(f"{'design':16s} {'max bend':>9s} {'max twist':>9s} {'last/first':>10s}  tip position")
    for name, design in DESIGNS.items():
        bend, twist, ratio, tip = summary(design, gamma)
        print(f"{name:16s} {bend:9.3f} {twist:9.3f} {ratio:10.3f}  {np.array2string(tip, precision=3)}")


if __name__ == "__main__":
    main(float(sys.argv[1]) if len(sys.argv) > 1 else 0.3)
