"""Tendon-driven origami tentacles: fold kinematics, rod dynamics and grasp topology.

The subpackages follow the pipeline: :mod:`origami` maps a ribbon design
and a tendon retraction to a folded shape and its curvature, :mod:`rod`
steps stacked Cosserat rods, :mod:`interaction` supplies contact and
gravity, :mod:`actuation` turns fold curvature into rod rest curvature
over time, :mod:`topology` measures how the tentacles link with each other
and with the object, and :mod:`harness` runs configured trials and sweeps.
"""

from .actuation import ActuationSchedule, CurvatureTable, build_table
from .interaction import ContactModel, ContactParams
from .origami import DesignError, RibbonDesign, UnreachableRetraction, fold_design, solve_fold
from .rod import Cylinder, RodGeometry, StabilityError, SystemState, init_rod, step
from .topology import DirectedCurve, LinkReport, link, mutual_link_avg, object_link_avg, performance

__version__ = "0.1.0"

__all__ = [
    "ActuationSchedule",
    "ContactModel",
    "ContactParams",
    "CurvatureTable",
    "Cylinder",
    "DesignError",
    "DirectedCurve",
    "LinkReport",
    "RibbonDesign",
    "RodGeometry",
    "StabilityError",
    "SystemState",
    "UnreachableRetraction",
    "build_table",
    "fold_design",
    "init_rod",
    "link",
    "mutual_link_avg",
    "object_link_avg",
    "performance",
    "solve_fold",
    "step",
]
