"""Rigid-origami folding of a tendon-driven tapered ribbon.

The ribbon is a chain of rigid facets, one per tendon hole, joined by crease
hinges. Pulling the tendon by a fraction ``gamma`` of its hole-to-hole span
folds every crease by ``phi_i = k d_i / w_i`` where the single constant ``k``
is found by bisection on the tendon length constraint

    sum_i 2 d_i cos(k d_i / w_i) = (1 - gamma) * L_span .

Geometry conventions (flat ribbon, base frame = identity):

* ``d3`` (z) runs along the centerline from base to tip,
* ``d2`` (y) spans the width,
* ``d1`` (x) is the sheet normal.

Crease ``i`` crosses the centerline midway between holes ``i`` and ``i + 1``;
its axis lies in the sheet at angle ``theta_i`` from ``d3`` toward ``d2``.
"""

import configparser
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .rotations import axis_angle, frame_curvature

HALF_PI = 0.5 * math.pi


class DesignError(ValueError):
    """A ribbon design violates one of its invariants."""


class UnreachableRetraction(ValueError):
    """Requested retraction lies beyond the fully saturated fold state."""

    def __init__(self, gamma, gamma_max):
        super().__init__(f"retraction {gamma!r} unreachable; gamma_max = {gamma_max!r}")
        self.gamma = gamma
        self.gamma_max = gamma_max


@dataclass(frozen=True)
class RibbonDesign:
    """Five-parameter origami tentacle design (SI units, angles in radians).

    ``spacing_ratio`` is the ratio of the second to the first hole gap of an
    elementary unit, so ``R_S = 0.5`` with a 30 mm unit gives gaps of 20 mm
    followed by 10 mm. ``mirrored`` reflects every crease axis across the
    centerline and yields the opposite-handed coil.
    """

    length: float = 0.75
    base_width: float = 0.02
    taper_ratio: float = 1.0
    spacing_ratio: float = 1.0
    crease_angle_alpha: float = HALF_PI
    crease_angle_beta: float = HALF_PI
    unit_length: float = 0.03
    hole_count: int = 49
    thickness: float = 1e-4
    elastic_modulus: float = 4.0e9
    hole_diameter: float = 2e-3
    mirrored: bool = False

    def __post_init__(self):
        errors = self.violations()
        if errors:
            raise DesignError("; ".join(errors))

    def violations(self):
        errs = []
        if not self.length > 0:
            errs.append(f"length must be > 0 (got {self.length})")
        if not self.base_width > 0:
            errs.append(f"base_width must be > 0 (got {self.base_width})")
        if not 0 < self.taper_ratio <= 1:
            errs.append(f"taper_ratio must lie in (0, 1] (got {self.taper_ratio})")
        if not self.spacing_ratio > 0:
            errs.append(f"spacing_ratio must be > 0 (got {self.spacing_ratio})")
        for name in ("crease_angle_alpha", "crease_angle_beta"):
            val = getattr(self, name)
            if not 0 < val <= HALF_PI + 1e-12:
                errs.append(f"{name} must lie in (0, pi/2] (got {val})")
        if not self.unit_length > 0:
            errs.append(f"unit_length must be > 0 (got {self.unit_length})")
        if int(self.hole_count) != self.hole_count or self.hole_count < 3 or self.hole_count % 2 == 0:
            errs.append(f"hole_count must be odd and >= 3 (got {self.hole_count})")
        elif (self.hole_count - 1) // 2 * self.unit_length > self.length * (1 + 1e-12):
            errs.append(
                f"hole_count/unit_length: {(self.hole_count - 1) // 2} units of "
                f"{self.unit_length} m exceed length {self.length} m"
            )
        if not self.thickness > 0:
            errs.append(f"thickness must be > 0 (got {self.thickness})")
        return errs

    @property
    def tip_width(self):
        return self.base_width * self.taper_ratio

    @property
    def units(self):
        return (self.hole_count - 1) // 2

    def mirror(self):
        return replace(self, mirrored=not self.mirrored)


@dataclass(frozen=True)
class HoleLayout:
    """Flat-pattern positions of holes and creases along the centerline."""

    design: RibbonDesign
    hole_arclengths: np.ndarray
    crease_arclengths: np.ndarray
    half_spans: np.ndarray
    widths: np.ndarray
    crease_axis_angles: np.ndarray
    fold_signs: np.ndarray

    @property
    def n_creases(self):
        return len(self.half_spans)

    @property
    def span(self):
        """Straight-tendon length between the first and last hole."""
        return float(np.sum(2.0 * self.half_spans))


@dataclass(frozen=True)
class FoldSolution:
    scale_constant: float
    fold_angles: np.ndarray
    retraction: float
    saturated: np.ndarray


@dataclass(frozen=True)
class FoldedShape:
    """Folded ribbon geometry.

    ``frames`` holds one row-director frame per tendon segment (hole ``i`` to
    hole ``i + 1``): ``d3`` along the segment, ``d1`` the sheet normal averaged
    across the crease the segment spans. ``facet_rotations`` are the lab
    rotations (columns = directors) of the rigid facets, one per hole.
    """

    hole_positions: np.ndarray
    frames: np.ndarray
    segment_lengths: np.ndarray
    facet_rotations: np.ndarray

    @property
    def tendon_polyline(self):
        return self.hole_positions

    @property
    def voronoi_lengths(self):
        ell = self.segment_lengths
        return 0.5 * (ell[:-1] + ell[1:])


def build_layout(design):
    """Hole and crease stations of the flat ribbon.

    The hole span is centred on the ribbon. Ribbon width at each crease is
    tapered linearly from ``w_b`` at the first crease to ``w_t`` at the last.
    """
    if design.violations():
        raise DesignError("; ".join(design.violations()))
    units = design.units
    first = design.unit_length / (1.0 + design.spacing_ratio)
    second = design.unit_length - first
    gaps = np.tile([first, second], units)
    start = 0.5 * (design.length - gaps.sum())
    holes = start + np.concatenate([[0.0], np.cumsum(gaps)])
    creases = 0.5 * (holes[:-1] + holes[1:])
    half = 0.5 * gaps

    t = (creases - creases[0]) / (creases[-1] - creases[0])
    widths = design.base_width * (1.0 - (1.0 - design.taper_ratio) * t)

    theta = np.tile([design.crease_angle_alpha, design.crease_angle_beta], units)
    if design.mirrored:
        theta = math.pi - theta
    signs = np.where(np.arange(2 * units) % 2 == 0, 1.0, -1.0)
    return HoleLayout(design, holes, creases, half, widths, theta, signs)


def tendon_length(layout, k):
    """Tendon length for scale constant ``k``; fold angles are clamped at pi/2."""
    phi = np.minimum(k * layout.half_spans / layout.widths, HALF_PI)
    return float(np.sum(2.0 * layout.half_spans * np.cos(phi)))


def _bisect_decreasing(f, target, lo, hi, rtol=1e-15, maxiter=200):
    """Root of a decreasing ``f(k) = target`` on ``[lo, hi]``."""
    f_lo = f(lo) - target
    f_hi = f(hi) - target
    if f_lo <= 0:
        return lo
    if f_hi >= 0:
        return hi
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid) - target
        if f_mid == 0:
            return mid
        if f_mid > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return 0.5 * (lo + hi)


def max_retraction(layout):
    """Retraction at which every crease is folded flat (phi = pi/2)."""
    return 1.0 - float(np.sum(2.0 * layout.half_spans * np.cos(HALF_PI))) / layout.span


def solve_fold(layout, gamma):
    """Equilibrium fold distribution at tendon retraction ``gamma``.

    Bisection runs on the unclamped length sum below the first saturation.
    If the root lies beyond it, the saturating creases are fixed at pi/2,
    dropped from the sum, and the remaining creases are re-solved.
    """
    gamma = float(gamma)
    if gamma < 0:
        raise ValueError(f"retraction must be >= 0 (got {gamma}); over-extension is not modelled")
    gamma_max = max_retraction(layout)
    if gamma >= gamma_max:
        raise UnreachableRetraction(gamma, gamma_max)

    d, w = layout.half_spans, layout.widths
    ratio = d / w
    target = (1.0 - gamma) * layout.span
    saturated = np.zeros(layout.n_creases, dtype=bool)
    while True:
        free = ~saturated
        if not free.any():
            raise UnreachableRetraction(gamma, gamma_max)
        fixed = float(np.sum(2.0 * d[saturated] * np.cos(HALF_PI)))
        goal = target - fixed
        df, rf = d[free], ratio[free]

        def free_length(k, df=df, rf=rf):
            return float(np.sum(2.0 * df * np.cos(k * rf)))

        k_cap = HALF_PI / rf.max()
        if free_length(k_cap) > goal:
            newly = free & (k_cap * ratio >= HALF_PI * (1 - 1e-14))
            saturated |= newly
            continue
        k = _bisect_decreasing(free_length, goal, 0.0, k_cap)
        break

    phi = np.where(saturated, HALF_PI, np.minimum(k * ratio, HALF_PI))
    return FoldSolution(float(k), phi, gamma, saturated)


def reconstruct(layout, sol):
    """Walk the facet chain from the base and place holes and tendon frames."""
    n = layout.n_creases
    theta = layout.crease_axis_angles
    axes = np.stack([np.zeros(n), np.sin(theta), np.cos(theta)], axis=-1)
    folds = axis_angle(axes, layout.fold_signs * 2.0 * sol.fold_angles)
    halves = axis_angle(axes, layout.fold_signs * sol.fold_angles)

    F = np.empty((n + 1, 3, 3))
    F[0] = np.eye(3)
    for i in range(n):
        F[i + 1] = F[i] @ folds[i]

    d = layout.half_spans
    steps = d[:, None] * (F[:-1, :, 2] + F[1:, :, 2])
    holes = np.concatenate([np.zeros((1, 3)), np.cumsum(steps, axis=0)])

    mid = F[:-1] @ halves  # lab rotation halfway across each crease
    seg = holes[1:] - holes[:-1]
    ell = np.linalg.norm(seg, axis=-1)
    tangent = np.where(ell[:, None] > 1e-14, seg / np.where(ell > 1e-14, ell, 1.0)[:, None], mid[:, :, 2])
    normal = mid[:, :, 0] - np.sum(mid[:, :, 0] * tangent, axis=-1, keepdims=True) * tangent
    normal /= np.linalg.norm(normal, axis=-1, keepdims=True)
    frames = np.stack([normal, np.cross(tangent, normal), tangent], axis=-2)
    return FoldedShape(holes, frames, ell, F)


def facet_polygons(layout):
    """Flat-pattern facet outlines as lists of (y, s) vertices, one per hole.

    Each facet is bounded by the ribbon side edges and by its neighbouring
    crease lines (or the ribbon ends).
    """
    design = layout.design
    L, wb = design.length, design.base_width
    # true trapezoid outline: y = +/- half_width(s)
    slope = 0.5 * wb * (1.0 - design.taper_ratio) / L

    def edge_hits(s0, th):
        # crease line (s0 + t cos th, t sin th) meets y = +/- (wb/2 - slope s)
        pts = []
        for side in (-1.0, 1.0):
            t = side * (0.5 * wb - slope * s0) / (math.sin(th) + side * slope * math.cos(th))
            pts.append((t * math.sin(th), s0 + t * math.cos(th)))
        return pts  # (lower edge, upper edge)

    lines = [[(-0.5 * wb, 0.0), (0.5 * wb, 0.0)]]
    lines += [edge_hits(s, th) for s, th in zip(layout.crease_arclengths, layout.crease_axis_angles)]
    lines += [[(-0.5 * wb * design.taper_ratio, L), (0.5 * wb * design.taper_ratio, L)]]
    polys = []
    for a, b in zip(lines[:-1], lines[1:]):
        polys.append([a[0], b[0], b[1], a[1]])
    return polys


def fold_facets(layout, shape):
    """3D vertices of every facet polygon after folding (list of (m, 3) arrays)."""
    out = []
    for i, poly in enumerate(facet_polygons(layout)):
        local = np.array([[0.0, y, s - layout.hole_arclengths[i]] for y, s in poly])
        out.append(shape.hole_positions[i] + local @ shape.facet_rotations[i].T)
    return out


def tendon_curvature(shape):
    """Piecewise tendon curvature at the interior holes, shape (n_segments - 1, 3).

    Components are (normal bend, binormal bend, twist) in the local frame.
    """
    if len(shape.hole_positions) < 3:
        raise ValueError("tendon curvature needs at least three holes")
    D = shape.voronoi_lengths
    if np.any(D <= 0):
        raise ValueError("degenerate tendon: zero length around a joint (adjacent creases saturated)")
    return frame_curvature(shape.frames, D)


def smooth_resample(kappa, n_elements, sigma=2.0, lengths=None):
    """Gaussian-smooth a piecewise curvature profile and resample it onto a rod.

    ``kappa`` (m, 3) holds one value per tendon joint, each owning a cell of
    length ``lengths[j]`` (uniform if omitted). The smoothed profile is
    linearly interpolated onto the ``n_elements - 1`` interior nodes of a
    uniform rod whose node cells tile the same normalised span, so the
    midpoint-rule turning angle is preserved. Values stay in the input units.
    """
    kappa = np.asarray(kappa, dtype=float)
    if n_elements < 2:
        raise ValueError("n_elements must be >= 2")
    m = len(kappa)
    lengths = np.ones(m) if lengths is None else np.asarray(lengths, dtype=float)
    smoothed = gaussian_filter1d(kappa, sigma, axis=0, mode="reflect") if sigma > 0 else kappa.copy()
    edges = np.concatenate([[0.0], np.cumsum(lengths)])
    centres = 0.5 * (edges[:-1] + edges[1:]) / edges[-1]
    stations = (np.arange(1, n_elements) - 0.5) / (n_elements - 1)
    return np.stack([np.interp(stations, centres, smoothed[:, c]) for c in range(3)], axis=-1)


def export_cut_pattern(design):
    """SVG cut pattern in millimetres: outline, tendon holes, dashed creases.

    The ribbon runs along +x; its centerline sits at y = 0.
    """
    layout = build_layout(design)
    mm = 1000.0
    L = design.length * mm
    hb = 0.5 * design.base_width * mm
    ht = 0.5 * design.tip_width * mm
    margin = 5.0
    height = 2 * hb + 2 * margin

    buf = io.StringIO()
    buf.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    buf.write(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{L + 2 * margin:.4f}mm" '
        f'height="{height:.4f}mm" viewBox="0 0 {L + 2 * margin:.4f} {height:.4f}">\n'
    )
    outline = " ".join(
        [
            f"{margin:.4f},{margin:.4f}",
            f"{L + margin:.4f},{hb - ht + margin:.4f}",
            f"{L + margin:.4f},{hb + ht + margin:.4f}",
            f"{margin:.4f},{2 * hb + margin:.4f}",
        ]
    )
    buf.write(f'  <polygon id="outline" points="{outline}" fill="none" stroke="black" stroke-width="0.1"/>\n')
    r = 0.5 * design.hole_diameter * mm
    for i, s in enumerate(layout.hole_arclengths):
        buf.write(
            f'  <circle id="hole{i + 1}" cx="{s * mm + margin:.4f}" cy="{hb + margin:.4f}" '
            f'r="{r:.4f}" fill="none" stroke="black" stroke-width="0.1"/>\n'
        )
    for i, poly in enumerate(facet_polygons(layout)[1:]):
        (y0, s0), (y1, s1) = poly[0], poly[3]
        buf.write(
            f'  <line id="crease{i + 1}" x1="{s0 * mm + margin:.4f}" y1="{y0 * mm + hb + margin:.4f}" '
            f'x2="{s1 * mm + margin:.4f}" y2="{y1 * mm + hb + margin:.4f}" '
            f'stroke="red" stroke-width="0.1" stroke-dasharray="1,1"/>\n'
        )
    buf.write("</svg>\n")
    return buf.getvalue()


# --- design files ---------------------------------------------------------

_ANGLE_KEYS = ("crease_angle_alpha", "crease_angle_beta")
_DESIGN_KEYS = (
    "length",
    "base_width",
    "taper_ratio",
    "spacing_ratio",
    "crease_angle_alpha",
    "crease_angle_beta",
    "unit_length",
    "hole_count",
    "thickness",
    "elastic_modulus",
    "hole_diameter",
    "mirrored",
)


def design_from_mapping(values, where="design"):
    """Build a design from string/number values; angles are in degrees."""
    kwargs = {}
    for key, raw in values.items():
        if key not in _DESIGN_KEYS:
            raise DesignError(f"[{where}] unknown field {key!r}")
        try:
            if key == "hole_count":
                kwargs[key] = int(raw)
            elif key == "mirrored":
                kwargs[key] = raw if isinstance(raw, bool) else str(raw).strip().lower() in ("1", "true", "yes", "on")
            elif key in _ANGLE_KEYS:
                kwargs[key] = math.radians(float(raw))
            else:
                kwargs[key] = float(raw)
        except ValueError as exc:
            raise DesignError(f"[{where}] field {key!r}: cannot parse {raw!r}") from exc
    return RibbonDesign(**kwargs)


def design_to_mapping(design):
    out = {}
    for key in _DESIGN_KEYS:
        val = getattr(design, key)
        if key in _ANGLE_KEYS:
            out[key] = repr(round(math.degrees(val), 12))
        elif key == "mirrored":
            out[key] = "true" if val else "false"
        else:
            out[key] = repr(val)
    return out


def read_design(path):
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    if not parser.has_section("design"):
        raise DesignError(f"{path}: missing [design] section")
    return design_from_mapping(dict(parser["design"]))


def write_design(design, path):
    parser = configparser.ConfigParser()
    parser["design"] = design_to_mapping(design)
    with open(path, "w") as fh:
        parser.write(fh)


def write_curvature_csv(path, s, kappa):
    """Curvature profile CSV with columns s, kappa1, kappa2, kappa3."""
    data = np.column_stack([s, kappa])
    np.savetxt(path, data, delimiter=",", header="s,kappa1,kappa2,kappa3", comments="", fmt="%.12e")


@dataclass
class FoldReport:
    """Convenience bundle of one design solved at one retraction."""

    layout: HoleLayout
    solution: FoldSolution
    shape: FoldedShape
    kappa: np.ndarray = field(repr=False)


def fold_design(design, gamma):
    layout = build_layout(design)
    sol = solve_fold(layout, gamma)
    shape = reconstruct(layout, sol)
    return FoldReport(layout, sol, shape, tendon_curvature(shape))
