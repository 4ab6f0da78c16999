"""Contact and body forces on stacked rods.

Rod elements are treated as capsules (the segment between their two nodes,
inflated by the element radius) and the fixed cylinders as capsules around
their axis segment. Two capsules overlap by ``eps = r_i + r_j - |delta|``
where ``delta`` joins the closest points of the two segments; the normal
force follows the Hertzian law ``k_c eps^1.5`` plus normal-velocity damping,
floored at zero so contacts never pull. Forces act at the closest points and
are shared between the two nodes of each element by the segment parameter.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

log = logging.getLogger(__name__)

STANDARD_GRAVITY = 9.81


@dataclass(frozen=True)
class ContactParams:
    """Hertzian contact settings.

    ``stiffness`` is ``k_c`` in N/m^1.5 and ``damping`` the normal-velocity
    coefficient in N s/m. The default stiffness makes a 2 mm overlap
    (a tenth of the 2 cm base radius) carry the weight of one 75 cm
    surrogate tentacle tapered to half its base radius; see
    :func:`stiffness_for_weight`.
    """

    stiffness: float = 6.0e3
    damping: float = 0.05
    self_contact: bool = True
    mutual_contact: bool = True
    cylinder_contact: bool = True

    def __post_init__(self):
        if not self.stiffness > 0:
            raise ValueError("contact stiffness must be > 0")
        if self.damping < 0:
            raise ValueError("contact damping must be >= 0")


def stiffness_for_weight(weight, overlap):
    """``k_c`` such that an overlap ``overlap`` carries ``weight`` newtons."""
    return weight / overlap**1.5


def hertz_magnitude(eps, normal_speed, params):
    """Normal force magnitude for overlaps ``eps`` and separating speeds ``normal_speed``.

    ``normal_speed`` is the rate of change of the centre distance (negative
    while approaching); damping adds ``-damping * normal_speed`` and the total
    is floored at zero. Zero wherever ``eps <= 0``.
    """
    eps = np.asarray(eps, dtype=float)
    pos = np.maximum(eps, 0.0)
    f = params.stiffness * pos * np.sqrt(pos) - params.damping * np.asarray(normal_speed, dtype=float)
    return np.where(eps > 0, np.maximum(f, 0.0), 0.0)


def segment_closest_points(p0, p1, q0, q1):
    """Closest-point parameters ``(s, t)`` on segments ``p0 p1`` and ``q0 q1`` (batched)."""
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = np.sum(d1 * d1, axis=-1)
    e = np.sum(d2 * d2, axis=-1)
    f = np.sum(d2 * r, axis=-1)
    c = np.sum(d1 * r, axis=-1)
    b = np.sum(d1 * d2, axis=-1)
    denom = a * e - b * b
    parallel = denom <= 1e-12 * a * e
    s = np.where(parallel, 0.0, np.clip((b * f - c * e) / np.where(parallel, 1.0, denom), 0.0, 1.0))
    t = (b * s + f) / e
    low = t < 0.0
    high = t > 1.0
    s = np.where(low, np.clip(-c / a, 0.0, 1.0), np.where(high, np.clip((b - c) / a, 0.0, 1.0), s))
    t = np.clip(t, 0.0, 1.0)
    return s, t


def _fallback_normal(d1, d2):
    """Deterministic separation axis for coincident closest points."""
    n = np.cross(d1, d2)
    bad = np.linalg.norm(n, axis=-1) < 1e-12
    if np.any(bad):
        # parallel segments: any axis normal to the first one
        trial = np.where(np.abs(d1[bad, :1]) < 0.9, np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))
        n[bad] = np.cross(d1[bad], trial)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def _capsule_normals(pi, pj, d1, d2):
    delta = pi - pj
    dist = np.linalg.norm(delta, axis=-1)
    coincident = dist < 1e-12
    if np.any(coincident):
        log.warning("contact between %d coincident capsule points; using a fallback axis", int(coincident.sum()))
        normal = np.empty_like(delta)
        normal[~coincident] = delta[~coincident] / dist[~coincident, None]
        normal[coincident] = _fallback_normal(d1[coincident], d2[coincident])
        return normal, dist
    return delta / dist[:, None], dist


def capsule_forces(xi, xj, ri, rj, params, vi=None, vj=None):
    """Hertzian forces between capsule pairs.

    ``xi`` and ``xj`` hold the node pairs of each element, shape (P, 2, 3);
    ``vi``, ``vj`` the node velocities (optional). Returns the nodal forces
    on each element, shape (P, 2, 3) each, plus the overlaps. The forces of
    a pair sum to zero exactly because the second is the negated first,
    split with the same weights.
    """
    xi = np.asarray(xi, dtype=float).reshape(-1, 2, 3)
    xj = np.asarray(xj, dtype=float).reshape(-1, 2, 3)
    s, t = segment_closest_points(xi[:, 0], xi[:, 1], xj[:, 0], xj[:, 1])
    d1 = xi[:, 1] - xi[:, 0]
    d2 = xj[:, 1] - xj[:, 0]
    pi = xi[:, 0] + s[:, None] * d1
    pj = xj[:, 0] + t[:, None] * d2
    normal, dist = _capsule_normals(pi, pj, d1, d2)
    eps = np.asarray(ri, dtype=float) + np.asarray(rj, dtype=float) - dist
    speed = np.zeros_like(eps)
    if vi is not None and vj is not None:
        vi = np.asarray(vi, dtype=float).reshape(-1, 2, 3)
        vj = np.asarray(vj, dtype=float).reshape(-1, 2, 3)
        vpi = (1 - s)[:, None] * vi[:, 0] + s[:, None] * vi[:, 1]
        vpj = (1 - t)[:, None] * vj[:, 0] + t[:, None] * vj[:, 1]
        speed = np.sum((vpi - vpj) * normal, axis=-1)
    mag = hertz_magnitude(eps, speed, params)
    f = mag[:, None] * normal
    fi = np.stack([(1 - s)[:, None] * f, s[:, None] * f], axis=1)
    fj = np.stack([-(1 - t)[:, None] * f, -t[:, None] * f], axis=1)
    return fi, fj, eps


def hertz_contact(elem_i, elem_j, params, vel_i=None, vel_j=None):
    """Force pair between two elements given as ``((x0, x1), radius)``.

    Returns ``(F_i, F_j)``, the total force on each element, equal and
    opposite.
    """
    (xi, ri), (xj, rj) = elem_i, elem_j
    vi = None if vel_i is None else np.asarray(vel_i)[None]
    vj = None if vel_j is None else np.asarray(vel_j)[None]
    fi, fj, _ = capsule_forces(np.asarray(xi)[None], np.asarray(xj)[None], ri, rj, params, vi, vj)
    Fi = fi[0].sum(axis=0)
    return Fi, -Fi


def rod_cylinder_contact(xe, radius, cylinder, params, ve=None):
    """Forces of a fixed cylinder on elements ``xe`` (E, 2, 3).

    Returns the nodal forces (E, 2, 3), the overlaps and the total reaction
    on the cylinder (logged by callers, never applied).
    """
    xe = np.asarray(xe, dtype=float).reshape(-1, 2, 3)
    a, b = cylinder.endpoints
    E = len(xe)
    q0 = np.broadcast_to(a, (E, 3))
    q1 = np.broadcast_to(b, (E, 3))
    xc = np.stack([q0, q1], axis=1)
    vc = np.zeros_like(xc)
    ve = None if ve is None else np.asarray(ve, dtype=float).reshape(-1, 2, 3)
    fi, _, eps = capsule_forces(xe, xc, radius, cylinder.radius, params, ve, vc if ve is not None else None)
    return fi, eps, -fi.sum(axis=(0, 1))


def gravity_forces(rods, g=STANDARD_GRAVITY, direction=(0.0, 0.0, -1.0)):
    """Lumped nodal weights, shape like the node arrays."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    return (g * rods.node_mass)[..., None] * d


# -- broad phase ---------------------------------------------------------


def element_adjacency_ok(rods, i, j):
    """Mask of flat element pairs that may interact (drops near neighbours on one rod).

    Two elements of the same rod are skipped when the rest arclength between
    their facing ends is below the sum of their radii: such capsules overlap
    even when the rod is straight.
    """
    n = rods.n_elements
    ri, ei = np.divmod(i, n)
    rj, ej = np.divmod(j, n)
    same = ri == rj
    out = ~same
    if np.any(same):
        ends = np.concatenate([np.zeros((rods.n_rods, 1)), np.cumsum(rods.rest_lengths, axis=1)], axis=1)
        lo = np.minimum(ei, ej)
        hi = np.maximum(ei, ej)
        gap = ends[ri, hi] - ends[ri, lo + 1]
        rad = rods.radius[ri, ei] + rods.radius[rj, ej]
        out = np.where(same, (hi - lo > 1) & (gap > rad), out)
    return out


def contact_cutoff(rods, margin=0.0):
    """Centre-distance bound beyond which two element capsules cannot touch."""
    lengths = np.linalg.norm(np.diff(rods.positions, axis=1), axis=-1)
    return float(2.0 * rods.radius.max() + lengths.max() + margin)


def _combine(cells, lo, span):
    c = cells - lo
    return (c[:, 0] * span[1] + c[:, 1]) * span[2] + c[:, 2]


_OFFSETS = np.array([(a, b, c) for a in (-1, 0, 1) for b in (-1, 0, 1) for c in (-1, 0, 1)])


def hash_pairs(points, cutoff):
    """All index pairs ``i < j`` with ``|p_i - p_j| < cutoff`` via a uniform grid of cell size ``cutoff``."""
    points = np.asarray(points, dtype=float)
    m = len(points)
    if m < 2:
        return np.zeros((0, 2), dtype=np.int64)
    cells = np.floor(points / cutoff).astype(np.int64)
    lo = cells.min(axis=0) - 1
    span = cells.max(axis=0) - lo + 2
    keys = _combine(cells, lo, span)
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    chunks = []
    for off in _OFFSETS:
        nk = _combine(cells + off, lo, span)
        first = np.searchsorted(sk, nk, side="left")
        cnt = np.searchsorted(sk, nk, side="right") - first
        total = int(cnt.sum())
        if total == 0:
            continue
        i = np.repeat(np.arange(m), cnt)
        start = np.repeat(np.cumsum(cnt) - cnt, cnt)
        j = order[np.repeat(first, cnt) + np.arange(total) - start]
        keep = i < j
        chunks.append(np.stack([i[keep], j[keep]], axis=-1))
    if not chunks:
        return np.zeros((0, 2), dtype=np.int64)
    pairs = np.concatenate(chunks)
    d = np.linalg.norm(points[pairs[:, 0]] - points[pairs[:, 1]], axis=-1)
    pairs = pairs[d < cutoff]
    return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]


def brute_pairs(points, cutoff):
    """O(m^2) reference for :func:`hash_pairs`."""
    points = np.asarray(points, dtype=float)
    i, j = np.triu_indices(len(points), k=1)
    d = np.linalg.norm(points[i] - points[j], axis=-1)
    keep = d < cutoff
    return np.stack([i[keep], j[keep]], axis=-1).astype(np.int64)


def _filter_pairs(rods, pairs, params):
    if len(pairs) == 0:
        return pairs
    i, j = pairs[:, 0], pairs[:, 1]
    same = (i // rods.n_elements) == (j // rods.n_elements)
    ok = element_adjacency_ok(rods, i, j)
    if not params.self_contact:
        ok &= ~same
    if not params.mutual_contact:
        ok &= same
    return pairs[ok]


def detect_pairs(system, cutoff=None, params=ContactParams(), brute=False):
    """Candidate element pairs as flat indices ``rod * n + element``, sorted.

    Every pair whose capsules overlap is included provided ``cutoff`` is at
    least :func:`contact_cutoff`. Same-rod neighbours are excluded.
    """
    rods = system.rods
    cutoff = contact_cutoff(rods) if cutoff is None else cutoff
    centres = rods.element_centers().reshape(-1, 3)
    pairs = brute_pairs(centres, cutoff) if brute else hash_pairs(centres, cutoff)
    return _filter_pairs(rods, pairs, params)


@dataclass
class ContactStats:
    pairs: int = 0
    max_penetration: float = 0.0  # overlap over the smaller radius, rod-rod
    max_cylinder_penetration: float = 0.0  # overlap over the element radius
    impulse: float = 0.0  # accumulated |F| dt over all contacts
    cylinder_reaction: np.ndarray = None
    net_pair_force: float = 0.0  # |sum of rod-rod contact forces|, a third-law audit


class ContactModel:
    """Stateful contact evaluator with a Verlet candidate list.

    Candidate pairs are collected with an inflated cutoff and reused until
    some node has moved more than half the skin since the last rebuild, so
    no overlapping pair is ever missed.
    """

    def __init__(self, params=ContactParams(), cylinders=(), skin=None, jit=None):
        self.params = params
        self.jit = _kernels.AVAILABLE if jit is None else bool(jit) and _kernels.AVAILABLE
        self.cylinders = list(cylinders)
        self.skin = skin
        self._pairs = None
        self._ref = None
        self._cyl_candidates = None
        self.stats = ContactStats()
        self.peak = ContactStats(cylinder_reaction=np.zeros(3))
        self.rebuilds = 0

    def reset_peaks(self):
        self.peak = ContactStats(cylinder_reaction=np.zeros(3))

    def _rebuild(self, rods):
        radius = float(rods.radius.max())
        skin = self.skin if self.skin is not None else radius
        self._skin = skin
        cutoff = contact_cutoff(rods, margin=skin)
        centres = rods.element_centers().reshape(-1, 3)
        self._pairs = _filter_pairs(rods, hash_pairs(centres, cutoff), self.params)
        self._cyl_candidates = []
        if self.params.cylinder_contact:
            half = 0.5 * np.linalg.norm(np.diff(rods.positions, axis=1), axis=-1).max()
            for cyl in self.cylinders:
                a, b = cyl.endpoints
                t = np.clip((centres - a) @ (b - a) / np.dot(b - a, b - a), 0.0, 1.0)
                d = np.linalg.norm(centres - (a + t[:, None] * (b - a)), axis=-1)
                self._cyl_candidates.append(np.flatnonzero(d < cyl.radius + radius + half + skin))
        self._ref = rods.positions.copy()
        self.rebuilds += 1

    def _needs_rebuild(self, rods):
        if self._pairs is None or self._ref.shape != rods.positions.shape:
            return True
        moved = np.max(np.sum((rods.positions - self._ref) ** 2, axis=-1))
        return moved > (0.5 * self._skin) ** 2

    def forces(self, rods, dt=0.0):
        """Nodal contact forces (R, n+1, 3); updates :attr:`stats`."""
        if self._needs_rebuild(rods):
            self._rebuild(rods)
        R, n = rods.n_rods, rods.n_elements
        n_nodes = R * (n + 1)
        x = rods.positions.reshape(-1, 3)
        v = rods.velocities.reshape(-1, 3)
        radius = rods.radius.reshape(-1)
        node0 = np.arange(R * n) + np.arange(R * n) // n  # first node of each flat element
        out = np.zeros((n_nodes, 3))
        stats = ContactStats(cylinder_reaction=np.zeros(3))
        if self.jit:
            self._compiled(x, v, radius, node0, dt, out, stats)
        else:
            self._reference(x, v, radius, node0, n_nodes, dt, out, stats)

        self.stats = stats
        pk = self.peak
        pk.pairs = max(pk.pairs, stats.pairs)
        pk.max_penetration = max(pk.max_penetration, stats.max_penetration)
        pk.max_cylinder_penetration = max(pk.max_cylinder_penetration, stats.max_cylinder_penetration)
        pk.impulse += stats.impulse
        pk.net_pair_force = max(pk.net_pair_force, stats.net_pair_force)
        return out.reshape(R, n + 1, 3)

    def _compiled(self, x, v, radius, node0, dt, out, stats):
        p = self.params
        x = np.ascontiguousarray(x)
        v = np.ascontiguousarray(v)
        if len(self._pairs):
            active, pen, fsum, bad, net = _kernels.pair_forces(x, v, radius, node0, self._pairs, p.stiffness, p.damping, out)
            if bad:
                log.warning("contact between %d coincident capsule points; using a fallback axis", bad)
            stats.pairs = active
            stats.max_penetration = pen
            stats.impulse = fsum * dt
            stats.net_pair_force = float(np.linalg.norm(net))
        for cyl, cand in zip(self.cylinders, self._cyl_candidates or []):
            if len(cand) == 0:
                continue
            q = np.array(cyl.endpoints, dtype=float)
            active, pen, fsum, bad, reaction = _kernels.cylinder_forces(
                x, v, radius, node0, cand, q, cyl.radius, p.stiffness, p.damping, out
            )
            if bad:
                log.warning("contact between %d coincident capsule points; using a fallback axis", bad)
            stats.pairs += active
            stats.max_cylinder_penetration = max(stats.max_cylinder_penetration, pen)
            stats.impulse += fsum * dt
            stats.cylinder_reaction = stats.cylinder_reaction + reaction

    def _reference(self, x, v, radius, node0, n_nodes, dt, out, stats):
        P = self._pairs
        if len(P):
            a0, b0 = node0[P[:, 0]], node0[P[:, 1]]
            xi = np.stack([x[a0], x[a0 + 1]], axis=1)
            xj = np.stack([x[b0], x[b0 + 1]], axis=1)
            vi = np.stack([v[a0], v[a0 + 1]], axis=1)
            vj = np.stack([v[b0], v[b0 + 1]], axis=1)
            ri, rj = radius[P[:, 0]], radius[P[:, 1]]
            fi, fj, eps = capsule_forces(xi, xj, ri, rj, self.params, vi, vj)
            active = eps > 0
            if np.any(active):
                idx = np.concatenate([a0, a0 + 1, b0, b0 + 1])
                f = np.concatenate([fi[:, 0], fi[:, 1], fj[:, 0], fj[:, 1]])
                for c in range(3):
                    out[:, c] += np.bincount(idx, weights=f[:, c], minlength=n_nodes)
                stats.pairs = int(active.sum())
                stats.max_penetration = float(np.max(eps[active] / np.minimum(ri, rj)[active]))
                mag = np.linalg.norm(fi.sum(axis=1), axis=-1)
                stats.impulse = float(mag.sum() * dt)
                stats.net_pair_force = float(np.linalg.norm((fi + fj).sum(axis=(0, 1))))

        for cyl, cand in zip(self.cylinders, self._cyl_candidates or []):
            if len(cand) == 0:
                continue
            a0 = node0[cand]
            xe = np.stack([x[a0], x[a0 + 1]], axis=1)
            ve = np.stack([v[a0], v[a0 + 1]], axis=1)
            fe, eps, reaction = rod_cylinder_contact(xe, radius[cand], cyl, self.params, ve)
            active = eps > 0
            if np.any(active):
                idx = np.concatenate([a0, a0 + 1])
                f = np.concatenate([fe[:, 0], fe[:, 1]])
                for c in range(3):
                    out[:, c] += np.bincount(idx, weights=f[:, c], minlength=n_nodes)
                stats.pairs += int(active.sum())
                stats.max_cylinder_penetration = max(
                    stats.max_cylinder_penetration, float(np.max(eps[active] / radius[cand][active]))
                )
                stats.impulse += float(np.linalg.norm(fe.sum(axis=1), axis=-1).sum() * dt)
                stats.cylinder_reaction = stats.cylinder_reaction + reaction


def weight_of(geometry, g=STANDARD_GRAVITY):
    """Weight of a tapered surrogate rod (truncated cone)."""
    rb, rt = geometry.base_radius, geometry.tip_radius
    volume = math.pi * geometry.length * (rb * rb + rb * rt + rt * rt) / 3.0
    return geometry.density * volume * g
