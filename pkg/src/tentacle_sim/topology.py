"""Gauss linking numbers of discretised open curves and grasp metrics.

The Gauss double integral over two polylines is evaluated exactly as a sum
of signed solid angles, one per segment pair (Klenin and Langowski). Open
curves are first closed "at infinity" by appending long straight segments
along their end tangents, which makes the link of two tentacles, or of a
tentacle with the object's axis, close to an integer when they wrap one
another cleanly.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .interaction import segment_closest_points

log = logging.getLogger(__name__)

EXTENSION_FACTOR = 50.0
DISTANCE_FLOOR = 1e-6
FOUR_PI = 4.0 * np.pi


@dataclass
class DirectedCurve:
    """Ordered vertices with optional per-vertex unit normals."""

    vertices: np.ndarray
    normals: np.ndarray = None
    closed: bool = False

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3 or len(self.vertices) < 2:
            raise ValueError("a curve needs at least two 3D vertices")
        if np.any(np.linalg.norm(np.diff(self.vertices, axis=0), axis=-1) == 0):
            raise ValueError("consecutive curve vertices must be distinct")
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=float)
            if self.normals.shape != self.vertices.shape:
                raise ValueError("need one normal per vertex")

    def segments(self):
        v = self.vertices
        if self.closed:
            return v, np.roll(v, -1, axis=0)
        return v[:-1], v[1:]

    def length(self):
        a, b = self.segments()
        return float(np.sum(np.linalg.norm(b - a, axis=-1)))

    def reversed(self):
        normals = None if self.normals is None else self.normals[::-1].copy()
        return DirectedCurve(self.vertices[::-1].copy(), normals, self.closed)

    def transformed(self, rotation=np.eye(3), translation=(0.0, 0.0, 0.0), scale=1.0):
        v = scale * self.vertices @ np.asarray(rotation).T + np.asarray(translation)
        normals = None if self.normals is None else self.normals @ np.asarray(rotation).T
        return DirectedCurve(v, normals, self.closed)


def extend_curve(curve, length_factor=EXTENSION_FACTOR):
    """Prepend and append straight segments of ``length_factor`` x curve length along the end tangents."""
    if curve.closed:
        raise ValueError("only open curves are extended")
    v = curve.vertices
    ext = length_factor * curve.length()
    t0 = v[1] - v[0]
    t1 = v[-1] - v[-2]
    t0 /= np.linalg.norm(t0)
    t1 /= np.linalg.norm(t1)
    verts = np.concatenate([[v[0] - ext * t0], v, [v[-1] + ext * t1]])
    normals = None
    if curve.normals is not None:
        normals = np.concatenate([curve.normals[:1], curve.normals, curve.normals[-1:]])
    return DirectedCurve(verts, normals)


def _unit(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.divide(v, n, out=np.zeros_like(v), where=n > 0)


def _regularise(p1, p2, p3, p4):
    """Push segment pairs closer than ``DISTANCE_FLOOR`` apart to exactly the floor."""
    s, t = segment_closest_points(p1, p2, p3, p4)
    ca = p1 + s[..., None] * (p2 - p1)
    cb = p3 + t[..., None] * (p4 - p3)
    gap = cb - ca
    d = np.linalg.norm(gap, axis=-1)
    close = d < DISTANCE_FLOOR
    if not np.any(close):
        return p3, p4
    log.debug("regularising %d near-intersecting segment pairs", int(close.sum()))
    normal = _unit(gap)
    fallback = _unit(np.cross(p2 - p1, p4 - p3))
    normal = np.where((d > 0)[..., None], normal, fallback)
    shift = np.where(close[..., None], (DISTANCE_FLOOR - d)[..., None] * normal, 0.0)
    return p3 + shift, p4 + shift


def solid_angle(p1, p2, p3, p4):
    """Signed solid angle subtended by segment pairs ``p1 p2`` and ``p3 p4`` (batched).

    Summing ``solid_angle / 4 pi`` over all segment pairs of two polylines
    gives their Gauss linking integral.
    """
    p1, p2, p3, p4 = (np.asarray(p, dtype=float) for p in (p1, p2, p3, p4))
    p1, p2, p3, p4 = np.broadcast_arrays(p1, p2, p3, p4)
    p3, p4 = _regularise(p1, p2, p3, p4)
    r13 = p3 - p1
    r14 = p4 - p1
    r23 = p3 - p2
    r24 = p4 - p2
    n1 = _unit(np.cross(r13, r14))
    n2 = _unit(np.cross(r14, r24))
    n3 = _unit(np.cross(r24, r23))
    n4 = _unit(np.cross(r23, r13))

    def asin_dot(a, b):
        return np.arcsin(np.clip(np.sum(a * b, axis=-1), -1.0, 1.0))

    omega = asin_dot(n1, n2) + asin_dot(n2, n3) + asin_dot(n3, n4) + asin_dot(n4, n1)
    sign = np.sign(np.sum(np.cross(p4 - p3, p2 - p1) * r13, axis=-1))
    return omega * sign


def gauss_quadrature(p1, p2, p3, p4, order=48):
    """Reference: linking contribution of one segment pair by tensor Gauss-Legendre quadrature."""
    x, w = np.polynomial.legendre.leggauss(order)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    da = np.asarray(p2) - np.asarray(p1)
    db = np.asarray(p4) - np.asarray(p3)
    a = np.asarray(p1) + s[:, None] * da
    b = np.asarray(p3) + s[:, None] * db
    r = a[:, None, :] - b[None, :, :]
    dist3 = np.linalg.norm(r, axis=-1) ** 3
    integrand = r @ np.cross(da, db) / dist3
    return float(w @ integrand @ w) / FOUR_PI


def _polyline(curve):
    v = curve.vertices
    return np.concatenate([v, v[:1]]) if curve.closed else v


def link(u1, u2, jit=None):
    """Gauss linking integral of two directed polylines (used as given, no extension).

    The compiled loop is used when numba is available unless ``jit`` is False.
    """
    if (_kernels.AVAILABLE if jit is None else jit):
        return float(_kernels.link_sum(_polyline(u1), _polyline(u2), DISTANCE_FLOOR) / FOUR_PI)
    return link_reference(u1, u2)


def link_reference(u1, u2):
    """Vectorised numpy form of :func:`link`."""
    a1, a2 = u1.segments()
    b1, b2 = u2.segments()
    omega = solid_angle(a1[:, None], a2[:, None], b1[None, :], b2[None, :])
    return float(np.sum(omega) / FOUR_PI)


def open_link(u1, u2, length_factor=EXTENSION_FACTOR):
    """Link of two open curves after extending both."""
    return link(extend_curve(u1, length_factor), extend_curve(u2, length_factor))


def self_link(vertices, normals, offset, length_factor=EXTENSION_FACTOR):
    """Link of a curve with its copy displaced by ``offset`` along the normals.

    ``offset`` is a scalar or one value per vertex. The curve is extended
    first and the copy is offset from the extended curve with the end normals
    carried along, so the two extensions run parallel and add no twist.
    """
    offset = np.broadcast_to(np.asarray(offset, dtype=float), (len(vertices),))
    if not np.all(offset > 0):
        raise ValueError("self-link offset must be positive")
    base = extend_curve(DirectedCurve(vertices, normals), length_factor)
    off = np.concatenate([offset[:1], offset, offset[-1:]])
    shifted = DirectedCurve(base.vertices + off[:, None] * _unit(base.normals))
    return link(base, shifted)


def axis_line(center, direction, half_length):
    """The object's axis realised as one long segment."""
    c = np.asarray(center, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    return DirectedCurve(np.stack([c - half_length * d, c + half_length * d]))


def mutual_link_matrix(curves, length_factor=EXTENSION_FACTOR):
    """Symmetric matrix of pairwise links (zero diagonal)."""
    ext = [extend_curve(c, length_factor) for c in curves]
    N = len(ext)
    M = np.zeros((N, N))
    for i in range(N):
        for j in range(i + 1, N):
            M[i, j] = M[j, i] = link(ext[i], ext[j])
    return M


def mutual_link_avg(curves, length_factor=EXTENSION_FACTOR, matrix=None):
    """Mean absolute pairwise link over the ``N (N - 1) / 2`` unordered pairs."""
    N = len(curves) if matrix is None else len(matrix)
    if N < 2:
        raise ValueError("mutual link needs at least two curves")
    M = mutual_link_matrix(curves, length_factor) if matrix is None else np.asarray(matrix)
    i, j = np.triu_indices(N, k=1)
    return float(np.mean(np.abs(M[i, j])))


def object_links(curves, axis_direction, center, length_factor=EXTENSION_FACTOR):
    """Link of every (extended) curve with the object's axis line."""
    L = max(c.length() for c in curves)
    line = axis_line(center, axis_direction, length_factor * L)
    return np.array([link(extend_curve(c, length_factor), line) for c in curves])


def object_link_avg(curves, axis_direction, center, length_factor=EXTENSION_FACTOR):
    if len(curves) < 1:
        raise ValueError("object link needs at least one curve")
    return float(np.mean(np.abs(object_links(curves, axis_direction, center, length_factor))))


def performance(curves, axis_direction, center, length_factor=EXTENSION_FACTOR):
    """Grasp score: mean absolute mutual link plus mean absolute object link."""
    return mutual_link_avg(curves, length_factor) + object_link_avg(curves, axis_direction, center, length_factor)


@dataclass
class LinkFrame:
    """Link quantities of one configuration."""

    self_link: np.ndarray  # (N,)
    mutual: np.ndarray  # (N, N)
    object_link: np.ndarray  # (N,)

    @property
    def mutual_avg(self):
        N = len(self.mutual)
        if N < 2:
            return 0.0
        i, j = np.triu_indices(N, k=1)
        return float(np.mean(np.abs(self.mutual[i, j])))

    @property
    def object_avg(self):
        return float(np.mean(np.abs(self.object_link)))

    @property
    def performance(self):
        return self.mutual_avg + self.object_avg


def link_frame(curves, offsets, axis_direction, center, length_factor=EXTENSION_FACTOR, with_self=True):
    """Self, mutual and object links of one set of tentacle curves (with normals)."""
    N = len(curves)
    selfs = np.zeros(N)
    if with_self:
        offsets = list(offsets) if np.ndim(offsets) else [offsets] * N
        selfs = np.array([self_link(c.vertices, c.normals, off, length_factor) for c, off in zip(curves, offsets)])
    mutual = mutual_link_matrix(curves, length_factor) if N > 1 else np.zeros((N, N))
    obj = object_links(curves, axis_direction, center, length_factor)
    return LinkFrame(selfs, mutual, obj)


@dataclass
class LinkReport:
    """Time series of link quantities; scalar summaries refer to the last frame."""

    times: np.ndarray
    self_link: np.ndarray  # (T, N)
    mutual: np.ndarray  # (T, N, N)
    object_link: np.ndarray  # (T, N)
    frames: list = field(default_factory=list, repr=False)

    @classmethod
    def from_frames(cls, times, frames):
        return cls(
            np.asarray(times, dtype=float),
            np.stack([f.self_link for f in frames]),
            np.stack([f.mutual for f in frames]),
            np.stack([f.object_link for f in frames]),
            list(frames),
        )

    @property
    def final(self):
        return LinkFrame(self.self_link[-1], self.mutual[-1], self.object_link[-1])

    @property
    def mutual_avg(self):
        return self.final.mutual_avg

    @property
    def object_avg(self):
        return self.final.object_avg

    @property
    def performance(self):
        return self.final.performance

    def series(self):
        """Per-frame (mutual_avg, object_avg, performance), shape (T, 3)."""
        out = []
        for k in range(len(self.times)):
            f = LinkFrame(self.self_link[k], self.mutual[k], self.object_link[k])
            out.append((f.mutual_avg, f.object_avg, f.performance))
        return np.array(out).reshape(-1, 3)
