import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import crossing_count_link, gauss_double_integral, helix_with_leads
from scipy.spatial.transform import Rotation

from tentacle_sim import _kernels
from tentacle_sim.topology import (
    DirectedCurve,
    LinkFrame,
    LinkReport,
    axis_line,
    extend_curve,
    gauss_quadrature,
    link,
    link_frame,
    link_reference,
    mutual_link_avg,
    mutual_link_matrix,
    object_link_avg,
    object_links,
    open_link,
    performance,
    self_link,
    solid_angle,
)


def circle(radius=1.0, center=(0.0, 0.0, 0.0), normal_axis=2, m=200):
    th = np.linspace(0, 2 * np.pi, m, endpoint=False)
    c, s = radius * np.cos(th), radius * np.sin(th)
    pts = {2: (c, s, 0 * c), 1: (c, 0 * c, s), 0: (0 * c, c, s)}[normal_axis]
    return DirectedCurve(np.stack(pts, axis=-1) + np.asarray(center), closed=True)


def torus_knot_pair(q, m=400):
    """Two (1, q) torus curves on a common torus: linking number q."""
    th = np.linspace(0, 2 * np.pi, m, endpoint=False)
    out = []
    for shift in (0.0, np.pi):
        phi = q * th + shift
        r = 1.0 + 0.3 * np.cos(phi)
        out.append(DirectedCurve(np.stack([r * np.cos(th), r * np.sin(th), 0.3 * np.sin(phi)], -1), closed=True))
    return out


def random_walk(seed, m=15, scale=1.0):
    rng = np.random.default_rng(seed)
    return DirectedCurve(np.cumsum(scale * rng.normal(size=(m, 3)), axis=0))


def test_hopf_link():
    a = circle()
    b = circle(center=(1.0, 0.0, 0.0), normal_axis=1)
    assert abs(link(a, b)) == pytest.approx(1.0, abs=1e-9)
    assert link(a, b) == pytest.approx(-link(a.reversed(), b), abs=1e-12)
    far = circle(center=(5.0, 0.0, 0.0), normal_axis=1)
    assert link(a, far) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("q", [1, 2, 3])
def test_torus_curves_link_q_times(q):
    a, b = torus_knot_pair(q)
    assert abs(link(a, b)) == pytest.approx(q, abs=1e-8)


@pytest.mark.parametrize("seed", range(6))
def test_segment_solid_angle_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    p = rng.normal(size=(4, 3))
    w = solid_angle(*p) / (4 * np.pi)
    assert w == pytest.approx(gauss_double_integral(*p), abs=1e-9)
    assert w == pytest.approx(gauss_quadrature(*p, order=64), abs=1e-7)


@pytest.mark.parametrize("seed", range(3))
def test_open_link_matches_crossing_count(seed):
    a, b = random_walk(seed, 10), random_walk(seed + 100, 10)
    lk = link(a, b)
    assert lk == pytest.approx(crossing_count_link(a.vertices, b.vertices, directions=3000), abs=0.02)


@given(st.integers(0, 10_000))
def test_link_symmetries(seed):
    a, b = random_walk(seed), random_walk(seed + 1)
    lk = link(a, b)
    assert link(b, a) == pytest.approx(lk, abs=1e-9)
    assert link(a.reversed(), b) == pytest.approx(-lk, abs=1e-9)
    R = Rotation.random(random_state=seed % 2**32).as_matrix()
    moved = link(a.transformed(R, (1.0, -2.0, 0.5), 2.5), b.transformed(R, (1.0, -2.0, 0.5), 2.5))
    assert moved == pytest.approx(lk, abs=1e-9)
    mirror = np.diag([1.0, 1.0, -1.0])
    assert link(a.transformed(mirror), b.transformed(mirror)) == pytest.approx(-lk, abs=1e-9)


@given(st.integers(0, 10_000))
def test_compiled_link_matches_reference(seed):
    a, b = random_walk(seed), random_walk(seed + 7)
    assert link(a, b, jit=True) == pytest.approx(link_reference(a, b), abs=1e-12)
    c = DirectedCurve(a.vertices, closed=True)
    assert link(c, b, jit=True) == pytest.approx(link_reference(c, b), abs=1e-12)


def test_near_intersection_is_regularised():
    a = DirectedCurve([[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    b = DirectedCurve([[0.0, -1.0, 0.0], [0.0, 1.0, 0.0]])
    for jit in (False, True) if _kernels.AVAILABLE else (False,):
        v = link(a, b, jit=jit)
        assert np.isfinite(v) and abs(v) <= 0.5 + 1e-12


def test_extend_curve():
    c = DirectedCurve([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, -1.0]], normals=np.tile([1.0, 0, 0], (3, 1)))
    e = extend_curve(c, 10.0)
    assert len(e.vertices) == 5
    assert np.allclose(e.vertices[0], [0.0, 0.0, 20.0])
    assert np.allclose(e.vertices[-1], [21.0, 0.0, -1.0])
    assert e.normals.shape == (5, 3)
    with pytest.raises(ValueError):
        extend_curve(circle())
    with pytest.raises(ValueError):
        DirectedCurve([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


@pytest.mark.parametrize("m", [1, 2, 3])
def test_helix_object_link(m):
    h = DirectedCurve(helix_with_leads(m))
    lk = object_links([h], (0.0, 0.0, 1.0), (0.0, 0.0, 0.0))[0]
    assert abs(lk) == pytest.approx(m, abs=0.05)
    left = DirectedCurve(helix_with_leads(m, handed=-1.0))
    assert object_links([left], (0.0, 0.0, 1.0), (0.0, 0.0, 0.0))[0] == pytest.approx(-lk, abs=1e-9)


def test_twisted_ribbon_self_link():
    s = np.linspace(0.0, 1.0, 121)
    x = np.stack([0 * s, 0 * s, -s], axis=-1)
    for turns in (0, 1, 2):
        th = 2 * np.pi * turns * s
        normals = np.stack([np.cos(th), np.sin(th), 0 * s], axis=-1)
        v = self_link(x, normals, 0.02)
        assert abs(v) == pytest.approx(turns, abs=0.02)
    with pytest.raises(ValueError):
        self_link(x, normals, 0.0)


def test_parallel_tentacles_do_not_link():
    curves = [DirectedCurve(np.stack([np.full(20, x), np.zeros(20), -np.linspace(0, 0.7, 20)], -1)) for x in (0.0, 0.1, 0.2)]
    M = mutual_link_matrix(curves)
    assert np.allclose(M, 0.0, atol=1e-12)
    assert np.allclose(M, M.T)
    # a vertical axis far from straight vertical tentacles
    assert object_link_avg(curves, (0.0, 0.0, 1.0), (3.0, 0.0, 0.0)) == pytest.approx(0.0, abs=1e-9)


def test_averages_and_performance():
    a, b = torus_knot_pair(2)
    curves = [random_walk(1), random_walk(2), random_walk(3)]
    M = mutual_link_matrix(curves)
    assert mutual_link_avg(curves) == pytest.approx(np.mean(np.abs([M[0, 1], M[0, 2], M[1, 2]])))
    assert mutual_link_avg(None, matrix=M) == pytest.approx(mutual_link_avg(curves))
    obj = object_links(curves, (1.0, 0.0, 0.0), (0.0, 0.0, 0.0))
    assert object_link_avg(curves, (1.0, 0.0, 0.0), (0.0, 0.0, 0.0)) == pytest.approx(np.mean(np.abs(obj)))
    assert performance(curves, (1.0, 0.0, 0.0), (0.0, 0.0, 0.0)) == pytest.approx(
        mutual_link_avg(curves) + np.mean(np.abs(obj))
    )
    assert M[0, 1] == pytest.approx(open_link(curves[0], curves[1]))
    with pytest.raises(ValueError):
        mutual_link_avg(curves[:1])


def test_axis_line():
    line = axis_line((1.0, 0.0, 0.0), (0.0, 0.0, 2.0), 5.0)
    assert np.allclose(line.vertices, [[1.0, 0.0, -5.0], [1.0, 0.0, 5.0]])


def test_link_frame_and_report():
    rng = np.random.default_rng(0)
    curves = []
    for k in range(3):
        v = random_walk(k, 12, 0.05).vertices
        curves.append(DirectedCurve(v, rng.normal(size=v.shape)))
    f = link_frame(curves, 0.01, (1.0, 0.0, 0.0), (0.0, 0.0, 0.0))
    assert f.self_link.shape == (3,) and f.mutual.shape == (3, 3) and f.object_link.shape == (3,)
    assert f.performance == pytest.approx(f.mutual_avg + f.object_avg)
    g = link_frame(curves, [0.01] * 3, (1.0, 0.0, 0.0), (0.0, 0.0, 0.0), with_self=False)
    assert np.all(g.self_link == 0) and np.allclose(g.mutual, f.mutual)
    rep = LinkReport.from_frames([0.0, 1.0], [g, f])
    assert rep.performance == pytest.approx(f.performance)
    assert rep.series().shape == (2, 3)
    assert rep.series()[0, 2] == pytest.approx(g.performance)
    single = LinkFrame(np.zeros(1), np.zeros((1, 1)), np.array([0.5]))
    assert single.mutual_avg == 0.0 and single.performance == 0.5


def _coil_with_normals(turns):
    v = helix_with_leads(turns, per_turn=64)
    t = np.gradient(v, axis=0)
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    radial = np.stack([v[:, 0], v[:, 1], 0 * v[:, 0]], -1)
    n = radial - np.sum(radial * t, axis=1, keepdims=True) * t
    return v, n / np.linalg.norm(n, axis=1, keepdims=True)


@pytest.mark.parametrize("turns", [1, 2])
def test_self_link_of_coil_is_offset_insensitive(turns):
    v, n = _coil_with_normals(turns)
    vals = [self_link(v, n, a * 0.01) for a in (0.1, 0.3, 1.0)]
    assert np.ptp(vals) < 0.05
    assert abs(vals[0]) == pytest.approx(turns, abs=0.05)
    assert self_link(v, n, 0.005, 100.0) == pytest.approx(self_link(v, n, 0.005, 50.0), abs=1e-3)


def test_extension_factor_convergence_and_direction():
    h = DirectedCurve(helix_with_leads(2, lead=0.05))
    a = object_links([h], (0.0, 0.0, 1.0), (0.0, 0.0, 0.0), 50.0)[0]
    b = object_links([h], (0.0, 0.0, 1.0), (0.0, 0.0, 0.0), 100.0)[0]
    assert abs(a - b) < 1e-3
    e = extend_curve(h)
    t_end = (h.vertices[-1] - h.vertices[-2]) / np.linalg.norm(h.vertices[-1] - h.vertices[-2])
    ext = (e.vertices[-1] - e.vertices[-2]) / np.linalg.norm(e.vertices[-1] - e.vertices[-2])
    assert ext @ t_end == pytest.approx(1.0, abs=1e-12)
    straight = DirectedCurve([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 2.0]])
    assert np.allclose(extend_curve(straight).vertices[:, :2], 0.0)


def test_closing_loop_steps_self_link():
    # a planar loop whose tail lead passes the entry lead: the link jumps by one
    def loop(gap):
        th = np.linspace(0.0, 2 * np.pi - gap, 120)
        ring = np.stack([0.1 * np.sin(th), 0 * th, -0.1 * (1 - np.cos(th))], -1)
        lead = np.array([[0.0, -0.01, 0.3], [0.0, -0.005, 0.15]])
        tail = ring[-1] + np.array([[0.15, 0.005, 0.0], [0.3, 0.01, 0.0]])
        v = np.concatenate([lead, ring, tail])
        return v, np.tile([0.0, 1.0, 0.0], (len(v), 1))

    open_v, open_n = loop(1.0)
    closed_v, closed_n = loop(0.05)
    before = self_link(open_v, open_n, 0.002)
    after = self_link(closed_v, closed_n, 0.002)
    assert abs(after - before) == pytest.approx(1.0, abs=0.05)


@given(st.integers(0, 10_000), st.floats(0.01, 100.0))
def test_link_is_scale_invariant(seed, scale):
    a, b = random_walk(seed), random_walk(seed + 3)
    lk = link(a, b)
    assert link(a.transformed(np.eye(3), (0.0, 0.0, 0.0), scale), b.transformed(np.eye(3), (0.0, 0.0, 0.0), scale)) == pytest.approx(
        lk, abs=1e-9
    )


def _halved(curve):
    v = curve.vertices
    mid = 0.5 * (v[1:] + v[:-1])
    out = np.empty((2 * len(v) - 1, 3))
    out[0::2] = v
    out[1::2] = mid
    return DirectedCurve(out)


@pytest.mark.parametrize("seed", range(3))
def test_subdividing_segments_keeps_link(seed):
    # straight subdivisions leave the polyline, and so the link, unchanged
    a, b = random_walk(seed, 12), random_walk(seed + 50, 12)
    assert link(_halved(a), _halved(b)) == pytest.approx(link(a, b), abs=1e-3)
    h = DirectedCurve(helix_with_leads(2))
    fine = object_links([_halved(h)], (0.0, 0.0, 1.0), (0.0, 0.0, 0.0))[0]
    assert fine == pytest.approx(object_links([h], (0.0, 0.0, 1.0), (0.0, 0.0, 0.0))[0], abs=1e-3)
