"""Compiled inner loops for contact (:class:`~tentacle_sim.interaction.ContactModel`)
and for the Gauss link sum (:func:`~tentacle_sim.topology.link`).

They mirror the vectorised reference functions one pair at a time; the reference path is kept for testing and as a fallback when
numba is unavailable (or ``TENTACLE_SIM_NO_JIT`` is set).
"""

import os

import numpy as np

try:
    if os.environ.get("TENTACLE_SIM_NO_JIT"):
        raise ImportError
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

AVAILABLE = njit is not None


def _closest(p0, p1, q0, q1):
    """Ericson's clamped closest-point parameters for two segments given as 3-sequences."""
    d1x, d1y, d1z = p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]
    d2x, d2y, d2z = q1[0] - q0[0], q1[1] - q0[1], q1[2] - q0[2]
    rx, ry, rz = p0[0] - q0[0], p0[1] - q0[1], p0[2] - q0[2]
    a = d1x * d1x + d1y * d1y + d1z * d1z
    e = d2x * d2x + d2y * d2y + d2z * d2z
    f = d2x * rx + d2y * ry + d2z * rz
    c = d1x * rx + d1y * ry + d1z * rz
    b = d1x * d2x + d1y * d2y + d1z * d2z
    denom = a * e - b * b
    if denom <= 1e-12 * a * e:
        s = 0.0
    else:
        s = min(max((b * f - c * e) / denom, 0.0), 1.0)
    t = (b * s + f) / e
    if t < 0.0:
        s = min(max(-c / a, 0.0), 1.0)
        t = 0.0
    elif t > 1.0:
        s = min(max((b - c) / a, 0.0), 1.0)
        t = 1.0
    return s, t


def _fallback(p0, p1, q0, q1, normal):
    """Deterministic separation axis for coincident closest points, written into ``normal``."""
    d1 = np.array([p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]])
    d2 = np.array([q1[0] - q0[0], q1[1] - q0[1], q1[2] - q0[2]])
    n = np.cross(d1, d2)
    if np.sqrt(n @ n) < 1e-12:
        trial = np.array([1.0, 0.0, 0.0]) if abs(d1[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        n = np.cross(d1, trial)
    normal[:] = n / np.sqrt(n @ n)


def _contact(xa, xb, va, vb, s, t, rsum, stiffness, damping, normal):
    """Overlap and force magnitude at parameters ``(s, t)``; ``normal`` is filled in.

    Returns ``(eps, mag, coincident)``; ``mag`` is only meaningful for ``eps > 0``.
    """
    dx = (1.0 - s) * xa[0, 0] + s * xa[1, 0] - (1.0 - t) * xb[0, 0] - t * xb[1, 0]
    dy = (1.0 - s) * xa[0, 1] + s * xa[1, 1] - (1.0 - t) * xb[0, 1] - t * xb[1, 1]
    dz = (1.0 - s) * xa[0, 2] + s * xa[1, 2] - (1.0 - t) * xb[0, 2] - t * xb[1, 2]
    dist = np.sqrt(dx * dx + dy * dy + dz * dz)
    eps = rsum - dist
    if eps <= 0.0:
        return eps, 0.0, False
    coincident = dist < 1e-12
    if coincident:
        _fallback(xa[0], xa[1], xb[0], xb[1], normal)
    else:
        normal[0], normal[1], normal[2] = dx / dist, dy / dist, dz / dist
    speed = 0.0
    for c in range(3):
        speed += ((1.0 - s) * va[0, c] + s * va[1, c] - (1.0 - t) * vb[0, c] - t * vb[1, c]) * normal[c]
    mag = max(stiffness * eps * np.sqrt(eps) - damping * speed, 0.0)
    return eps, mag, coincident


def _pairs(x, v, radius, node0, pairs, stiffness, damping, out):
    """Rod-rod pairs; returns (active, max_penetration, force_sum, coincident, net (3,))."""
    active = 0
    coincident = 0
    max_pen = 0.0
    fsum = 0.0
    net = np.zeros(3)
    normal = np.zeros(3)
    for k in range(pairs.shape[0]):
        ei, ej = pairs[k, 0], pairs[k, 1]
        a0, b0 = node0[ei], node0[ej]
        xa, xb = x[a0 : a0 + 2], x[b0 : b0 + 2]
        s, t = _closest(xa[0], xa[1], xb[0], xb[1])
        ri, rj = radius[ei], radius[ej]
        eps, mag, bad = _contact(xa, xb, v[a0 : a0 + 2], v[b0 : b0 + 2], s, t, ri + rj, stiffness, damping, normal)
        if eps <= 0.0:
            continue
        coincident += bad
        g = 0.0
        for c in range(3):
            f = mag * normal[c]
            fi0, fi1 = (1.0 - s) * f, s * f
            fj0, fj1 = -(1.0 - t) * f, -t * f
            out[a0, c] += fi0
            out[a0 + 1, c] += fi1
            out[b0, c] += fj0
            out[b0 + 1, c] += fj1
            net[c] += fi0 + fi1 + fj0 + fj1
            g += (fi0 + fi1) ** 2
        active += 1
        max_pen = max(max_pen, eps / min(ri, rj))
        fsum += np.sqrt(g)
    return active, max_pen, fsum, coincident, net


def _cylinder(x, v, radius, node0, cand, q, cyl_radius, stiffness, damping, out):
    """Rod-cylinder candidates against the fixed axis segment ``q`` (2, 3).

    Returns (active, max_penetration, force_sum, coincident, reaction (3,)).
    """
    active = 0
    coincident = 0
    max_pen = 0.0
    fsum = 0.0
    reaction = np.zeros(3)
    normal = np.zeros(3)
    vq = np.zeros((2, 3))
    for k in range(cand.shape[0]):
        e = cand[k]
        a0 = node0[e]
        xa = x[a0 : a0 + 2]
        s, t = _closest(xa[0], xa[1], q[0], q[1])
        eps, mag, bad = _contact(xa, q, v[a0 : a0 + 2], vq, s, t, radius[e] + cyl_radius, stiffness, damping, normal)
        if eps <= 0.0:
            continue
        coincident += bad
        g = 0.0
        for c in range(3):
            f = mag * normal[c]
            f0, f1 = (1.0 - s) * f, s * f
            out[a0, c] += f0
            out[a0 + 1, c] += f1
            reaction[c] -= f0 + f1
            g += (f0 + f1) ** 2
        active += 1
        max_pen = max(max_pen, eps / radius[e])
        fsum += np.sqrt(g)
    return active, max_pen, fsum, coincident, reaction


def _unit_cross(ax, ay, az, bx, by, bz):
    nx, ny, nz = ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx
    n = np.sqrt(nx * nx + ny * ny + nz * nz)
    if n > 0.0:
        return nx / n, ny / n, nz / n
    return 0.0, 0.0, 0.0


def _asin_dot(a, b):
    d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    return np.arcsin(min(max(d, -1.0), 1.0))


def _link_sum(a, b, floor):
    """Sum of signed segment-pair solid angles of polylines ``a`` and ``b`` (vertices)."""
    total = 0.0
    for i in range(a.shape[0] - 1):
        p1 = a[i]
        p2 = a[i + 1]
        for j in range(b.shape[0] - 1):
            p3x, p3y, p3z = b[j, 0], b[j, 1], b[j, 2]
            p4x, p4y, p4z = b[j + 1, 0], b[j + 1, 1], b[j + 1, 2]
            s, t = _closest(p1, p2, b[j], b[j + 1])
            gx = p3x + t * (p4x - p3x) - p1[0] - s * (p2[0] - p1[0])
            gy = p3y + t * (p4y - p3y) - p1[1] - s * (p2[1] - p1[1])
            gz = p3z + t * (p4z - p3z) - p1[2] - s * (p2[2] - p1[2])
            d = np.sqrt(gx * gx + gy * gy + gz * gz)
            if d < floor:
                if d > 0.0:
                    nx, ny, nz = gx / d, gy / d, gz / d
                else:
                    nx, ny, nz = _unit_cross(
                        p2[0] - p1[0], p2[1] - p1[1], p2[2] - p1[2], p4x - p3x, p4y - p3y, p4z - p3z
                    )
                h = floor - d
                p3x, p3y, p3z = p3x + h * nx, p3y + h * ny, p3z + h * nz
                p4x, p4y, p4z = p4x + h * nx, p4y + h * ny, p4z + h * nz
            r13 = (p3x - p1[0], p3y - p1[1], p3z - p1[2])
            r14 = (p4x - p1[0], p4y - p1[1], p4z - p1[2])
            r23 = (p3x - p2[0], p3y - p2[1], p3z - p2[2])
            r24 = (p4x - p2[0], p4y - p2[1], p4z - p2[2])
            n1 = _unit_cross(r13[0], r13[1], r13[2], r14[0], r14[1], r14[2])
            n2 = _unit_cross(r14[0], r14[1], r14[2], r24[0], r24[1], r24[2])
            n3 = _unit_cross(r24[0], r24[1], r24[2], r23[0], r23[1], r23[2])
            n4 = _unit_cross(r23[0], r23[1], r23[2], r13[0], r13[1], r13[2])
            omega = _asin_dot(n1, n2) + _asin_dot(n2, n3) + _asin_dot(n3, n4) + _asin_dot(n4, n1)
            ux, uy, uz = p4x - p3x, p4y - p3y, p4z - p3z
            wx, wy, wz = p2[0] - p1[0], p2[1] - p1[1], p2[2] - p1[2]
            sign = (uy * wz - uz * wy) * r13[0] + (uz * wx - ux * wz) * r13[1] + (ux * wy - uy * wx) * r13[2]
            if sign > 0.0:
                total += omega
            elif sign < 0.0:
                total -= omega
    return total


if AVAILABLE:
    _closest = njit(cache=True)(_closest)
    _fallback = njit(cache=True)(_fallback)
    _contact = njit(cache=True)(_contact)
    pair_forces = njit(cache=True)(_pairs)
    cylinder_forces = njit(cache=True)(_cylinder)
    _unit_cross = njit(cache=True)(_unit_cross)
    _asin_dot = njit(cache=True)(_asin_dot)
    link_sum = njit(cache=True)(_link_sum)
else:  # pragma: no cover
    pair_forces = cylinder_forces = link_sum = None
