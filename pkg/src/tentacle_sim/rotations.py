"""Batched rotation utilities shared by the origami model and the rod solver.

Director frames are stored as *row* matrices ``Q = [d1; d2; d3]`` so that a
lab-frame vector ``v_bar`` maps to local coordinates as ``v = Q @ v_bar``.
Every function accepts arbitrary leading batch dimensions.
"""

import numpy as np

SMALL_ANGLE = 1e-6


def skew(v):
    """Cross-product matrix ``[v]x`` for vectors of shape (..., 3)."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def cross(a, b):
    """Cross product over the last axis without the broadcasting overhead of np.cross."""
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


def rotation_matrix(rotvec):
    """Rodrigues formula: exp([rotvec]x) for rotation vectors of shape (..., 3)."""
    rotvec = np.asarray(rotvec, dtype=float)
    theta = np.linalg.norm(rotvec, axis=-1)[..., None, None]
    K = skew(rotvec)
    K2 = K @ K
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - theta**2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - theta**2 / 24.0, (1.0 - np.cos(safe)) / safe**2)
    return np.eye(3) + a * K + b * K2


def axis_angle(axis, angle):
    """Rotation matrix for a (not necessarily unit) axis and an angle in radians."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    return rotation_matrix(axis * np.asarray(angle, dtype=float)[..., None])


def rotation_log(R):
    """Matrix logarithm of rotations, returned as rotation vectors (..., 3).

    Below ``SMALL_ANGLE`` the first-order extraction ``vee(R - R^T) / 2`` is
    used. Angles close to pi fall back to the symmetric part for the axis.
    """
    R = np.asarray(R, dtype=float)
    vee = np.stack(
        [R[..., 2, 1] - R[..., 1, 2], R[..., 0, 2] - R[..., 2, 0], R[..., 1, 0] - R[..., 0, 1]],
        axis=-1,
    )
    s = 0.5 * np.linalg.norm(vee, axis=-1)
    c = 0.5 * (np.trace(R, axis1=-2, axis2=-1) - 1.0)
    theta = np.arctan2(s, c)
    small = theta < SMALL_ANGLE
    factor = np.where(small, 0.5, theta / (2.0 * np.where(small, 1.0, s)))
    out = vee * factor[..., None]

    near_pi = theta > np.pi - 1e-4
    if np.any(near_pi):
        Rp = R[near_pi]
        S = 0.5 * (Rp + np.swapaxes(Rp, -1, -2)) - np.eye(3) * c[near_pi][..., None, None]
        S = S / (1.0 - c[near_pi])[..., None, None]
        # column with the largest diagonal entry is the most reliable axis estimate
        idx = np.argmax(np.diagonal(S, axis1=-2, axis2=-1), axis=-1)
        axis = np.take_along_axis(S, idx[:, None, None], axis=-1)[..., 0]
        axis /= np.linalg.norm(axis, axis=-1, keepdims=True)
        sign = np.sign(np.sum(axis * vee[near_pi], axis=-1))
        sign = np.where(sign == 0, 1.0, sign)
        out[near_pi] = axis * (sign * theta[near_pi])[..., None]
    return out


def frame_curvature(Q, lengths):
    """Discrete curvature between consecutive director frames.

    ``Q`` has shape (..., m, 3, 3); the result has shape (..., m - 1, 3) and is
    expressed in the local frame (identical for both frames of a pair since the
    relative rotation axis is shared). With ``Q_{i+1} = Q_i R^T`` and
    ``R = exp([D kappa_bar]x)`` in the lab, this returns
    ``kappa_i = -log(Q_{i+1} Q_i^T) / D_i``; rotating the directors by ``theta``
    about ``d1`` over unit length gives ``(theta, 0, 0)``.
    """
    Q = np.asarray(Q, dtype=float)
    rel = Q[..., 1:, :, :] @ np.swapaxes(Q[..., :-1, :, :], -1, -2)
    return -rotation_log(rel) / np.asarray(lengths, dtype=float)[..., None]


def orthonormalize(Q):
    """Gram-Schmidt on the director rows, keeping d3 fixed and the frame right-handed."""
    d3 = Q[..., 2, :]
    d3 = d3 / np.linalg.norm(d3, axis=-1, keepdims=True)
    d1 = Q[..., 0, :] - np.sum(Q[..., 0, :] * d3, axis=-1, keepdims=True) * d3
    d1 = d1 / np.linalg.norm(d1, axis=-1, keepdims=True)
    d2 = cross(d3, d1)
    return np.stack([d1, d2, d3], axis=-2)


def frame_from_tangent(tangent, normal_hint):
    """Row frame with ``d3 = tangent`` and ``d1`` the part of ``normal_hint`` normal to it."""
    t = np.asarray(tangent, dtype=float)
    t = t / np.linalg.norm(t, axis=-1, keepdims=True)
    n = np.asarray(normal_hint, dtype=float)
    n = n - np.sum(n * t, axis=-1, keepdims=True) * t
    norm = np.linalg.norm(n, axis=-1, keepdims=True)
    if np.any(norm < 1e-12):
        raise ValueError("normal hint is parallel to the tangent")
    n = n / norm
    return np.stack([n, np.cross(t, n), t], axis=-2)


def quaternion_from_matrix(Q):
    """Unit quaternions (w, x, y, z) of row-director frames, i.e. of the rotation Q^T."""
    F = np.swapaxes(np.asarray(Q, dtype=float), -1, -2)
    m00, m11, m22 = F[..., 0, 0], F[..., 1, 1], F[..., 2, 2]
    tr = m00 + m11 + m22
    cand = np.stack([1.0 + tr, 1.0 + m00 - m11 - m22, 1.0 - m00 + m11 - m22, 1.0 - m00 - m11 + m22], -1)
    k = np.argmax(cand, axis=-1)
    q = np.empty(F.shape[:-2] + (4,))
    big = np.sqrt(np.maximum(np.take_along_axis(cand, k[..., None], -1)[..., 0], 1e-300)) * 0.5
    f = 0.25 / big
    w = np.select(
        [k == 0, k == 1, k == 2, k == 3],
        [big, (F[..., 2, 1] - F[..., 1, 2]) * f, (F[..., 0, 2] - F[..., 2, 0]) * f, (F[..., 1, 0] - F[..., 0, 1]) * f],
    )
    x = np.select(
        [k == 0, k == 1, k == 2, k == 3],
        [(F[..., 2, 1] - F[..., 1, 2]) * f, big, (F[..., 0, 1] + F[..., 1, 0]) * f, (F[..., 0, 2] + F[..., 2, 0]) * f],
    )
    y = np.select(
        [k == 0, k == 1, k == 2, k == 3],
        [(F[..., 0, 2] - F[..., 2, 0]) * f, (F[..., 0, 1] + F[..., 1, 0]) * f, big, (F[..., 1, 2] + F[..., 2, 1]) * f],
    )
    z = np.select(
        [k == 0, k == 1, k == 2, k == 3],
        [(F[..., 1, 0] - F[..., 0, 1]) * f, (F[..., 0, 2] + F[..., 2, 0]) * f, (F[..., 1, 2] + F[..., 2, 1]) * f, big],
    )
    q[..., 0], q[..., 1], q[..., 2], q[..., 3] = w, x, y, z
    q *= np.where(q[..., :1] < 0, -1.0, 1.0)
    return q


def matrix_from_quaternion(q):
    """Inverse of :func:`quaternion_from_matrix`; returns row-director frames."""
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    F = np.empty(q.shape[:-1] + (3, 3))
    F[..., 0, 0] = 1 - 2 * (y * y + z * z)
    F[..., 0, 1] = 2 * (x * y - z * w)
    F[..., 0, 2] = 2 * (x * z + y * w)
    F[..., 1, 0] = 2 * (x * y + z * w)
    F[..., 1, 1] = 1 - 2 * (x * x + z * z)
    F[..., 1, 2] = 2 * (y * z - x * w)
    F[..., 2, 0] = 2 * (x * z - y * w)
    F[..., 2, 1] = 2 * (y * z + x * w)
    F[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return np.swapaxes(F, -1, -2)
