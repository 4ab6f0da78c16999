"""Binary trajectory dumps.

Layout: the 8-byte magic ``TENTRAJ1``, a little-endian uint32 byte count, a
UTF-8 JSON header (counts, output interval, per-element radii, resolved
scene text), then fixed-size frames of little-endian float64: the time,
node positions (R, n + 1, 3) and element quaternions (R, n, 4) in
(w, x, y, z) order.
"""

import json
import struct

import numpy as np

from ..rotations import quaternion_from_matrix

MAGIC = b"TENTRAJ1"


class TrajectoryWriter:
    def __init__(self, path, n_rods, n_elements, header):
        self.path = path
        self.n_rods = n_rods
        self.n_elements = n_elements
        meta = dict(header, n_rods=n_rods, n_elements=n_elements)
        blob = json.dumps(meta, sort_keys=True).encode("utf-8")
        self._fh = open(path, "wb")
        self._fh.write(MAGIC + struct.pack("<I", len(blob)) + blob)
        self.frames = 0

    def write(self, time, positions, frames):
        q = quaternion_from_matrix(frames)
        self._fh.write(np.float64(time).astype("<f8").tobytes())
        self._fh.write(np.ascontiguousarray(positions, dtype="<f8").tobytes())
        self._fh.write(np.ascontiguousarray(q, dtype="<f8").tobytes())
        self.frames += 1

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_trajectory(path):
    """Returns ``(header, times (T,), positions (T, R, n+1, 3), quaternions (T, R, n, 4))``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAGIC:
        raise ValueError(f"{path}: not a trajectory file")
    (size,) = struct.unpack("<I", data[8:12])
    header = json.loads(data[12 : 12 + size].decode("utf-8"))
    R, n = header["n_rods"], header["n_elements"]
    per = 1 + R * (n + 1) * 3 + R * n * 4
    body = np.frombuffer(data[12 + size :], dtype="<f8")
    if body.size % per:
        raise ValueError(f"{path}: truncated trajectory ({body.size % per} trailing values)")
    body = body.reshape(-1, per)
    times = body[:, 0].copy()
    positions = body[:, 1 : 1 + R * (n + 1) * 3].reshape(-1, R, n + 1, 3)
    quats = body[:, 1 + R * (n + 1) * 3 :].reshape(-1, R, n, 4)
    return header, times, positions, quats
