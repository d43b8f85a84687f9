"""Writes orbit.traj: two camera rings around the cube, looking at its center.

Each pose uses the look-at convention of the library (columns: right, down,
forward; world up +z).
"""
import math
import sys

import numpy as np
from scipy.spatial.transform import Rotation

TARGET = np.array([0.0, 0.0, 0.25])
RINGS = [(1.3, 0.9), (1.1, 1.4)]  # (radius, height) in meters
SAMPLES = 72
DT = 0.1


def look_at(eye, target):
    forward = target - eye
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, [0.0, 0.0, 1.0])
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    return np.column_stack([right, down, forward])


def main(path):
    lines = []
    t = 0.0
    for radius, height in RINGS:
        for i in range(SAMPLES):
            a = 2.0 * math.pi * i / SAMPLES
            eye = np.array([TARGET[0] + radius * math.cos(a), TARGET[1] + radius * math.sin(a), height])
            x, y, z, w = Rotation.from_matrix(look_at(eye, TARGET)).as_quat()
            lines.append(f"{t:.3f} {eye[0]:.9f} {eye[1]:.9f} {eye[2]:.9f} {w:.12f} {x:.12f} {y:.12f} {z:.12f}")
            t += DT
    with open(path, "w") as f:
        f.write("# t tx ty tz qw qx qy qz\n")
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "orbit.traj")
