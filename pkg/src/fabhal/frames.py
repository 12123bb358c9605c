"""Rigid-body frames and rotation utilities.

A ``Frame`` is the universal pose type: a position vector in millimeters plus
a yaw-pitch-roll intrinsic Euler orientation in degrees.  The convention is
fixed project-wide: yaw about Z, then pitch about the rotated Y, then roll
about the twice-rotated X, i.e. ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``.

Frames are immutable.  The solver-facing helpers at the bottom work on raw
``(R, p)`` pairs (3x3 rotation matrix, 3-vector) to avoid per-operation
object churn, and include the SO(3) exp/log maps and their left Jacobians
used for analytic energy gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Frame",
    "IDENTITY",
    "frame_compose",
    "frame_inverse",
    "frame_apply",
    "ypr_to_matrix",
    "matrix_to_ypr",
    "wrap_angle_deg",
    "hat",
    "exp_so3",
    "log_so3",
    "so3_left_jacobian",
    "so3_left_jacobian_inv",
    "rotation_angle_between",
    "compose_rp",
    "inverse_rp",
]


def wrap_angle_deg(angle: float) -> float:
    """Wrap an angle in degrees into (-180, 180]."""
    wrapped = math.fmod(angle, 360.0)
    if wrapped <= -180.0:
        wrapped += 360.0
    elif wrapped > 180.0:
        wrapped -= 360.0
    # fmod(-360.0, 360.0) == -0.0; keep zeros positive for stable printing
    return wrapped + 0.0


def _normalize_ypr(yaw: float, pitch: float, roll: float) -> tuple[float, float, float]:
    """Normalize to yaw, roll in (-180, 180] and pitch in [-90, 90]."""
    pitch = wrap_angle_deg(pitch)
    if pitch > 90.0:
        pitch = 180.0 - pitch
        yaw += 180.0
        roll += 180.0
    elif pitch < -90.0:
        pitch = -180.0 - pitch
        yaw += 180.0
        roll += 180.0
    return wrap_angle_deg(yaw), pitch, wrap_angle_deg(roll)


def ypr_to_matrix(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """Rotation matrix for intrinsic yaw-pitch-roll angles in degrees."""
    cy, sy = math.cos(math.radians(yaw)), math.sin(math.radians(yaw))
    cp, sp = math.cos(math.radians(pitch)), math.sin(math.radians(pitch))
    cr, sr = math.cos(math.radians(roll)), math.sin(math.radians(roll))
    # Rz(yaw) @ Ry(pitch) @ Rx(roll), written out
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def matrix_to_ypr(R: np.ndarray) -> tuple[float, float, float]:
    """Extract (yaw, pitch, roll) degrees; pitch in [-90, 90].

    At the gimbal singularity (|pitch| = 90) roll is fixed to zero and the
    yaw absorbs the free rotation.
    """
    sp = -R[2, 0]
    sp = min(1.0, max(-1.0, sp))
    pitch = math.asin(sp)
    if abs(sp) > 1.0 - 1e-12:
        # cos(pitch) ~ 0: yaw and roll are coupled
        yaw = math.atan2(-R[0, 1], R[1, 1])
        roll = 0.0
    else:
        yaw = math.atan2(R[1, 0], R[0, 0])
        roll = math.atan2(R[2, 1], R[2, 2])
    return (
        wrap_angle_deg(math.degrees(yaw)),
        math.degrees(pitch),
        wrap_angle_deg(math.degrees(roll)),
    )


@dataclass(frozen=True)
class Frame:
    """A pose: position in mm and yaw-pitch-roll orientation in degrees."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        pos = tuple(float(v) for v in self.position)
        ypr = _normalize_ypr(*(float(v) for v in self.orientation))
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", ypr)
        m = ypr_to_matrix(*ypr)
        m.flags.writeable = False
        object.__setattr__(self, "_matrix", m)

    @property
    def rotation(self) -> np.ndarray:
        """3x3 rotation matrix (read-only view)."""
        return self._matrix

    @property
    def position_array(self) -> np.ndarray:
        return np.array(self.position)

    @classmethod
    def from_rp(cls, R: np.ndarray, p: np.ndarray) -> "Frame":
        return cls(tuple(float(v) for v in p), matrix_to_ypr(R))

    def to_rp(self) -> tuple[np.ndarray, np.ndarray]:
        return self._matrix, np.array(self.position)

    def to_json(self) -> dict:
        return {"position": list(self.position), "orientation": list(self.orientation)}

    @classmethod
    def from_json(cls, data: dict) -> "Frame":
        return cls(tuple(data["position"]), tuple(data["orientation"]))


IDENTITY = Frame()


def frame_compose(a: Frame, b: Frame) -> Frame:
    """Pose obtained by applying ``b`` in ``a``'s coordinate system."""
    Ra, pa = a.to_rp()
    Rb, pb = b.to_rp()
    return Frame.from_rp(Ra @ Rb, pa + Ra @ pb)


def frame_inverse(f: Frame) -> Frame:
    R, p = f.to_rp()
    return Frame.from_rp(R.T, -(R.T @ p))


def frame_apply(f: Frame, point) -> np.ndarray:
    """Map a point from ``f``'s local coordinates to the parent coordinates."""
    R, p = f.to_rp()
    return R @ np.asarray(point, dtype=float) + p


# ---------------------------------------------------------------------------
# Raw (R, p) helpers for the solver hot path
# ---------------------------------------------------------------------------


def compose_rp(Ra, pa, Rb, pb):
    return Ra @ Rb, pa + Ra @ pb


def inverse_rp(R, p):
    Rt = R.T
    return Rt, -(Rt @ p)


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric cross-product matrix of a 3-vector."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def exp_so3(w: np.ndarray) -> np.ndarray:
    """Matrix exponential of a rotation vector (Rodrigues)."""
    theta = float(np.linalg.norm(w))
    W = hat(w)
    if theta < 1e-8:
        # second-order series keeps orthogonality to machine precision here
        return np.eye(3) + W + 0.5 * (W @ W)
    A = math.sin(theta) / theta
    B = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + A * W + B * (W @ W)


def log_so3(R: np.ndarray) -> np.ndarray:
    """Rotation vector (axis * angle, radians) of a rotation matrix."""
    trace = min(3.0, max(-1.0, float(np.trace(R))))
    cos_theta = (trace - 1.0) / 2.0
    cos_theta = min(1.0, max(-1.0, cos_theta))
    theta = math.acos(cos_theta)
    if theta < 1e-8:
        # R ~ I + hat(w): read off the skew part
        return np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) / 2.0
    if theta > math.pi - 1e-6:
        # near pi the skew part degenerates; use the symmetric part
        S = (R + np.eye(3)) / 2.0  # = axis axis^T near theta = pi
        axis = np.sqrt(np.maximum(np.diagonal(S), 0.0))
        # fix signs from the off-diagonals, anchored on the largest component
        k = int(np.argmax(axis))
        if axis[k] > 0.0:
            for i in range(3):
                if i != k and S[k, i] < 0.0:
                    axis[i] = -axis[i]
        axis = axis / (np.linalg.norm(axis) or 1.0)
        # recover the exact angle from the skew part for continuity
        sin_vec = np.array(
            [R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]
        ) / 2.0
        s = float(sin_vec @ axis)
        theta = math.atan2(s, cos_theta) if s != 0.0 else theta
        if theta < 0.0:
            theta, axis = -theta, -axis
        return axis * theta
    factor = theta / (2.0 * math.sin(theta))
    return factor * np.array(
        [R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]
    )


def so3_left_jacobian(w: np.ndarray) -> np.ndarray:
    """Left Jacobian J_l of SO(3): exp(hat(w + dw)) ~ exp(hat(J_l dw)) exp(hat(w))."""
    theta = float(np.linalg.norm(w))
    W = hat(w)
    if theta < 1e-6:
        return np.eye(3) + 0.5 * W + (W @ W) / 6.0
    t2 = theta * theta
    A = (1.0 - math.cos(theta)) / t2
    B = (theta - math.sin(theta)) / (t2 * theta)
    return np.eye(3) + A * W + B * (W @ W)


def so3_left_jacobian_inv(w: np.ndarray) -> np.ndarray:
    """Inverse of the left Jacobian, with the standard cotangent form."""
    theta = float(np.linalg.norm(w))
    W = hat(w)
    if theta < 1e-6:
        return np.eye(3) - 0.5 * W + (W @ W) / 12.0
    half = theta / 2.0
    cot_term = 1.0 / (theta * theta) - (1.0 + math.cos(theta)) / (
        2.0 * theta * math.sin(theta)
    )
    return np.eye(3) - 0.5 * W + cot_term * (W @ W)


def rotation_angle_between(Ra: np.ndarray, Rb: np.ndarray) -> float:
    """Geodesic angle in radians between two rotations."""
    return float(np.linalg.norm(log_so3(Ra.T @ Rb)))
