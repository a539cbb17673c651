"""Unit quaternions and the two interpolation primitives (LERP / SLERP).

Quaternions are stored in w, x, y, z order and canonicalized to the w >= 0
hemisphere at construction, so value equality is free of the double-cover
ambiguity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Below this angle (radians) SLERP falls back to normalized LERP.
SLERP_LERP_THRESHOLD = 1e-6


@dataclass(frozen=True, slots=True)
class Quaternion:
    """Unit quaternion, normalized and canonicalized (w >= 0) on construction."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        n = math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)
        if not math.isfinite(n) or n < 1e-12:
            raise ValidationError(f"cannot normalize quaternion with norm {n}")
        s = 1.0 / n
        if self.w * s < 0.0:
            s = -s
        object.__setattr__(self, "w", self.w * s)
        object.__setattr__(self, "x", self.x * s)
        object.__setattr__(self, "y", self.y * s)
        object.__setattr__(self, "z", self.z * s)

    @classmethod
    def identity(cls) -> "Quaternion":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> "Quaternion":
        ax = np.asarray(axis, dtype=float)
        n = float(np.linalg.norm(ax))
        if n < 1e-12:
            raise ValidationError("rotation axis must be nonzero")
        ax = ax / n
        half = 0.5 * angle
        s = math.sin(half)
        return cls(math.cos(half), ax[0] * s, ax[1] * s, ax[2] * s)

    @classmethod
    def from_wxyz(cls, wxyz) -> "Quaternion":
        w, x, y, z = (float(v) for v in wxyz)
        return cls(w, x, y, z)

    @classmethod
    def _unchecked(cls, w, x, y, z) -> "Quaternion":
        """Skip normalization; caller guarantees a canonical unit quaternion."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "w", w)
        object.__setattr__(obj, "x", x)
        object.__setattr__(obj, "y", y)
        object.__setattr__(obj, "z", z)
        return obj

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def dot(self, other: "Quaternion") -> float:
        return self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def angle_to(self, other: "Quaternion") -> float:
        """Geodesic rotation angle to ``other``, in [0, pi]."""
        d = min(1.0, abs(self.dot(other)))
        return 2.0 * math.acos(d)

    def rotate(self, v) -> np.ndarray:
        """Rotate a 3-vector by this quaternion."""
        return self.to_matrix() @ np.asarray(v, dtype=float)

    def to_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def approx_equal(self, other: "Quaternion", tol: float = 1e-9) -> bool:
        # both canonical, so componentwise comparison is meaningful
        return (
            abs(self.w - other.w) <= tol
            and abs(self.x - other.x) <= tol
            and abs(self.y - other.y) <= tol
            and abs(self.z - other.z) <= tol
        )


def lerp(a, b, t: float) -> np.ndarray:
    """Linear interpolation (1-t)*a + t*b, exact at both endpoints.

    t outside [0, 1] is a contract violation, not a clamp.
    """
    if not 0.0 <= t <= 1.0:
        raise ValidationError(f"interpolation parameter t={t} outside [0, 1]")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (1.0 - t) * a + t * b


def slerp(q0: Quaternion, q1: Quaternion, t: float) -> Quaternion:
    """Spherical interpolation along the shorter great-circle arc.

    Constant angular velocity in t; falls back to normalized LERP when the
    endpoints are closer than SLERP_LERP_THRESHOLD radians.
    """
    if not 0.0 <= t <= 1.0:
        raise ValidationError(f"interpolation parameter t={t} outside [0, 1]")
    d = q0.dot(q1)
    sign = 1.0
    if d < 0.0:  # take the shorter arc
        d = -d
        sign = -1.0
    d = min(1.0, d)
    omega = math.acos(d)
    if omega < SLERP_LERP_THRESHOLD:
        w0, w1 = 1.0 - t, t * sign
    else:
        so = math.sin(omega)
        w0 = math.sin((1.0 - t) * omega) / so
        w1 = math.sin(t * omega) / so * sign
    return Quaternion(
        w0 * q0.w + w1 * q1.w,
        w0 * q0.x + w1 * q1.x,
        w0 * q0.y + w1 * q1.y,
        w0 * q0.z + w1 * q1.z,
    )


def quats_to_matrices(q: np.ndarray) -> np.ndarray:
    """Batched wxyz rows -> (T, 3, 3) rotation matrices."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    m = np.empty((len(q), 3, 3))
    m[:, 0, 0] = 1 - 2 * (y * y + z * z)
    m[:, 0, 1] = 2 * (x * y - w * z)
    m[:, 0, 2] = 2 * (x * z + w * y)
    m[:, 1, 0] = 2 * (x * y + w * z)
    m[:, 1, 1] = 1 - 2 * (x * x + z * z)
    m[:, 1, 2] = 2 * (y * z - w * x)
    m[:, 2, 0] = 2 * (x * z - w * y)
    m[:, 2, 1] = 2 * (y * z + w * x)
    m[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def slerp_many(q0: np.ndarray, q1: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Vectorized SLERP over arrays of wxyz rows; same arc/fallback rules as slerp().

    Used by the resamplers; agrees with the scalar op to float precision.
    """
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float).copy()
    t = np.asarray(t, dtype=float)
    d = np.sum(q0 * q1, axis=-1)
    neg = d < 0.0
    q1[neg] = -q1[neg]
    d = np.minimum(1.0, np.abs(d))
    omega = np.arccos(d)
    w0 = np.empty_like(omega)
    w1 = np.empty_like(omega)
    small = omega < SLERP_LERP_THRESHOLD
    w0[small] = 1.0 - t[small]
    w1[small] = t[small]
    big = ~small
    so = np.sin(omega[big])
    w0[big] = np.sin((1.0 - t[big]) * omega[big]) / so
    w1[big] = np.sin(t[big] * omega[big]) / so
    out = w0[:, None] * q0 + w1[:, None] * q1
    out /= np.linalg.norm(out, axis=-1, keepdims=True)
    flip = out[:, 0] < 0.0
    out[flip] = -out[flip]
    return out
