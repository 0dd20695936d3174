"""SO(3) / unit-quaternion algebra used throughout the filter.

Conventions:
  * Quaternions are Hamilton, scalar-last: q = [qx, qy, qz, qw].
  * The double cover is resolved by qw >= 0 at construction (qw == 0 broken
    by the first nonzero component positive).
  * Rotation error states are right perturbations: R_true = R_est @ exp_so3(dtheta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Below this angle the closed forms switch to Taylor series.
SMALL_ANGLE = 1e-7

_I3 = np.eye(3)

QUAT_IDENTITY = np.array([0.0, 0.0, 0.0, 1.0])


def skew(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix so that skew(v) @ w == cross(v, w)."""
    x, y, z = v
    out = np.zeros((3, 3))
    out[0, 1] = -z
    out[0, 2] = y
    out[1, 0] = z
    out[1, 2] = -x
    out[2, 0] = -y
    out[2, 1] = x
    return out


def exp_so3(theta_vec: np.ndarray) -> np.ndarray:
    """Rotation matrix from a rotation vector (Rodrigues formula)."""
    x, y, z = (float(c) for c in theta_vec)
    angle = math.sqrt(x * x + y * y + z * z)
    k = skew((x, y, z))
    if angle < SMALL_ANGLE:
        # second-order series, relative error below ~1e-12 at the threshold
        return _I3 + k + 0.5 * (k @ k)
    s = math.sin(angle) / angle
    c = (1.0 - math.cos(angle)) / (angle * angle)
    return _I3 + s * k + c * (k @ k)


def log_so3(rot: np.ndarray) -> np.ndarray:
    """Rotation vector of a rotation matrix, principal value in [0, pi].

    Near pi the axis is recovered from the diagonal of (R + I)/2, which stays
    well conditioned where the antisymmetric part vanishes. The axis sign at
    exactly pi is fixed by making the first nonzero component in (z, y, x)
    order positive.
    """
    trace = float(np.trace(rot))
    cos_angle = min(1.0, max(-1.0, 0.5 * (trace - 1.0)))
    angle = float(np.arccos(cos_angle))
    antisym = 0.5 * np.array([
        rot[2, 1] - rot[1, 2],
        rot[0, 2] - rot[2, 0],
        rot[1, 0] - rot[0, 1],
    ])
    if angle < SMALL_ANGLE:
        return antisym
    if np.pi - angle < 1e-6:
        # axis from the dominant diagonal entry of (R + I)/2 = axis axis^T near pi
        outer = 0.5 * (rot + _I3)
        i = int(np.argmax(np.diag(outer)))
        axis = outer[:, i] / np.sqrt(max(outer[i, i], np.finfo(float).tiny))
        axis = axis / np.linalg.norm(axis)
        # keep continuity with the sin-based branch when sin(angle) is not yet 0
        if np.dot(axis, antisym) < 0.0:
            axis = -axis
        elif np.dot(axis, antisym) == 0.0:
            for c in (axis[2], axis[1], axis[0]):
                if c != 0.0:
                    if c < 0.0:
                        axis = -axis
                    break
        return angle * axis
    return (angle / np.sin(angle)) * antisym


def right_jacobian(theta_vec: np.ndarray) -> np.ndarray:
    """Right Jacobian of SO(3): exp_so3(t + d) ~ exp_so3(t) @ exp_so3(J_r(t) d)."""
    theta_vec = np.asarray(theta_vec, dtype=float)
    angle = float(np.linalg.norm(theta_vec))
    k = skew(theta_vec)
    if angle < SMALL_ANGLE:
        return _I3 - 0.5 * k + (k @ k) / 6.0
    a2 = angle * angle
    c1 = (1.0 - np.cos(angle)) / a2
    c2 = (angle - np.sin(angle)) / (a2 * angle)
    return _I3 - c1 * k + c2 * (k @ k)


def _canonical_components(x: float, y: float, z: float, w: float):
    n = math.sqrt(x * x + y * y + z * z + w * w)
    if abs(n - 1.0) > 1e-12:
        # skipping the division when already unit keeps canonicalization
        # idempotent at the bit level (replay logs rely on this)
        x, y, z, w = x / n, y / n, z / n, w / n
    flip = w < 0.0
    if w == 0.0:
        for c in (x, y, z):
            if c != 0.0:
                flip = c < 0.0
                break
    if flip:
        return -x, -y, -z, -w
    return x, y, z, w


def quat_canonical(q: np.ndarray) -> np.ndarray:
    """Normalize and fix the sign so qw >= 0 (ties broken lexicographically)."""
    x, y, z, w = (float(c) for c in q)
    out = np.empty(4)
    out[0], out[1], out[2], out[3] = _canonical_components(x, y, z, w)
    return out


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a (x) b, scalar-last, canonicalized output."""
    ax, ay, az, aw = (float(c) for c in a)
    bx, by, bz, bw = (float(c) for c in b)
    out = np.empty(4)
    out[0], out[1], out[2], out[3] = _canonical_components(
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
        aw * bw - ax * bx - ay * by - az * bz,
    )
    return out


def quat_conj(q: np.ndarray) -> np.ndarray:
    """Conjugate (= inverse for unit quaternions)."""
    x, y, z, w = (float(c) for c in q)
    out = np.empty(4)
    out[0], out[1], out[2], out[3] = _canonical_components(-x, -y, -z, w)
    return out


def rot_of(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit quaternion."""
    x, y, z, w = (float(c) for c in q)
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    out = np.empty((3, 3))
    out[0, 0] = 1.0 - 2.0 * (yy + zz)
    out[0, 1] = 2.0 * (xy - wz)
    out[0, 2] = 2.0 * (xz + wy)
    out[1, 0] = 2.0 * (xy + wz)
    out[1, 1] = 1.0 - 2.0 * (xx + zz)
    out[1, 2] = 2.0 * (yz - wx)
    out[2, 0] = 2.0 * (xz - wy)
    out[2, 1] = 2.0 * (yz + wx)
    out[2, 2] = 1.0 - 2.0 * (xx + yy)
    return out


def quat_of(rot: np.ndarray) -> np.ndarray:
    """Unit quaternion of a rotation matrix (Shepperd's method).

    Raises ValueError if the input is not orthonormal with determinant +1.
    """
    rot = np.asarray(rot, dtype=float)
    if rot.shape != (3, 3):
        raise ValueError("rotation matrix must be 3x3")
    if not np.allclose(rot.T @ rot, _I3, atol=1e-6) or np.linalg.det(rot) < 0.0:
        raise ValueError("matrix is not a rotation (orthonormality check failed)")
    trace = float(np.trace(rot))
    candidates = [trace, rot[0, 0], rot[1, 1], rot[2, 2]]
    i = int(np.argmax(candidates))
    if i == 0:
        w = 0.5 * np.sqrt(1.0 + trace)
        f = 0.25 / w
        q = np.array([
            f * (rot[2, 1] - rot[1, 2]),
            f * (rot[0, 2] - rot[2, 0]),
            f * (rot[1, 0] - rot[0, 1]),
            w,
        ])
    else:
        a = i - 1  # i in {1,2,3} maps to axes (0,1,2)
        b, c = (a + 1) % 3, (a + 2) % 3
        s = np.sqrt(1.0 + rot[a, a] - rot[b, b] - rot[c, c])
        xyz = np.zeros(3)
        xyz[a] = 0.5 * s
        f = 0.25 / (0.5 * s)
        xyz[b] = f * (rot[b, a] + rot[a, b])
        xyz[c] = f * (rot[c, a] + rot[a, c])
        w = f * (rot[c, b] - rot[b, c])
        q = np.array([xyz[0], xyz[1], xyz[2], w])
    return quat_canonical(q)


def quat_exp(theta_vec: np.ndarray) -> np.ndarray:
    """Quaternion of a rotation vector; equals quat_of(exp_so3(theta_vec))."""
    x, y, z = (float(c) for c in theta_vec)
    angle = math.sqrt(x * x + y * y + z * z)
    out = np.empty(4)
    if angle < SMALL_ANGLE:
        out[0], out[1], out[2], out[3] = _canonical_components(
            0.5 * x, 0.5 * y, 0.5 * z, 1.0)
        return out
    s = math.sin(0.5 * angle) / angle
    out[0], out[1], out[2], out[3] = _canonical_components(
        x * s, y * s, z * s, math.cos(0.5 * angle))
    return out


def rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply the rotation of q to a 3-vector."""
    return rot_of(q) @ np.asarray(v, dtype=float)


def inverse_position(p_ab: np.ndarray, rot_ab: np.ndarray) -> np.ndarray:
    """Translation of the inverted transform: p_BA = -R_AB^T p_AB."""
    return -(np.asarray(rot_ab).T @ np.asarray(p_ab, dtype=float))


def dR_transpose_sandwich(q_rot: np.ndarray, r_rot: np.ndarray,
                          s_rot: np.ndarray) -> np.ndarray:
    """Derivative of the rotation-valued expression Q R^T S w.r.t. a right
    perturbation of R, measured as a right tangent of the result: -S^T R."""
    return -(np.asarray(s_rot).T @ np.asarray(r_rot))


def dR_transpose_vector(q_rot: np.ndarray, r_rot: np.ndarray,
                        v: np.ndarray) -> np.ndarray:
    """Derivative of Q R^T v w.r.t. a right perturbation of R: Q [R^T v]x."""
    return np.asarray(q_rot) @ skew(np.asarray(r_rot).T @ np.asarray(v, dtype=float))


def dR_transpose_vector_jr(q_rot: np.ndarray, phi: np.ndarray,
                           v: np.ndarray) -> np.ndarray:
    """Variant of dR_transpose_vector for R parametrized as exp_so3(phi) with
    an additive perturbation of phi: Q [R^T v]x J_r(phi). Verification only;
    the filter Jacobians use the right-perturbation form (J_r -> I there)."""
    r_rot = exp_so3(phi)
    return dR_transpose_vector(q_rot, r_rot, v) @ right_jacobian(phi)


@dataclass
class Pose:
    """Rigid transform: translation p and unit quaternion q of frame B in A."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.q = quat_canonical(self.q)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.zeros(3), QUAT_IDENTITY.copy())

    def rot(self) -> np.ndarray:
        return rot_of(self.q)

    def compose(self, other: "Pose") -> "Pose":
        """T_AC = T_AB.compose(T_BC)."""
        return Pose(self.p + self.rot() @ other.p, quat_mul(self.q, other.q))

    def inverse(self) -> "Pose":
        rot = self.rot()
        return Pose(inverse_position(self.p, rot), quat_conj(self.q))

    def as_matrix(self) -> np.ndarray:
        mat = np.eye(4)
        mat[:3, :3] = self.rot()
        mat[:3, 3] = self.p
        return mat
