"""Residuals, Jacobians and EKF update for direct camera-to-object pose
measurements.

The measurement is used exactly as observed (object pose in the camera
frame), which decouples the position and rotation components: the position
residual never touches the measured rotation, so either block can be
rejected on its own. Rotation error states are right perturbations and the
rotation residual is the small-angle vector 2*qv/qw of the predicted-to-
measured quaternion difference.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import state as st
from .geom3 import quat_canonical, quat_conj, quat_mul, rot_of, skew
from .state import FullState, anchor_mask, inject_error, symmetrize

log = logging.getLogger(__name__)

# rotation residuals closer to pi than this are numerically meaningless
DEGENERATE_QW = 1e-6

MAX_CONDITION = 1e12


class DegenerateRotationError(ValueError):
    """Residual rotation is within ~1e-6 of pi; treat as a gating rejection."""


@dataclass
class PoseMeasurement:
    """One observation: relative object pose with per-axis reported variances.

    var_p / var_theta are the diagonal entries of the position and rotation
    measurement covariances (m^2, rad^2); the rotation block lives in the
    tangent space of the measured rotation.
    """

    t: float
    object_class: str
    p_co: np.ndarray
    q_co: np.ndarray
    var_p: np.ndarray
    var_theta: np.ndarray

    def __post_init__(self):
        self.p_co = np.asarray(self.p_co, dtype=float)
        self.q_co = quat_canonical(self.q_co)
        self.var_p = np.asarray(self.var_p, dtype=float)
        self.var_theta = np.asarray(self.var_theta, dtype=float)
        if np.any(self.var_p <= 0) or np.any(self.var_theta <= 0):
            raise ValueError("measurement variances must be positive")


@dataclass
class StackedUpdate:
    """Rows of all surviving residual blocks for one image, stacked
    [position, rotation] per object in match order."""

    residual: np.ndarray   # (m,)
    jacobian: np.ndarray   # (m, error_dim)
    noise_cov: np.ndarray  # (m, m)


def predicted_relative_position(core, extr, obj) -> np.ndarray:
    """Object position in the camera frame from the current estimate."""
    rot_ic = rot_of(extr.q_ic)
    rot_wi = rot_of(core.q_wi)
    return rot_ic.T @ (-extr.p_ic + rot_wi.T @ (obj.p_wo - core.p_wi))


def predicted_relative_quat(core, extr, obj) -> np.ndarray:
    """Object rotation in the camera frame from the current estimate."""
    return quat_mul(quat_mul(quat_conj(extr.q_ic), quat_conj(core.q_wi)),
                    obj.q_wo)


def residual_position(core, extr, obj, meas: PoseMeasurement) -> np.ndarray:
    """Position residual; independent of the measured rotation by design."""
    return meas.p_co - predicted_relative_position(core, extr, obj)


def small_angle_residual(q_pred: np.ndarray, q_meas: np.ndarray) -> np.ndarray:
    """2*qv/qw of the right quaternion difference pred^-1 (x) meas."""
    dq = quat_mul(quat_conj(q_pred), q_meas)
    if dq[3] <= DEGENERATE_QW:
        raise DegenerateRotationError(
            "rotation residual too close to pi for the small-angle form")
    return 2.0 * dq[:3] / dq[3]


def residual_rotation(core, extr, obj, meas: PoseMeasurement) -> np.ndarray:
    return small_angle_residual(predicted_relative_quat(core, extr, obj),
                                meas.q_co)


def jacobians(state: FullState, obj_index: int):
    """Analytic measurement Jacobians (3 x error_dim each) for one object.

    Returns the unmasked blocks; the anchor is masked out of the correction
    at update time, not here, so these always match finite differences of
    the residuals. Columns of other objects are zero because relative pose
    measurements of different objects are independent.
    """
    core, extr = state.core, state.extr
    obj = state.objects[obj_index]
    dim = state.error_dim
    rot_wi = rot_of(core.q_wi)
    rot_ic = rot_of(extr.q_ic)
    rot_wo = rot_of(obj.q_wo)
    ric_t = rot_ic.T
    rwi_t = rot_wi.T

    h_p = np.zeros((3, dim))
    h_p[:, st.POS] = -ric_t @ rwi_t
    h_p[:, st.ATT] = ric_t @ (skew(rwi_t @ obj.p_wo) - skew(rwi_t @ core.p_wi))
    h_p[:, st.P_IC] = -ric_t
    h_p[:, st.ATT_IC] = (-skew(ric_t @ extr.p_ic)
                         + skew(ric_t @ rwi_t @ obj.p_wo)
                         - skew(ric_t @ rwi_t @ core.p_wi))
    h_p[:, st.obj_pos_slice(obj_index)] = ric_t @ rwi_t

    h_r = np.zeros((3, dim))
    h_r[:, st.ATT] = -rot_wo.T @ rot_wi
    h_r[:, st.ATT_IC] = -rot_wo.T @ rot_wi @ rot_ic
    h_r[:, st.obj_att_slice(obj_index)] = np.eye(3)
    return h_p, h_r


def build_stacked(state: FullState, matches, decisions, prepared=None):
    """Stack residuals / Jacobians / noise for the surviving blocks.

    matches is a list of (obj_index, PoseMeasurement); decisions the matching
    list of GatingDecision. Returns None when every row is rejected (no
    update is performed then). The block-diagonal noise needs no inversion
    or rotation: the reported per-axis variances are used as-is.

    prepared optionally carries precomputed (z_p, z_r, h_p, h_r) tuples per
    match (z_r may be None when degenerate); the run loop passes these to
    avoid recomputing what gating already evaluated.
    """
    if not matches:
        raise ValueError("build_stacked requires at least one match")
    rows_z, rows_h, noise_diag = [], [], []
    for idx, ((obj_index, meas), decision) in enumerate(zip(matches,
                                                            decisions)):
        use_p, use_r = decision.keeps_position(), decision.keeps_rotation()
        if not (use_p or use_r):
            continue
        if prepared is None:
            obj = state.objects[obj_index]
            h_p, h_r = jacobians(state, obj_index)
            z_p = residual_position(state.core, state.extr, obj, meas)
            z_r = residual_rotation(state.core, state.extr, obj,
                                    meas) if use_r else None
        else:
            z_p, z_r, h_p, h_r = prepared[idx]
        if use_p:
            rows_z.append(z_p)
            rows_h.append(h_p)
            noise_diag.append(meas.var_p)
        if use_r:
            rows_z.append(z_r)
            rows_h.append(h_r)
            noise_diag.append(meas.var_theta)
    if not rows_z:
        return None
    return StackedUpdate(np.concatenate(rows_z), np.vstack(rows_h),
                         np.diag(np.concatenate(noise_diag)))


def ekf_update(state: FullState, cov: np.ndarray, stacked: StackedUpdate):
    """Error-state EKF update with Joseph-form covariance.

    The anchor object's gain rows are zeroed so its pose (and covariance
    block) never change; its columns stay in the Jacobian so the innovation
    covariance keeps the anchor's uncertainty, which keeps the filter
    consistent in the world frame. An ill-conditioned innovation covariance
    skips the update with a diagnostic.
    """
    z, h, r = stacked.residual, stacked.jacobian, stacked.noise_cov
    if z.size < 1:
        raise ValueError("empty stacked update")
    s = h @ cov @ h.T + r
    s = 0.5 * (s + s.T)
    eig = np.linalg.eigvalsh(s)
    if eig[0] <= 0.0 or eig[-1] / eig[0] > MAX_CONDITION:
        log.warning("innovation covariance condition number %.2e > %.0e; "
                    "update skipped",
                    float("inf") if eig[0] <= 0 else eig[-1] / eig[0],
                    MAX_CONDITION)
        return state, cov
    gain = np.linalg.solve(s, h @ cov).T
    if state.objects:
        gain[anchor_mask(state), :] = 0.0
    dx = gain @ z
    new_state = inject_error(state, dx)
    i_kh = np.eye(cov.shape[0]) - gain @ h
    new_cov = i_kh @ cov @ i_kh.T + gain @ r @ gain.T
    return new_state, symmetrize(new_cov)
