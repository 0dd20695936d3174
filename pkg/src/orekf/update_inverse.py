"""Baseline filter using the inverted measurement: the camera pose expressed
in the object frame.

Inverting the 6-DoF measurement makes the position part depend on the
measured rotation (p_oc = -R_co^T p_co), so rotation errors leak into the
position residual and the measurement covariance must be rotated by the
measured rotation. Partial rejection is deliberately unavailable here: the
blocks are coupled by the inversion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import state as st
from .gating import GatingDecision, Verdict
from .geom3 import quat_conj, quat_mul, rot_of, skew
from .state import FullState
from .update_direct import (
    PoseMeasurement,
    StackedUpdate,
    ekf_update,
    small_angle_residual,
)


@dataclass
class InvertedMeasurement:
    """Camera pose in the object frame with full (rotated) covariance blocks."""

    t: float
    object_class: str
    p_oc: np.ndarray
    q_oc: np.ndarray
    cov_p: np.ndarray
    cov_theta: np.ndarray


def invert_measurement(meas: PoseMeasurement) -> InvertedMeasurement:
    """Invert the relative pose and rotate both covariance blocks into the
    object frame. No cross terms appear between the two blocks, but each
    3x3 block picks up off-diagonal correlations from the rotation."""
    rot_oc = rot_of(meas.q_co).T
    return InvertedMeasurement(
        t=meas.t,
        object_class=meas.object_class,
        p_oc=-(rot_oc @ meas.p_co),
        q_oc=quat_conj(meas.q_co),
        cov_p=rot_oc @ np.diag(meas.var_p) @ rot_oc.T,
        cov_theta=rot_oc @ np.diag(meas.var_theta) @ rot_oc.T,
    )


def predicted_camera_in_object(core, extr, obj):
    """Predicted (p_oc, q_oc) from the current estimate."""
    rot_wo = rot_of(obj.q_wo)
    p_wc = core.p_wi + rot_of(core.q_wi) @ extr.p_ic
    p_oc = rot_wo.T @ (p_wc - obj.p_wo)
    q_oc = quat_mul(quat_mul(quat_conj(obj.q_wo), core.q_wi), extr.q_ic)
    return p_oc, q_oc


def residual_position(core, extr, obj, inv: InvertedMeasurement) -> np.ndarray:
    p_oc, _ = predicted_camera_in_object(core, extr, obj)
    return inv.p_oc - p_oc


def residual_rotation(core, extr, obj, inv: InvertedMeasurement) -> np.ndarray:
    _, q_oc = predicted_camera_in_object(core, extr, obj)
    return small_angle_residual(q_oc, inv.q_oc)


def jacobians(state: FullState, obj_index: int):
    """Analytic Jacobians of the inverted-measurement model, derived with the
    same right-perturbation rules as the direct filter (unmasked)."""
    core, extr = state.core, state.extr
    obj = state.objects[obj_index]
    dim = state.error_dim
    rot_wi = rot_of(core.q_wi)
    rot_ic = rot_of(extr.q_ic)
    rot_wo = rot_of(obj.q_wo)
    rwo_t = rot_wo.T
    p_wc = core.p_wi + rot_wi @ extr.p_ic

    h_p = np.zeros((3, dim))
    h_p[:, st.POS] = rwo_t
    h_p[:, st.ATT] = -rwo_t @ rot_wi @ skew(extr.p_ic)
    h_p[:, st.P_IC] = rwo_t @ rot_wi
    h_p[:, st.obj_pos_slice(obj_index)] = -rwo_t
    h_p[:, st.obj_att_slice(obj_index)] = skew(rwo_t @ (p_wc - obj.p_wo))

    h_r = np.zeros((3, dim))
    h_r[:, st.ATT] = rot_ic.T
    h_r[:, st.ATT_IC] = np.eye(3)
    h_r[:, st.obj_att_slice(obj_index)] = -rot_ic.T @ rot_wi.T @ rot_wo
    return h_p, h_r


def build_stacked(state: FullState, matches, decisions, prepared=None):
    """Stack surviving inverted measurements. Only full-measurement verdicts
    are legal here; the inversion couples the blocks, so partial rejection is
    not supported. prepared optionally carries precomputed
    (z_p, z_r, h_p, h_r) tuples per match."""
    if not matches:
        raise ValueError("build_stacked requires at least one match")
    rows_z, rows_h, blocks = [], [], []
    for idx, ((obj_index, inv), decision) in enumerate(zip(matches,
                                                           decisions)):
        if decision.verdict in (Verdict.REJECT_POSITION,
                                Verdict.REJECT_ROTATION):
            raise ValueError(
                "partial rejection is not supported by the inverse filter")
        if decision.verdict is Verdict.REJECT_ALL:
            continue
        if prepared is None:
            obj = state.objects[obj_index]
            h_p, h_r = jacobians(state, obj_index)
            z_p = residual_position(state.core, state.extr, obj, inv)
            z_r = residual_rotation(state.core, state.extr, obj, inv)
        else:
            z_p, z_r, h_p, h_r = prepared[idx]
        rows_z.extend([z_p, z_r])
        rows_h.extend([h_p, h_r])
        blocks.extend([inv.cov_p, inv.cov_theta])
    if not rows_z:
        return None
    m = 3 * len(blocks)
    noise = np.zeros((m, m))
    for k, block in enumerate(blocks):
        noise[3 * k:3 * k + 3, 3 * k:3 * k + 3] = block
    return StackedUpdate(np.concatenate(rows_z), np.vstack(rows_h), noise)


def inverse_update(state: FullState, cov: np.ndarray, matches, decisions):
    """Full EKF update from inverted measurements (see build_stacked)."""
    stacked = build_stacked(state, matches, decisions)
    if stacked is None:
        return state, cov
    return ekf_update(state, cov, stacked)


__all__ = [
    "InvertedMeasurement",
    "invert_measurement",
    "residual_position",
    "residual_rotation",
    "jacobians",
    "build_stacked",
    "inverse_update",
    "GatingDecision",
]
