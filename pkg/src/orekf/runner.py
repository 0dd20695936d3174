"""Filter execution loop: consume an IMU stream and a measurement stream,
produce a RunRecord. The same loop serves freshly simulated and replayed
streams, so replays are bit-identical to the original run."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import gating as gt
from . import state as st
from . import update_direct as ud
from . import update_inverse as ui
from .matching import MatchConfig, initialize_object, match, project_measurement
from .metrics import RunRecord
from .propagation import ImuNoise, propagate_batch
from .sim import ImuStream, MeasurementStream
from .state import CoreState, Extrinsics, FullState

log = logging.getLogger(__name__)

INIT_VAR = 1e-12

FILTERS = ("direct", "inverse")
INVERSE_GATING = ("none", "chi2", "aor")


@dataclass
class FilterSetup:
    """Everything the filter loop needs besides the data streams."""

    extrinsics: Extrinsics
    imu_noise: ImuNoise = field(default_factory=ImuNoise)
    filter_type: str = "direct"
    gating: gt.GatingConfig = field(default_factory=gt.GatingConfig)
    matching: MatchConfig = field(default_factory=MatchConfig)
    divergence_bound: float = 10.0

    def __post_init__(self):
        if self.filter_type not in FILTERS:
            raise ValueError(f"unknown filter type {self.filter_type!r}")
        if (self.filter_type == "inverse"
                and self.gating.method not in INVERSE_GATING):
            raise ValueError(
                "the inverse filter couples position and rotation; it "
                f"supports gating {INVERSE_GATING}, not "
                f"{self.gating.method!r}")


def _initial_state(meas_stream: MeasurementStream,
                   setup: FilterSetup) -> tuple:
    core = CoreState(meas_stream.truth_pos[0].copy(),
                     meas_stream.truth_vel[0].copy(),
                     meas_stream.truth_quat[0].copy(),
                     np.zeros(3), np.zeros(3))
    state = FullState(core, setup.extrinsics.copy(), [])
    cov = np.eye(st.BASE_DIM) * INIT_VAR
    return state, cov


def _prepare_match(state, obj_index, meas, direct: bool):
    """Residuals and Jacobians for one matched measurement, computed once.

    Returns (payload, z_p, z_r, h_p, h_r, noise_p, noise_r): payload is the
    measurement handed to the stacker (inverted for the inverse filter) and
    z_r is None when the rotation residual is degenerate (near pi).
    """
    obj = state.objects[obj_index]
    if direct:
        payload = meas
        h_p, h_r = ud.jacobians(state, obj_index)
        z_p = ud.residual_position(state.core, state.extr, obj, meas)
        noise_p = np.diag(meas.var_p)
        noise_r = np.diag(meas.var_theta)
        try:
            z_r = ud.residual_rotation(state.core, state.extr, obj, meas)
        except ud.DegenerateRotationError:
            z_r = None
    else:
        payload = ui.invert_measurement(meas)
        h_p, h_r = ui.jacobians(state, obj_index)
        z_p = ui.residual_position(state.core, state.extr, obj, payload)
        noise_p, noise_r = payload.cov_p, payload.cov_theta
        try:
            z_r = ui.residual_rotation(state.core, state.extr, obj, payload)
        except ud.DegenerateRotationError:
            z_r = None
    return payload, z_p, z_r, h_p, h_r, noise_p, noise_r


def _decide(cov, meas, prep, setup: FilterSetup):
    """Gating decision for one matched measurement, including the forced
    rejection of rotation residuals that are degenerate (near pi)."""
    cfg = setup.gating
    method = cfg.method
    _, z_p, z_r, h_p, h_r, noise_p, noise_r = prep
    degenerate = z_r is None

    if method == "none":
        decision = gt.GatingDecision(gt.Verdict.ACCEPT_ALL, 0.0, "none")
    elif method == "aor":
        decision = gt.aor(meas, cfg)
    elif method == "aorp":
        decision = gt.aorp(meas, cfg)
    elif method == "chi2":
        if degenerate:
            decision = gt.GatingDecision(gt.Verdict.REJECT_ALL, float("inf"),
                                         "chi2")
        else:
            z = np.concatenate([z_p, z_r])
            h = np.vstack([h_p, h_r])
            noise = np.zeros((6, 6))
            noise[:3, :3] = noise_p
            noise[3:, 3:] = noise_r
            decision = gt.chi2_full(z, h, cov, noise, cfg.chi2_alpha)
    else:  # chi2p (direct filter only; setup validation enforces that)
        if degenerate:
            d_pos = gt.chi2_partial(z_p, np.zeros(3), h_p, h_r, cov,
                                    noise_p, noise_r, cfg.chi2_alpha)
            decision = gt.GatingDecision(
                gt.Verdict.REJECT_ROTATION if d_pos.keeps_position()
                else gt.Verdict.REJECT_ALL, d_pos.statistic, "chi2p")
        else:
            decision = gt.chi2_partial(z_p, z_r, h_p, h_r, cov, noise_p,
                                       noise_r, cfg.chi2_alpha)

    if degenerate and decision.keeps_rotation():
        verdict = (gt.Verdict.REJECT_ROTATION
                   if decision.keeps_position()
                   and setup.filter_type == "direct"
                   else gt.Verdict.REJECT_ALL)
        decision = gt.GatingDecision(verdict, decision.statistic,
                                     decision.method)
    return decision


def run_filter(imu: ImuStream, meas_stream: MeasurementStream,
               setup: FilterSetup) -> RunRecord:
    """Run the configured filter over the streams.

    Camera ticks must align with IMU ticks (the camera rate divides the IMU
    rate); between camera ticks the consecutive IMU samples are averaged
    pairwise (trapezoidal measurement averaging) and propagated in one
    batch. The run stops early and is marked diverged when the position
    error exceeds the divergence bound.
    """
    if np.any(np.diff(imu.t) <= 0) or np.any(np.diff(meas_stream.t) <= 0):
        raise ValueError("timestamps must be strictly increasing")
    n_imu = len(imu.t) - 1
    n_cam = len(meas_stream.t) - 1
    if n_cam > 0:
        ratio = n_imu / n_cam
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("camera ticks must align with IMU ticks")
        ratio = int(round(ratio))
    else:
        ratio = n_imu
    dt = float(imu.t[1] - imu.t[0]) if n_imu else 0.0

    state, cov = _initial_state(meas_stream, setup)
    next_obj_id = 0
    counts = {"accepted": 0, "rejected_all": 0, "rejected_position": 0,
              "rejected_rotation": 0, "degenerate": 0, "updates": 0,
              "skipped_updates": 0, "initialized": 0}
    rec_t, rec_pt, rec_qt, rec_pe, rec_qe = [], [], [], [], []
    rec_cp, rec_ca = [], []
    diverged = False

    for k in range(n_cam + 1):
        if k > 0:
            i0, i1 = (k - 1) * ratio, k * ratio
            # midpoint-representative samples from consecutive endpoints
            acc = 0.5 * (imu.acc[i0:i1] + imu.acc[i0 + 1:i1 + 1])
            gyro = 0.5 * (imu.gyro[i0:i1] + imu.gyro[i0 + 1:i1 + 1])
            state, cov = propagate_batch(state, cov, acc, gyro, dt,
                                         setup.imu_noise)

        frame = meas_stream.ticks[k]
        if frame:
            projected = [(project_measurement(state.core, state.extr, m),
                          m.object_class) for m in frame]
            pairs, unmatched = match(projected, state.objects, setup.matching)
            for mi in unmatched:
                state, cov = initialize_object(state, cov, frame[mi],
                                               next_obj_id)
                next_obj_id += 1
                counts["initialized"] += 1
            if pairs:
                direct = setup.filter_type == "direct"
                matches, decisions, prepared = [], [], []
                for mi, oi in pairs:
                    prep = _prepare_match(state, oi, frame[mi], direct)
                    decision = _decide(cov, frame[mi], prep, setup)
                    if decision.verdict is gt.Verdict.ACCEPT_ALL:
                        counts["accepted"] += 1
                    else:
                        counts["rejected_" + decision.verdict.value[7:]] += 1
                    if prep[2] is None:
                        counts["degenerate"] += 1
                    matches.append((oi, prep[0]))
                    decisions.append(decision)
                    prepared.append(prep[1:5])
                builder = ud.build_stacked if direct else ui.build_stacked
                stacked = builder(state, matches, decisions, prepared)
                if stacked is not None:
                    counts["updates"] += 1
                    new_state, new_cov = ud.ekf_update(state, cov, stacked)
                    if new_cov is cov:
                        counts["skipped_updates"] += 1
                    state, cov = new_state, new_cov

        rec_t.append(meas_stream.t[k])
        rec_pt.append(meas_stream.truth_pos[k])
        rec_qt.append(meas_stream.truth_quat[k])
        rec_pe.append(state.core.p_wi.copy())
        rec_qe.append(state.core.q_wi.copy())
        rec_cp.append(cov[st.POS, st.POS].copy())
        rec_ca.append(cov[st.ATT, st.ATT].copy())

        err = np.linalg.norm(state.core.p_wi - meas_stream.truth_pos[k])
        if err > setup.divergence_bound:
            diverged = True
            log.info("diverged at t=%.2f (|e|=%.2f m)", meas_stream.t[k], err)
            break

    return RunRecord(np.array(rec_t), np.array(rec_pt), np.array(rec_qt),
                     np.array(rec_pe), np.array(rec_qe), np.array(rec_cp),
                     np.array(rec_ca), diverged=diverged, counts=counts)
