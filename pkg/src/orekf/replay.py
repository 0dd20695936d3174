"""Line-delimited replay log: every IMU sample, ground-truth snapshot, and
measurement of a run, as decimal text with 17 significant digits so a
replayed run is bit-identical to the original."""

from __future__ import annotations

import numpy as np

from .sim import ImuStream, MeasurementStream
from .update_direct import PoseMeasurement

FORMAT_HEADER = "replay-log 1"


def _f(x: float) -> str:
    return format(float(x), ".17g")


class ReplayLogError(ValueError):
    pass


def write_log(path, imu: ImuStream, meas: MeasurementStream):
    """Time-ordered dump: IMU lines, then TRUTH + MEAS lines at each camera
    tick they precede."""
    n_imu = len(imu.t)
    n_cam = len(meas.t)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(FORMAT_HEADER + "\n")
        i = 0
        for k in range(n_cam):
            while i < n_imu and imu.t[i] <= meas.t[k] + 1e-12:
                fh.write(",".join(
                    [_f(imu.t[i]), "IMU"]
                    + [_f(v) for v in imu.acc[i]]
                    + [_f(v) for v in imu.gyro[i]]) + "\n")
                i += 1
            fh.write(",".join(
                [_f(meas.t[k]), "TRUTH"]
                + [_f(v) for v in meas.truth_pos[k]]
                + [_f(v) for v in meas.truth_vel[k]]
                + [_f(v) for v in meas.truth_quat[k]]) + "\n")
            for m in meas.ticks[k]:
                fh.write(",".join(
                    [_f(m.t), "MEAS", m.object_class]
                    + [_f(v) for v in m.p_co]
                    + [_f(v) for v in m.q_co]
                    + [_f(v) for v in m.var_p]
                    + [_f(v) for v in m.var_theta]) + "\n")
        while i < n_imu:
            fh.write(",".join(
                [_f(imu.t[i]), "IMU"]
                + [_f(v) for v in imu.acc[i]]
                + [_f(v) for v in imu.gyro[i]]) + "\n")
            i += 1


def read_log(path):
    """Rebuild the (ImuStream, MeasurementStream) pair from a log.

    Raises ReplayLogError on a version mismatch, malformed or truncated
    lines, or non-monotone timestamps.
    """
    imu_rows, truth_rows, meas_rows = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != FORMAT_HEADER:
            raise ReplayLogError(
                f"unsupported log header {header!r} (expected "
                f"{FORMAT_HEADER!r})")
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            try:
                t = float(parts[0])
                kind = parts[1]
                if kind == "IMU":
                    if len(parts) != 8:
                        raise ValueError("IMU line needs 8 fields")
                    imu_rows.append([t] + [float(p) for p in parts[2:]])
                elif kind == "TRUTH":
                    if len(parts) != 12:
                        raise ValueError("TRUTH line needs 12 fields")
                    truth_rows.append([t] + [float(p) for p in parts[2:]])
                elif kind == "MEAS":
                    if len(parts) != 16:
                        raise ValueError("MEAS line needs 16 fields")
                    meas_rows.append((t, parts[2],
                                      [float(p) for p in parts[3:]]))
                else:
                    raise ValueError(f"unknown record kind {kind!r}")
            except (ValueError, IndexError) as exc:
                raise ReplayLogError(
                    f"line {line_no}: truncated or corrupt record "
                    f"({exc})") from None
    if not imu_rows or not truth_rows:
        raise ReplayLogError("log contains no IMU or TRUTH records")

    imu_arr = np.array(imu_rows)
    truth_arr = np.array(truth_rows)
    if np.any(np.diff(imu_arr[:, 0]) <= 0) or np.any(np.diff(truth_arr[:, 0]) <= 0):
        raise ReplayLogError("timestamps are not strictly increasing")
    imu = ImuStream(imu_arr[:, 0], imu_arr[:, 1:4], imu_arr[:, 4:7],
                    truth_pos=np.zeros((len(imu_rows), 3)),
                    truth_vel=np.zeros((len(imu_rows), 3)),
                    truth_quat=np.zeros((len(imu_rows), 4)),
                    truth_bias_gyro=np.zeros((len(imu_rows), 3)),
                    truth_bias_accel=np.zeros((len(imu_rows), 3)))
    ticks = [[] for _ in range(len(truth_rows))]
    t_cam = truth_arr[:, 0]
    for t, obj_class, vals in meas_rows:
        k = int(np.argmin(np.abs(t_cam - t)))
        if abs(t_cam[k] - t) > 1e-9:
            raise ReplayLogError(
                f"MEAS at t={t} does not align with any TRUTH tick")
        ticks[k].append(PoseMeasurement(
            t=t, object_class=obj_class, p_co=np.array(vals[0:3]),
            q_co=np.array(vals[3:7]), var_p=np.array(vals[7:10]),
            var_theta=np.array(vals[10:13])))
    meas = MeasurementStream(t_cam, ticks, truth_arr[:, 1:4],
                             truth_arr[:, 4:7], truth_arr[:, 7:11])
    return imu, meas
