"""Synthetic world: analytic 6-DoF trajectories, exact IMU synthesis, object
constellations, and perturbed relative pose measurements with emulated
per-measurement reported uncertainty (including scheduled ambiguity
episodes that inflate the true rotation noise).

Reporting modes:
  * "exact":    clean base noise, reported covariance equals the generating
                one (episode schedule ignored).
  * "fixed":    episode schedule active in the true noise, but a constant
                covariance is reported (the mis-specified, hand-tuned case).
  * "episodes": episode schedule active, with the reported rotation sigma
                inflated by the window's factor. The true noise is inflated
                by factor * episode_excess: an ambiguity-aware sensor flags
                difficult views with a raised uncertainty, but the raised
                value still under-captures the actual error tails, which is
                what makes threshold- and plausibility-based rejection
                meaningful for it.

All generators are pure functions of (spec, seed) with a fixed draw order,
so identical seeds give bit-identical streams and runs parallelize without
shared generator state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geom3 import Pose, quat_of, rot_of
from .propagation import ImuNoise
from .state import Extrinsics
from .update_direct import PoseMeasurement

TWO_PI = 2.0 * np.pi


def _as3(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = np.full(3, float(arr))
    return arr


@dataclass
class TrajectorySpec:
    """Sum-of-sinusoids trajectory with analytic derivatives.

    Euler angles are (yaw, pitch, roll), applied as
    R_wi = Rz(yaw) Ry(pitch) Rx(roll). Position in meters, angles in rad.
    """

    duration: float = 20.0
    pos_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    pos_amp: np.ndarray = field(default_factory=lambda: np.zeros(3))
    pos_freq: np.ndarray = field(default_factory=lambda: np.full(3, 0.2))
    pos_phase: np.ndarray = field(default_factory=lambda: np.zeros(3))
    eul_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    eul_amp: np.ndarray = field(default_factory=lambda: np.zeros(3))
    eul_freq: np.ndarray = field(default_factory=lambda: np.full(3, 0.1))
    eul_phase: np.ndarray = field(default_factory=lambda: np.zeros(3))
    seed: int = 0

    def __post_init__(self):
        for name in ("pos_offset", "pos_amp", "pos_freq", "pos_phase",
                     "eul_offset", "eul_amp", "eul_freq", "eul_phase"):
            setattr(self, name, _as3(getattr(self, name)))

    @classmethod
    def randomized(cls, seed: int, duration: float = 20.0,
                   pos_scale: float = 0.3, eul_scale: float = 0.15):
        """Phase/amplitude diversity keyed by a seed."""
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(seed, spawn_key=(99,))))
        return cls(
            duration=duration,
            pos_amp=rng.uniform(0.3, 1.0, 3) * pos_scale,
            pos_freq=rng.uniform(0.1, 0.35, 3),
            pos_phase=rng.uniform(0, TWO_PI, 3),
            eul_amp=rng.uniform(0.3, 1.0, 3) * eul_scale,
            eul_freq=rng.uniform(0.05, 0.25, 3),
            eul_phase=rng.uniform(0, TWO_PI, 3),
            seed=seed,
        )

    def position(self, t):
        t = np.asarray(t, dtype=float)[..., None]
        return self.pos_offset + self.pos_amp * np.sin(
            TWO_PI * self.pos_freq * t + self.pos_phase)

    def velocity(self, t):
        t = np.asarray(t, dtype=float)[..., None]
        w = TWO_PI * self.pos_freq
        return self.pos_amp * w * np.cos(w * t + self.pos_phase)

    def acceleration(self, t):
        t = np.asarray(t, dtype=float)[..., None]
        w = TWO_PI * self.pos_freq
        return -self.pos_amp * w * w * np.sin(w * t + self.pos_phase)

    def euler(self, t):
        t = np.asarray(t, dtype=float)[..., None]
        return self.eul_offset + self.eul_amp * np.sin(
            TWO_PI * self.eul_freq * t + self.eul_phase)

    def euler_rates(self, t):
        t = np.asarray(t, dtype=float)[..., None]
        w = TWO_PI * self.eul_freq
        return self.eul_amp * w * np.cos(w * t + self.eul_phase)

    def rotation(self, t):
        yaw, pitch, roll = np.moveaxis(self.euler(t), -1, 0)
        return _rot_zyx(yaw, pitch, roll)

    def quaternion(self, t):
        yaw, pitch, roll = np.moveaxis(self.euler(t), -1, 0)
        return _quat_zyx(yaw, pitch, roll)

    def omega_body(self, t):
        """Body angular velocity from the Euler-rate kinematics (3-2-1)."""
        yaw, pitch, roll = np.moveaxis(self.euler(t), -1, 0)
        dyaw, dpitch, droll = np.moveaxis(self.euler_rates(t), -1, 0)
        sph, cph = np.sin(roll), np.cos(roll)
        sth, cth = np.sin(pitch), np.cos(pitch)
        wx = droll - dyaw * sth
        wy = dpitch * cph + dyaw * cth * sph
        wz = -dpitch * sph + dyaw * cth * cph
        return np.stack([wx, wy, wz], axis=-1)


def _rot_zyx(yaw, pitch, roll):
    sy, cy = np.sin(yaw), np.cos(yaw)
    sp, cp = np.sin(pitch), np.cos(pitch)
    sr, cr = np.sin(roll), np.cos(roll)
    rot = np.empty(np.shape(yaw) + (3, 3))
    rot[..., 0, 0] = cy * cp
    rot[..., 0, 1] = cy * sp * sr - sy * cr
    rot[..., 0, 2] = cy * sp * cr + sy * sr
    rot[..., 1, 0] = sy * cp
    rot[..., 1, 1] = sy * sp * sr + cy * cr
    rot[..., 1, 2] = sy * sp * cr - cy * sr
    rot[..., 2, 0] = -sp
    rot[..., 2, 1] = cp * sr
    rot[..., 2, 2] = cp * cr
    return rot


def _quat_zyx(yaw, pitch, roll):
    cy, sy = np.cos(0.5 * yaw), np.sin(0.5 * yaw)
    cp, sp = np.cos(0.5 * pitch), np.sin(0.5 * pitch)
    cr, sr = np.cos(0.5 * roll), np.sin(0.5 * roll)
    q = np.empty(np.shape(yaw) + (4,))
    q[..., 0] = sr * cp * cy - cr * sp * sy
    q[..., 1] = cr * sp * cy + sr * cp * sy
    q[..., 2] = cr * cp * sy - sr * sp * cy
    q[..., 3] = cr * cp * cy + sr * sp * sy
    flip = q[..., 3] < 0
    q[flip] = -q[flip]
    return q


def camera_forward_extrinsics(p_ic=(0.1, 0.0, 0.0)) -> Extrinsics:
    """Camera rigidly ahead of the IMU, optical axis (+z of C) along body +x,
    image x right (-y body), image y down (-z body)."""
    rot_ic = np.array([
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
    ])
    return Extrinsics(np.asarray(p_ic, dtype=float), quat_of(rot_ic))


@dataclass
class WorldObject:
    obj_id: int
    obj_class: str
    pose: Pose


@dataclass
class WorldSpec:
    objects: list

    def __post_init__(self):
        ids = [o.obj_id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("object ids must be unique")


@dataclass
class SensorSpec:
    imu_rate: float = 200.0
    cam_rate: float = 20.0
    sigma_p: np.ndarray = field(default_factory=lambda: np.full(3, 0.01))
    sigma_theta: np.ndarray = field(default_factory=lambda: np.full(3, 0.0175))
    mode: str = "exact"
    fixed_sigma_p: np.ndarray = field(default_factory=lambda: np.full(3, 0.04))
    fixed_sigma_theta: np.ndarray = field(
        default_factory=lambda: np.full(3, 0.628))
    episodes: list = field(default_factory=list)  # (t_start, t_end, factor)
    episode_excess: float = 2.5
    sigma_floor: float = 1e-6
    fov_deg: float = 90.0
    max_range: float = 10.0
    extrinsics: Extrinsics = field(default_factory=camera_forward_extrinsics)

    def __post_init__(self):
        if self.imu_rate <= 0 or self.cam_rate <= 0:
            raise ValueError("rates must be positive")
        ratio = self.imu_rate / self.cam_rate
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("camera rate must divide the IMU rate")
        if self.mode not in ("exact", "fixed", "episodes"):
            raise ValueError(f"unknown reporting mode {self.mode!r}")
        self.sigma_p = _as3(self.sigma_p)
        self.sigma_theta = _as3(self.sigma_theta)
        self.fixed_sigma_p = _as3(self.fixed_sigma_p)
        self.fixed_sigma_theta = _as3(self.fixed_sigma_theta)

    def rotation_inflation(self, t: float):
        """(true, reported) rotation-noise inflation factors at time t.

        Both are 1.0 off-episode; inside a window the reported factor is the
        schedule's value and the true factor carries the additional
        episode_excess. The schedule only acts in the 'fixed' and 'episodes'
        modes.
        """
        if self.mode == "exact":
            return 1.0, 1.0
        for t0, t1, factor in self.episodes:
            if t0 <= t < t1:
                return float(factor) * self.episode_excess, float(factor)
        return 1.0, 1.0


@dataclass
class ImuStream:
    t: np.ndarray
    acc: np.ndarray
    gyro: np.ndarray
    truth_pos: np.ndarray
    truth_vel: np.ndarray
    truth_quat: np.ndarray
    truth_bias_gyro: np.ndarray
    truth_bias_accel: np.ndarray


@dataclass
class MeasurementStream:
    t: np.ndarray
    ticks: list            # list (per camera tick) of lists of PoseMeasurement
    truth_pos: np.ndarray
    truth_vel: np.ndarray
    truth_quat: np.ndarray


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(seed, spawn_key=(stream,))))


def _exp_so3_batch(rotvecs: np.ndarray) -> np.ndarray:
    """Rodrigues formula over the leading axes of (..., 3) rotation vectors."""
    angle = np.linalg.norm(rotvecs, axis=-1)
    small = angle < 1e-7
    safe = np.where(small, 1.0, angle)
    s = np.where(small, 1.0, np.sin(safe) / safe)
    c = np.where(small, 0.5, (1.0 - np.cos(safe)) / (safe * safe))
    k = np.zeros(rotvecs.shape + (3,))
    x, y, z = rotvecs[..., 0], rotvecs[..., 1], rotvecs[..., 2]
    k[..., 0, 1] = -z
    k[..., 0, 2] = y
    k[..., 1, 0] = z
    k[..., 1, 2] = -x
    k[..., 2, 0] = -y
    k[..., 2, 1] = x
    kk = k @ k
    return (np.eye(3) + s[..., None, None] * k
            + c[..., None, None] * kk)


def _quat_of_batch(rots: np.ndarray) -> np.ndarray:
    """Scalar-last quaternions of a stack of rotation matrices, qw >= 0.

    Branch-free Shepperd: evaluate all four candidate formulations and keep
    the best-conditioned one per element.
    """
    r = rots
    t = np.einsum("...ii->...", r)
    cand = np.empty(r.shape[:-2] + (4, 4))
    # candidate 0: trace
    cand[..., 0, 3] = 1.0 + t
    cand[..., 0, 0] = r[..., 2, 1] - r[..., 1, 2]
    cand[..., 0, 1] = r[..., 0, 2] - r[..., 2, 0]
    cand[..., 0, 2] = r[..., 1, 0] - r[..., 0, 1]
    # candidates 1..3: dominant diagonal element a
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        cand[..., 1 + a, a] = 1.0 + r[..., a, a] - r[..., b, b] - r[..., c, c]
        cand[..., 1 + a, b] = r[..., b, a] + r[..., a, b]
        cand[..., 1 + a, c] = r[..., c, a] + r[..., a, c]
        cand[..., 1 + a, 3] = r[..., c, b] - r[..., b, c]
    scores = np.stack([1.0 + t, 1.0 + r[..., 0, 0] - r[..., 1, 1] - r[..., 2, 2],
                       1.0 + r[..., 1, 1] - r[..., 0, 0] - r[..., 2, 2],
                       1.0 + r[..., 2, 2] - r[..., 0, 0] - r[..., 1, 1]],
                      axis=-1)
    best = np.argmax(scores, axis=-1)
    q = np.take_along_axis(cand, best[..., None, None].repeat(4, axis=-1),
                           axis=-2)[..., 0, :]
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    flip = q[..., 3] < 0
    q[flip] = -q[flip]
    return q


def gen_imu(traj: TrajectorySpec, noise: ImuNoise, rate: float,
            seed: int) -> ImuStream:
    """Exact inversion of the strapdown dynamics plus simulated errors.

    a_m = R_wi^T (a_world + g) + b_a + n_a, w_m = w_body + b_w + n_w, with
    biases as discrete random walks starting at zero. Draw order is fixed:
    accel white, gyro white, accel-bias increments, gyro-bias increments.
    """
    n_steps = int(round(traj.duration * rate))
    t = np.arange(n_steps + 1) / rate
    dt = 1.0 / rate
    rng = _rng(seed, 0)
    white_acc = rng.standard_normal((n_steps + 1, 3))
    white_gyro = rng.standard_normal((n_steps + 1, 3))
    walk_acc = rng.standard_normal((n_steps + 1, 3))
    walk_gyro = rng.standard_normal((n_steps + 1, 3))
    walk_acc[0] = 0.0
    walk_gyro[0] = 0.0
    bias_accel = np.cumsum(walk_acc * (noise.sigma_accel_bias * np.sqrt(dt)),
                           axis=0)
    bias_gyro = np.cumsum(walk_gyro * (noise.sigma_gyro_bias * np.sqrt(dt)),
                          axis=0)

    rot = traj.rotation(t)
    a_world = traj.acceleration(t)
    specific = np.einsum("nji,nj->ni", rot, a_world + noise.gravity)
    acc = specific + bias_accel + white_acc * (noise.sigma_acc / np.sqrt(dt))
    gyro = (traj.omega_body(t) + bias_gyro
            + white_gyro * (noise.sigma_gyro / np.sqrt(dt)))
    return ImuStream(t, acc, gyro, traj.position(t), traj.velocity(t),
                     traj.quaternion(t), bias_gyro, bias_accel)


def _relative_poses(traj: TrajectorySpec, world: WorldSpec,
                    extr: Extrinsics, t: np.ndarray):
    """True (p_co, R_co) for every (tick, object)."""
    rot_wi = traj.rotation(t)
    p_wi = traj.position(t)
    rot_wc = rot_wi @ rot_of(extr.q_ic)
    p_wc = p_wi + np.einsum("nij,j->ni", rot_wi, extr.p_ic)
    n_t = t.shape[0]
    n_o = len(world.objects)
    p_co = np.empty((n_t, n_o, 3))
    rot_co = np.empty((n_t, n_o, 3, 3))
    for j, obj in enumerate(world.objects):
        d = obj.pose.p - p_wc
        p_co[:, j] = np.einsum("nji,nj->ni", rot_wc, d)
        rot_co[:, j] = np.einsum("nji,jk->nik", rot_wc, obj.pose.rot())
    return p_co, rot_co


def visibility(traj: TrajectorySpec, world: WorldSpec, t: float,
               fov_deg: float, max_range_m: float,
               extr: Extrinsics | None = None) -> list:
    """Ids of objects inside the camera frustum (cone half-angle fov/2 about
    the optical axis +z, range limit inclusive) at time t."""
    if extr is None:
        extr = camera_forward_extrinsics()
    p_co, _ = _relative_poses(traj, world, extr, np.atleast_1d(float(t)))
    out = []
    half = np.deg2rad(fov_deg) / 2.0
    for j, obj in enumerate(world.objects):
        v = p_co[0, j]
        rng_m = float(np.linalg.norm(v))
        if rng_m < 1e-9 or rng_m > max_range_m:
            continue
        angle = float(np.arccos(np.clip(v[2] / rng_m, -1.0, 1.0)))
        if angle <= half:
            out.append(obj.obj_id)
    return out


def gen_measurements(traj: TrajectorySpec, world: WorldSpec,
                     sensor: SensorSpec, seed: int) -> MeasurementStream:
    """Per camera tick, perturbed relative poses of the visible objects.

    Translation noise is additive; rotation noise is a right perturbation
    exp_so3(n) in the tangent of the measured rotation. Noise is drawn for
    every (tick, object) pair in a fixed order regardless of visibility, so
    streams with different worlds or FoV settings stay reproducible.
    """
    n_ticks = int(round(traj.duration * sensor.cam_rate))
    t = np.arange(n_ticks + 1) / sensor.cam_rate
    extr = sensor.extrinsics
    p_co, rot_co = _relative_poses(traj, world, extr, t)
    n_o = len(world.objects)
    rng = _rng(seed, 1)
    noise_p = rng.standard_normal((n_ticks + 1, n_o, 3))
    noise_r = rng.standard_normal((n_ticks + 1, n_o, 3))

    floor = sensor.sigma_floor
    half = np.deg2rad(sensor.fov_deg) / 2.0
    inflations = np.array([sensor.rotation_inflation(tk) for tk in t])
    sig_theta_true = sensor.sigma_theta * inflations[:, 0:1]  # (K, 3)
    p_meas_all = p_co + noise_p * sensor.sigma_p
    rot_meas_all = rot_co @ _exp_so3_batch(
        noise_r * sig_theta_true[:, None, :])
    q_meas_all = _quat_of_batch(rot_meas_all)

    ticks = []
    for k in range(n_ticks + 1):
        if sensor.mode == "fixed":
            rep_p = np.maximum(sensor.fixed_sigma_p, floor)
            rep_t = np.maximum(sensor.fixed_sigma_theta, floor)
        else:
            rep_p = np.maximum(sensor.sigma_p, floor)
            rep_t = np.maximum(sensor.sigma_theta * inflations[k, 1], floor)
        frame = []
        for j, obj in enumerate(world.objects):
            v = p_co[k, j]
            rng_m = float(np.linalg.norm(v))
            if rng_m < 1e-9 or rng_m > sensor.max_range:
                continue
            if np.arccos(np.clip(v[2] / rng_m, -1.0, 1.0)) > half:
                continue
            frame.append(PoseMeasurement(
                t=t[k], object_class=obj.obj_class, p_co=p_meas_all[k, j],
                q_co=q_meas_all[k, j], var_p=rep_p**2, var_theta=rep_t**2))
        ticks.append(frame)
    return MeasurementStream(t, ticks, traj.position(t), traj.velocity(t),
                             traj.quaternion(t))
