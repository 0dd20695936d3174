"""Outlier rejection on a scene with ambiguity episodes: for 30% of the run
the object's viewpoint is ambiguous, the sensor's reported rotation sigma
spikes above both thresholds, and the true rotation errors exceed even the
raised report. Compare all five gating strategies on identical data.
"""

import numpy as np

from orekf.gating import GatingConfig
from orekf.matching import MatchConfig
from orekf.metrics import rmse_position
from orekf.presets import get_preset
from orekf.propagation import ImuNoise
from orekf.runner import FilterSetup, run_filter
from orekf.sim import SensorSpec, camera_forward_extrinsics, gen_imu, \
    gen_measurements

preset = get_preset("preset09")  # single mug + two ambiguity windows
noise = ImuNoise(sigma_acc=0.02, sigma_gyro=0.008)
sensor_kw = dict(sigma_p=0.02, sigma_theta=0.0875, mode="episodes",
                 episodes=preset.episodes, episode_excess=4.0)

print("episode windows:", preset.episodes)
print(f"reported rotation sigma inside a window: "
      f"{0.0875 * preset.episodes[0][2]:.3f} rad "
      f"(> 0.35 full-rejection and > 0.175 partial-rejection thresholds)\n")

print(f"{'method':8s} {'mean RMSE [m]':>14s} {'diverged':>9s}   verdict counts")
for method in ("none", "chi2", "chi2p", "aor", "aorp"):
    rmses, div = [], 0
    counts = None
    for seed in range(8):
        imu = gen_imu(preset.trajectory, noise, 200.0, seed=seed)
        meas = gen_measurements(preset.trajectory, preset.world,
                                SensorSpec(**sensor_kw), seed=seed)
        setup = FilterSetup(extrinsics=camera_forward_extrinsics(),
                            imu_noise=noise,
                            gating=GatingConfig(method=method),
                            matching=MatchConfig(gate=preset.match_gate))
        rec = run_filter(imu, meas, setup)
        if rec.diverged:
            div += 1
        else:
            rmses.append(rmse_position(rec))
        counts = rec.counts
    reject = {k: v for k, v in counts.items() if k.startswith("rejected")}
    print(f"{method:8s} {np.mean(rmses) if rmses else float('nan'):14.4f} "
          f"{div:9d}   {reject}")

print("\nreading: full rejection (aor) dead-reckons through every episode;")
print("no gating swallows rotation outliers; partial rejection (aorp) keeps")
print("the clean position stream and drops only the ambiguous rotations.")
