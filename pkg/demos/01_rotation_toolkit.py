"""Tour of the rotation toolkit: quaternion algebra, exp/log maps, and the
transpose-rotation derivative rules that every filter Jacobian builds on.
"""

import numpy as np

from orekf.geom3 import (
    dR_transpose_sandwich,
    dR_transpose_vector,
    exp_so3,
    log_so3,
    quat_conj,
    quat_mul,
    quat_of,
    right_jacobian,
    rot_of,
    skew,
)

rng = np.random.default_rng(0)

print("== exp / log round trip ==")
rotvec = np.array([0.3, -0.2, 0.9])
rot = exp_so3(rotvec)
print("rotvec:", rotvec)
print("recovered:", log_so3(rot), "(max err %.2e)" % np.max(np.abs(log_so3(rot) - rotvec)))

print("\n== quaternion group ==")
qa = quat_of(exp_so3(rng.normal(size=3)))
qb = quat_of(exp_so3(rng.normal(size=3)))
print("|(qa*qb) as matrix - Ra@Rb| =",
      np.max(np.abs(rot_of(quat_mul(qa, qb)) - rot_of(qa) @ rot_of(qb))))
print("qa * conj(qa) =", quat_mul(qa, quat_conj(qa)))

print("\n== right Jacobian: exp(t + d) ~ exp(t) exp(J_r d) ==")
t = rng.normal(size=3)
d = rng.normal(size=3) * 1e-5
lhs = exp_so3(t + d)
rhs = exp_so3(t) @ exp_so3(right_jacobian(t) @ d)
print("defect:", np.max(np.abs(lhs - rhs)))

print("\n== derivative rules vs finite differences ==")
q, r, s = (exp_so3(rng.normal(size=3)) for _ in range(3))
v = rng.normal(size=3)
step = 1e-6
fd = np.zeros((3, 3))
for k in range(3):
    dk = np.zeros(3)
    dk[k] = step
    plus = q @ (r @ exp_so3(dk)).T @ s
    minus = q @ (r @ exp_so3(-dk)).T @ s
    center = q @ r.T @ s
    fd[:, k] = (log_so3(center.T @ plus) - log_so3(center.T @ minus)) / (2 * step)
print("d(Q R^T S)/dR analytic vs FD:",
      np.max(np.abs(fd - dR_transpose_sandwich(q, r, s))))

fdv = np.zeros((3, 3))
for k in range(3):
    dk = np.zeros(3)
    dk[k] = step
    fdv[:, k] = (q @ (r @ exp_so3(dk)).T @ v - q @ (r @ exp_so3(-dk)).T @ v) / (2 * step)
print("d(Q R^T v)/dR analytic vs FD:",
      np.max(np.abs(fdv - dR_transpose_vector(q, r, v))))

print("\n== skew operator is the cross product ==")
a, b = rng.normal(size=3), rng.normal(size=3)
print("skew(a)@b - cross(a,b):", np.max(np.abs(skew(a) @ b - np.cross(a, b))))
