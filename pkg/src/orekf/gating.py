"""Outlier rejection: chi-square tests and reported-uncertainty thresholds,
each in a full-measurement and a partial (position / rotation block) variant.

All functions are pure; quantiles are computed once per (dof, alpha) by
numeric inversion of the regularized incomplete gamma function.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaincinv

from .update_direct import PoseMeasurement

SINGULAR_CONDITION = 1e12

METHODS = ("none", "chi2", "chi2p", "aor", "aorp")
PARTIAL_METHODS = ("chi2p", "aorp")


class Verdict(enum.Enum):
    ACCEPT_ALL = "accept_all"
    REJECT_ALL = "reject_all"
    REJECT_POSITION = "reject_position"
    REJECT_ROTATION = "reject_rotation"


@dataclass(frozen=True)
class GatingDecision:
    verdict: Verdict
    statistic: float
    method: str

    def keeps_position(self) -> bool:
        return self.verdict in (Verdict.ACCEPT_ALL, Verdict.REJECT_ROTATION)

    def keeps_rotation(self) -> bool:
        return self.verdict in (Verdict.ACCEPT_ALL, Verdict.REJECT_POSITION)


@dataclass
class GatingConfig:
    method: str = "none"
    chi2_alpha: float = 0.05
    aor_tau_p: float = 0.15
    aor_tau_theta: float = 0.35
    aorp_tau_p: float = 0.10
    aorp_tau_theta: float = 0.175

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown gating method {self.method!r}")
        if not 0.0 < self.chi2_alpha < 1.0:
            raise ValueError("chi2_alpha must be in (0, 1)")
        for name in ("aor_tau_p", "aor_tau_theta", "aorp_tau_p",
                     "aorp_tau_theta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@lru_cache(maxsize=64)
def chi2_quantile(dof: int, prob: float) -> float:
    """Quantile of the chi-square distribution with dof degrees of freedom."""
    return 2.0 * float(gammaincinv(0.5 * dof, prob))


def _compose(reject_p: bool, reject_r: bool) -> Verdict:
    if reject_p and reject_r:
        return Verdict.REJECT_ALL
    if reject_p:
        return Verdict.REJECT_POSITION
    if reject_r:
        return Verdict.REJECT_ROTATION
    return Verdict.ACCEPT_ALL


def _mahalanobis_sq(residual, jac, cov, noise_cov):
    s = jac @ cov @ jac.T + noise_cov
    s = 0.5 * (s + s.T)
    if np.linalg.cond(s) > SINGULAR_CONDITION:
        return None
    return float(residual @ np.linalg.solve(s, residual))


def chi2_full(residual, jac, cov, noise_cov, alpha: float) -> GatingDecision:
    """Full-measurement chi-square test on the innovation.

    A (near-)singular innovation covariance rejects the measurement.
    """
    d2 = _mahalanobis_sq(residual, jac, cov, noise_cov)
    if d2 is None:
        return GatingDecision(Verdict.REJECT_ALL, float("inf"), "chi2")
    bound = chi2_quantile(residual.size, 1.0 - alpha)
    verdict = Verdict.ACCEPT_ALL if d2 <= bound else Verdict.REJECT_ALL
    return GatingDecision(verdict, d2, "chi2")


def chi2_partial(residual_p, residual_r, jac_p, jac_r, cov, noise_p, noise_r,
                 alpha: float) -> GatingDecision:
    """Two independent 3-DoF chi-square tests on the marginal innovations."""
    bound_p = chi2_quantile(residual_p.size, 1.0 - alpha)
    bound_r = chi2_quantile(residual_r.size, 1.0 - alpha)
    d2_p = _mahalanobis_sq(residual_p, jac_p, cov, noise_p)
    d2_r = _mahalanobis_sq(residual_r, jac_r, cov, noise_r)
    reject_p = d2_p is None or d2_p > bound_p
    reject_r = d2_r is None or d2_r > bound_r
    stat = max(d2_p if d2_p is not None else float("inf"),
               d2_r if d2_r is not None else float("inf"))
    return GatingDecision(_compose(reject_p, reject_r), stat, "chi2p")


def aor(meas: PoseMeasurement, cfg: GatingConfig) -> GatingDecision:
    """Reject the whole measurement when any reported standard deviation
    exceeds its threshold (strict inequality: the boundary is accepted)."""
    sig_p = float(np.max(np.sqrt(meas.var_p)))
    sig_r = float(np.max(np.sqrt(meas.var_theta)))
    stat = max(sig_p / cfg.aor_tau_p, sig_r / cfg.aor_tau_theta)
    if sig_p > cfg.aor_tau_p or sig_r > cfg.aor_tau_theta:
        return GatingDecision(Verdict.REJECT_ALL, stat, "aor")
    return GatingDecision(Verdict.ACCEPT_ALL, stat, "aor")


def aorp(meas: PoseMeasurement, cfg: GatingConfig) -> GatingDecision:
    """Per-block variant of aor: position and rotation rejected separately."""
    sig_p = float(np.max(np.sqrt(meas.var_p)))
    sig_r = float(np.max(np.sqrt(meas.var_theta)))
    stat = max(sig_p / cfg.aorp_tau_p, sig_r / cfg.aorp_tau_theta)
    return GatingDecision(
        _compose(sig_p > cfg.aorp_tau_p, sig_r > cfg.aorp_tau_theta),
        stat, "aorp")
