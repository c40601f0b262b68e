"""Confidence-width schedule and the marginal upper confidence bound."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environment import FieldState
from .errors import ConfigError
from .estimation import Belief


@dataclass(frozen=True)
class BetaSchedule:
    """Parameters of the confidence width beta_k(delta).

    c1 = (prior error bound) / sqrt(sigma_lo); c2 = v_hi^2 * sqrt(max(2, 2 / v_lo)).
    Use :meth:`from_bounds` to derive them.
    """

    delta: float
    c1: float
    c2: float
    sigma_lo: float
    sigma_hi: float
    alpha_hi: float
    v_lo: float
    n: int
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}", "ducb.delta")
        if self.c1 < 0 or not self.c2 > 0:
            raise ConfigError("c1 must be >= 0 and c2 > 0", "ducb")
        for name in ("sigma_lo", "sigma_hi", "alpha_hi", "v_lo", "scale"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive", "ducb")
        if self.sigma_lo > self.sigma_hi:
            raise ConfigError("sigma_lo exceeds sigma_hi", "filter.sigma0")

    @classmethod
    def from_bounds(cls, *, delta, prior_error_bound, sigma_lo, sigma_hi, alpha_hi,
                    v_lo, v_hi, n, scale=1.0) -> "BetaSchedule":
        c1 = prior_error_bound / math.sqrt(sigma_lo)
        c2 = v_hi**2 * math.sqrt(max(2.0, 2.0 / v_lo))
        return cls(delta, c1, c2, sigma_lo, sigma_hi, alpha_hi, v_lo, n, scale)


def beta(k: int, sched: BetaSchedule) -> float:
    if k < 1:
        raise ValueError("beta is defined for k >= 1")
    n = sched.n
    num = sched.sigma_hi / sched.sigma_lo + sched.alpha_hi * sched.sigma_hi * k / sched.v_lo**2
    # log(num / delta^(2/n)) without forming delta^(2/n), which underflows for large n
    log_arg = math.log(num) - (2.0 / n) * math.log(sched.delta)
    width = n**1.5 * sched.c1 + n**2 * sched.c2 * math.sqrt(max(log_arg, 0.0))
    return sched.scale * width


@dataclass(frozen=True)
class DUCBVector:
    mu: np.ndarray
    beta_used: float
    k: int


def _std(belief: Belief) -> np.ndarray:
    d = np.diag(belief.cov).copy()
    floor = -1e-12 * max(1.0, float(np.max(np.abs(d), initial=0.0)))
    if np.any(d < floor):
        raise AssertionError(f"negative covariance diagonal (min {d.min():.3g})")
    return np.sqrt(np.maximum(d, 0.0))


def ducb(belief: Belief, beta_k: float) -> DUCBVector:
    if beta_k < 0:
        raise ValueError("beta must be non-negative")
    return DUCBVector(belief.mean + beta_k * _std(belief), float(beta_k), belief.k)


def coverage_check(belief: Belief, truth: FieldState, beta_k: float) -> bool:
    phi = truth.values
    if phi.shape != belief.mean.shape:
        raise ValueError("belief and field dimensions differ")
    return bool(np.all(np.abs(belief.mean - phi) <= beta_k * _std(belief)))


# weighted norms built from the diagonal of a positive definite matrix

def norm_m(x, M) -> float:
    return math.sqrt(float(x @ M @ x))


def norm_diag_sq(x, M) -> float:
    """sum_i m_ii x_i^2, the squared diagonal-weighted 2-norm."""
    return float(np.sum(np.diag(M) * x * x))


def norm_diag_inf(x, M) -> float:
    return float(np.max(np.diag(M) * np.abs(x)))


def norm_diag_1(x, M) -> float:
    return float(np.sum(np.diag(M) * np.abs(x)))


def norm_diag_squared_matrix(x, M) -> float:
    """sqrt(sum_i m_ii^2 x_i^2): the 2-norm weighted by the squared diagonal."""
    return float(np.sqrt(np.sum((np.diag(M) * x) ** 2)))
