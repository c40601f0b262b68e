"""Collective Kalman belief over the field.

The production path applies

    Sigma' = A (Sigma^-1 + Y)^-1 A^T
    phi'   = A (phi + (Sigma^-1 + Y)^-1 (y - Y phi)) + b

through the equivalent gain form restricted to the measured support S, which
needs only an |S| x |S| SPD solve and never touches Sigma^-1. This matters
under diffusive dynamics, where Sigma collapses towards rank one and its
inverse is unusable in floating point.

``ClosedFormAccumulator`` keeps the batch (history-wide) expression of the
same filter and is used only to cross-check the recursion.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .consensus import InfoPair
from .environment import Grid
from .errors import ConfigError, NumericalDegeneracyError, StructuralError


@dataclass(frozen=True)
class Belief:
    mean: np.ndarray
    cov: np.ndarray
    k: int = 0

    @property
    def n(self) -> int:
        return self.mean.shape[0]

    def check(self, sym_tol: float = 1e-12) -> None:
        """Raise if the covariance is not symmetric positive definite."""
        asym = np.max(np.abs(self.cov - self.cov.T)) if self.n else 0.0
        scale = max(1.0, float(np.max(np.abs(self.cov))))
        if asym > sym_tol * scale:
            raise NumericalDegeneracyError("covariance lost symmetry", {"asymmetry": asym})
        try:
            np.linalg.cholesky(self.cov)
        except np.linalg.LinAlgError as exc:
            raise NumericalDegeneracyError("covariance is not positive definite") from exc


def init_belief(grid: Grid, sigma0: float, phi0_hat: Optional[np.ndarray] = None) -> Belief:
    if not sigma0 > 0:
        raise ConfigError("sigma0 must be positive", "filter.sigma0")
    n = grid.n_cells
    mean = np.zeros(n) if phi0_hat is None else np.array(phi0_hat, dtype=float)
    if mean.shape != (n,):
        raise StructuralError(f"prior mean has shape {mean.shape}, grid has {n} cells")
    return Belief(mean, sigma0 * np.eye(n), 0)


def _propagate(A, M: np.ndarray) -> np.ndarray:
    """A M A^T for dense or sparse A."""
    if sp.issparse(A):
        AM = np.asarray(A @ M)
        return np.asarray(A @ AM.T).T
    return A @ M @ A.T


def kalman_update(belief: Belief, A_next, b_next: Optional[np.ndarray], info: InfoPair) -> Belief:
    """One measurement update followed by propagation through A_next (and b_next)."""
    n = belief.n
    if info.Y.shape != (n,) or info.y.shape != (n,):
        raise StructuralError("information pair does not match belief dimension")
    if A_next.shape != (n, n):
        raise StructuralError(f"transition matrix {A_next.shape} for a {n}-cell belief")

    mean, cov = belief.mean, belief.cov
    S = info.support
    if S.size:
        w = info.Y[S]
        zbar = info.y[S] / w
        innov_cov = cov[np.ix_(S, S)] + np.diag(1.0 / w)
        try:
            cf = scipy.linalg.cho_factor(innov_cov, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalDegeneracyError(
                "information solve failed",
                {"cond": float(np.linalg.cond(innov_cov)), "support": int(S.size), "k": belief.k},
            ) from exc
        cov_S = cov[S, :]  # |S| x N
        gain_T = scipy.linalg.cho_solve(cf, cov_S)  # K^T
        mean = mean + gain_T.T @ (zbar - mean[S])
        # Joseph form: (I-KH) Sigma (I-KH)^T + K R K^T
        X = cov - gain_T.T @ cov_S
        X = X - X[:, S] @ gain_T
        cov = X + (gain_T.T / w) @ gain_T

    cov = _propagate(A_next, cov)
    cov = 0.5 * (cov + cov.T)
    mean = np.asarray(A_next @ mean, dtype=float)
    if b_next is not None:
        mean = mean + b_next
    return Belief(mean, cov, belief.k + 1)


@dataclass
class ClosedFormAccumulator:
    """History-wide form of the filter.

    upsilon = Sigma0^-1 + sum_t P_t^T Y_t P_t
    data    = Sigma0^-1 phi0 + sum_t P_t^T y_t
    with P_t = A_t ... A_1 (identity at t = 0); ``prop`` holds P_k.
    """

    upsilon: np.ndarray
    prop: np.ndarray
    data: np.ndarray
    k: int = 0

    @classmethod
    def start(cls, prior: Belief) -> "ClosedFormAccumulator":
        n = prior.n
        cf = scipy.linalg.cho_factor(prior.cov)
        ups = scipy.linalg.cho_solve(cf, np.eye(n))
        ups = 0.5 * (ups + ups.T)
        return cls(ups, np.eye(n), ups @ prior.mean, prior.k)

    def add(self, A_next, info: InfoPair) -> None:
        P = self.prop
        self.upsilon = self.upsilon + P.T @ (info.Y[:, None] * P)
        self.upsilon = 0.5 * (self.upsilon + self.upsilon.T)
        self.data = self.data + P.T @ info.y
        A = A_next.toarray() if sp.issparse(A_next) else np.asarray(A_next, dtype=float)
        self.prop = A @ P
        self.k += 1


def closed_form_belief(acc: ClosedFormAccumulator) -> Belief:
    try:
        cf = scipy.linalg.cho_factor(acc.upsilon, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracyError("accumulated information matrix is singular") from exc
    P = acc.prop
    cov = P @ scipy.linalg.cho_solve(cf, P.T)
    cov = 0.5 * (cov + cov.T)
    mean = P @ scipy.linalg.cho_solve(cf, acc.data)
    return Belief(mean, cov, acc.k)
