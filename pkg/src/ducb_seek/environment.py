"""Lattice, ground-truth LTV field dynamics and the convection-diffusion generator.

Cells are indexed 0..N-1 in row-major order; ``x`` runs along columns and
``y`` along rows.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, StructuralError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid:
    side: int

    def __post_init__(self):
        if self.side < 1:
            raise ConfigError("grid side must be a positive integer", "grid.size")

    @property
    def n_cells(self) -> int:
        return self.side * self.side

    def coords(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.n_cells:
            raise StructuralError(f"cell {index} outside grid of {self.n_cells} cells")
        return divmod(int(index), self.side)

    def index(self, row: int, col: int) -> int:
        if not (0 <= row < self.side and 0 <= col < self.side):
            raise StructuralError(f"({row}, {col}) outside {self.side}x{self.side} grid")
        return row * self.side + col

    def positions(self) -> np.ndarray:
        """(N, 2) array of (row, col) cell centres."""
        rows, cols = np.divmod(np.arange(self.n_cells), self.side)
        return np.column_stack([rows, cols]).astype(float)


@dataclass(frozen=True)
class FieldState:
    values: np.ndarray
    k: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise StructuralError("field values must be a vector")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


# picklable step-indexed callables, so models can cross process boundaries

class _Constant:
    def __init__(self, value):
        self.value = value

    def __call__(self, k):
        return self.value


class _Sequence:
    def __init__(self, items):
        self.items = items

    def __call__(self, k):
        if not 1 <= k <= len(self.items):
            raise IndexError(f"no transition matrix for step {k}")
        return self.items[k - 1]


class _SourceSchedule:
    def __init__(self, sources, n, dt):
        self.sources, self.n, self.dt = sources, n, dt

    def __call__(self, k):
        active = [s for s in self.sources if s.until_step is None or k <= s.until_step]
        if not active:
            return None
        b = np.zeros(self.n)
        for s in active:
            b[s.cell] += s.rate * self.dt
        return b


@dataclass(frozen=True)
class TransitionModel:
    """phi_{k+1} = A_{k+1} phi_k + b_{k+1}.

    ``matrix_fn(k)`` returns A_k (dense ndarray or scipy sparse) for k >= 1.
    ``affine_fn(k)`` returns b_k, or None when the step is homogeneous.
    """

    dim: int
    matrix_fn: Callable[[int], object]
    affine_fn: Optional[Callable[[int], Optional[np.ndarray]]] = None
    time_invariant: bool = False
    alpha_bounds: Optional[tuple[float, float]] = None

    @classmethod
    def constant(cls, A, b=None, alpha_bounds=None) -> "TransitionModel":
        n = A.shape[0]
        if A.shape != (n, n):
            raise StructuralError(f"transition matrix must be square, got {A.shape}")
        affine = None if b is None else _Constant(np.asarray(b, dtype=float))
        return cls(n, _Constant(A), affine, time_invariant=True, alpha_bounds=alpha_bounds)

    @classmethod
    def from_sequence(cls, matrices: Sequence, alpha_bounds=None) -> "TransitionModel":
        """A_1, A_2, ... taken from ``matrices``; indexing past the end is an error."""
        mats = _Sequence(list(matrices))
        return cls(mats.items[0].shape[0], mats, None, time_invariant=False,
                   alpha_bounds=alpha_bounds)

    def matrix_at(self, k: int):
        return self.matrix_fn(k)

    def affine_at(self, k: int) -> Optional[np.ndarray]:
        if self.affine_fn is None:
            return None
        return self.affine_fn(k)

    def dense_matrix_at(self, k: int) -> np.ndarray:
        A = self.matrix_at(k)
        return A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)


def step_state(model: TransitionModel, state: FieldState) -> FieldState:
    phi = state.values
    if phi.shape[0] != model.dim:
        raise StructuralError(f"state has {phi.shape[0]} entries, model expects {model.dim}")
    k = state.k + 1
    nxt = model.matrix_at(k) @ phi
    b = model.affine_at(k)
    if b is not None:
        nxt = nxt + b
    nxt = np.asarray(nxt, dtype=float)
    if np.any(nxt < 0):
        log.warning("step %d: clamping %d negative field entries (min %.3g)",
                    k, int(np.sum(nxt < 0)), float(nxt.min()))
        nxt = np.maximum(nxt, 0.0)
    return FieldState(nxt, k)


@dataclass(frozen=True)
class Source:
    cell: int
    rate: float
    until_step: Optional[int] = None  # inclusive; None keeps it on forever


@dataclass(frozen=True)
class ConvectionDiffusionParams:
    diffusivity: float  # lambda / (c rho)
    velocity_x: float = 0.0
    velocity_y: float = 0.0
    sources: tuple[Source, ...] = field(default_factory=tuple)
    dt: float = 1.0
    dx: float = 1.0

    def cfl_number(self) -> float:
        return self.dt * (4.0 * self.diffusivity / self.dx**2
                          + (abs(self.velocity_x) + abs(self.velocity_y)) / self.dx)


def build_convection_diffusion(params: ConvectionDiffusionParams, grid: Grid) -> TransitionModel:
    """Explicit-Euler 5-point stencil with upwind convection and zero-flux walls.

    The matrix is assembled face by face, so every column sums to one and
    total mass is conserved when no source is active.
    """
    if params.dt <= 0 or params.dx <= 0:
        raise ConfigError("dt and dx must be positive", "dynamics.dt")
    if params.diffusivity < 0:
        raise ConfigError("diffusivity must be non-negative", "dynamics.diffusivity")
    cfl = params.cfl_number()
    if cfl >= 1.0:
        raise ConfigError(
            f"CFL bound violated: dt*(4*diffusivity/dx^2 + (|u_x|+|u_y|)/dx) = {cfl:.4g} >= 1",
            "dynamics.dt")

    D, n = grid.side, grid.n_cells
    d = params.dt * params.diffusivity / params.dx**2
    cx = params.dt * params.velocity_x / params.dx
    cy = params.dt * params.velocity_y / params.dx

    idx = np.arange(n).reshape(D, D)
    rows, cols, vals = [], [], []

    def faces(a, b, c_adv):
        # a -> b is the positive axis direction
        a, b = a.ravel(), b.ravel()
        # diffusive exchange
        for src, dst in ((a, b), (b, a)):
            rows.extend([dst, src])
            cols.extend([src, src])
            vals.extend([np.full(src.size, d), np.full(src.size, -d)])
        # upwind advection
        if c_adv > 0:
            src, dst = a, b
        elif c_adv < 0:
            src, dst = b, a
        else:
            return
        rows.extend([dst, src])
        cols.extend([src, src])
        vals.extend([np.full(src.size, abs(c_adv)), np.full(src.size, -abs(c_adv))])

    faces(idx[:, :-1], idx[:, 1:], cx)
    faces(idx[:-1, :], idx[1:, :], cy)
    if rows:
        L = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
        A = (sp.identity(n, format="csr") + L.tocsr()).tocsr()
    else:
        A = sp.identity(n, format="csr")
    A.sum_duplicates()

    diag = A.diagonal()
    if diag.min() <= 0.5:
        # no column dominance guarantee; confirm invertibility directly
        try:
            spla.splu(A.tocsc())
        except RuntimeError as exc:
            raise ConfigError(f"discretised transition matrix is singular ({exc})",
                              "dynamics.dt") from exc

    srcs = tuple(params.sources)
    for s in srcs:
        if not 0 <= s.cell < n:
            raise ConfigError(f"source cell {s.cell} outside grid", "dynamics.sources")

    affine = _SourceSchedule(srcs, n, params.dt) if srcs else None
    return TransitionModel(n, _Constant(A), affine, time_invariant=True)


class DynamicsBounds(NamedTuple):
    alpha_min: float
    alpha_max: float
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_dynamics_bounds(model: TransitionModel, horizon: int) -> DynamicsBounds:
    """Extreme eigenvalues of A[k:t]^T A[k:t] over 1 <= t <= k <= horizon.

    Report-only: violations are listed, never raised.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    lo, hi = np.inf, 0.0
    if model.time_invariant:
        # A[k:t] = A^(k-t+1) depends only on the product length
        A = model.dense_matrix_at(1)
        P = np.eye(model.dim)
        for _ in range(horizon):
            P = A @ P
            s = scipy.linalg.svdvals(P)
            lo, hi = min(lo, s[-1] ** 2), max(hi, s[0] ** 2)
    else:
        mats = [model.dense_matrix_at(k) for k in range(1, horizon + 1)]
        for t in range(horizon):
            P = np.eye(model.dim)
            for k in range(t, horizon):
                P = mats[k] @ P
                s = scipy.linalg.svdvals(P)
                lo, hi = min(lo, s[-1] ** 2), max(hi, s[0] ** 2)

    issues = []
    if lo <= 1e-300 or lo <= np.finfo(float).eps * hi:
        issues.append(f"propagation product numerically singular (min eigenvalue {lo:.3g})")
    if model.alpha_bounds is not None:
        a_lo, a_hi = model.alpha_bounds
        if lo < a_lo * (1 - 1e-12):
            issues.append(f"min eigenvalue {lo:.6g} below declared lower bound {a_lo:.6g}")
        if hi > a_hi * (1 + 1e-12):
            issues.append(f"max eigenvalue {hi:.6g} above declared upper bound {a_hi:.6g}")
    return DynamicsBounds(float(lo), float(hi), tuple(issues))
