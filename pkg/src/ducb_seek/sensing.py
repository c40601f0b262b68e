"""Position-dependent selection matrices and noisy field measurements.

A measurement matrix is never materialised: rows are unit vectors, so it is
kept as the sorted list of cells it selects.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import FieldState, Grid
from .errors import ConfigError, StructuralError

POINTWISE = "pointwise"
CIRCULAR = "circular"


@dataclass(frozen=True)
class SensorSpec:
    kind: str = CIRCULAR
    radius: float = 0.0
    noise_variance: float = 1.0

    def __post_init__(self):
        if self.kind not in (POINTWISE, CIRCULAR):
            raise ConfigError(f"unknown sensor kind {self.kind!r}", "sensor")
        if self.radius < 0:
            raise ConfigError("sensing radius must be non-negative", "radius")
        if not self.noise_variance > 0:
            raise ConfigError("noise variance must be positive", "noise_variance")


@dataclass(frozen=True)
class MeasurementMatrix:
    cells: np.ndarray  # sorted, unique
    n_cells: int

    @property
    def m(self) -> int:
        return int(self.cells.size)

    def apply(self, phi: np.ndarray) -> np.ndarray:
        return np.asarray(phi)[self.cells]

    def dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n_cells))
        H[np.arange(self.m), self.cells] = 1.0
        return H


@dataclass(frozen=True)
class Measurement:
    values: np.ndarray
    agent: int
    k: int


def measurement_matrix(position: int, spec: SensorSpec, grid: Grid) -> MeasurementMatrix:
    row, col = grid.coords(position)
    if spec.kind == POINTWISE or spec.radius == 0:
        cells = np.array([int(position)])
    else:
        r = int(np.floor(spec.radius))
        rr, cc = np.mgrid[row - r:row + r + 1, col - r:col + r + 1]
        inside = ((rr - row) ** 2 + (cc - col) ** 2 <= spec.radius ** 2)
        inside &= (rr >= 0) & (rr < grid.side) & (cc >= 0) & (cc < grid.side)
        cells = np.sort(rr[inside] * grid.side + cc[inside])
    cells.setflags(write=False)
    return MeasurementMatrix(cells, grid.n_cells)


def sample_measurement(H: MeasurementMatrix, state: FieldState, spec: SensorSpec, rng,
                       agent: int = 0) -> Measurement:
    """z = H phi + n with n ~ N(0, v I); ``rng`` only needs ``standard_normal(size)``."""
    if state.values.shape[0] != H.n_cells:
        raise StructuralError("measurement matrix and field disagree on cell count")
    noise = np.sqrt(spec.noise_variance) * np.asarray(rng.standard_normal(H.m), dtype=float)
    return Measurement(H.apply(state.values) + noise, agent, state.k)
