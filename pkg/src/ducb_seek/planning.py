"""Per-step agent assignment.

Every planner returns pairwise distinct cells. Ties go to the lowest cell
index. Objective values use ``math.fsum`` so that the same cell set scores
identically however it was enumerated.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .ducb import DUCBVector, ducb
from .environment import FieldState, Grid
from .errors import ConfigError
from .estimation import Belief

PLANNERS = ("ducb", "mean_greedy", "naive_sweep")
MAX_ENUMERATION_CELLS = 15


@dataclass(frozen=True)
class Assignment:
    positions: tuple[int, ...]
    n_cells: int

    @property
    def indicator(self) -> np.ndarray:
        a = np.zeros(self.n_cells)
        a[list(self.positions)] = 1.0
        return a

    @property
    def distinct(self) -> bool:
        return len(set(self.positions)) == len(self.positions)


def distinct_sum(values: np.ndarray, positions) -> float:
    """Field total over the union of occupied cells; co-located agents count once."""
    return math.fsum(float(values[c]) for c in sorted(set(int(p) for p in positions)))


def _top(values: np.ndarray, n_agents: int) -> tuple[int, ...]:
    n = values.shape[0]
    if n_agents > n:
        raise ConfigError(f"{n_agents} agents cannot occupy distinct cells of a {n}-cell grid",
                          "agents")
    order = np.argsort(-values, kind="stable")
    return tuple(int(c) for c in order[:n_agents])


def plan_ducb(mu: DUCBVector, n_agents: int) -> Assignment:
    return Assignment(_top(mu.mu, n_agents), mu.mu.shape[0])


def plan_mean_greedy(belief: Belief, n_agents: int) -> Assignment:
    return Assignment(_top(belief.mean, n_agents), belief.n)


def snake_order(grid: Grid) -> np.ndarray:
    idx = np.arange(grid.n_cells).reshape(grid.side, grid.side)
    idx[1::2] = idx[1::2, ::-1]
    return idx.ravel()


def sweep_tracks(grid: Grid, n_agents: int) -> list[np.ndarray]:
    if n_agents > grid.n_cells:
        raise ConfigError("more agents than cells", "agents")
    return np.array_split(snake_order(grid), n_agents)


def plan_naive_sweep(grid: Grid, k: int, n_agents: int) -> Assignment:
    tracks = sweep_tracks(grid, n_agents)
    return Assignment(tuple(int(t[k % len(t)]) for t in tracks), grid.n_cells)


def oracle_optimum(truth: FieldState, n_agents: int) -> tuple[Assignment, float]:
    pos = _top(truth.values, n_agents)
    return Assignment(pos, truth.values.shape[0]), distinct_sum(truth.values, pos)


def bilinear_oracle(belief: Belief, beta_k: float, n_agents: int) -> float:
    """max over distinct I-subsets a and fields in the confidence box of <a, phi>.

    For fixed a the inner maximum sits at the box's upper corner
    phi_hat + beta * sqrt(diag Sigma), so only the outer problem is enumerated.
    """
    n = belief.n
    if n > MAX_ENUMERATION_CELLS:
        raise ValueError(f"refusing to enumerate subsets of {n} cells "
                         f"(limit {MAX_ENUMERATION_CELLS})")
    corner = ducb(belief, beta_k).mu
    return max(distinct_sum(corner, subset)
               for subset in itertools.combinations(range(n), n_agents))


def plan(planner: str, *, belief: Belief, beta_k: float, grid: Grid, k: int,
         n_agents: int) -> Assignment:
    if planner == "ducb":
        return plan_ducb(ducb(belief, beta_k), n_agents)
    if planner == "mean_greedy":
        return plan_mean_greedy(belief, n_agents)
    if planner == "naive_sweep":
        return plan_naive_sweep(grid, k, n_agents)
    raise ConfigError(f"unknown planner {planner!r}", "planner")
