"""Episodes, regret traces and Monte-Carlo aggregation."""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import ScenarioConfig, dynamics_params
from .consensus import CommGraph, aggregate, local_information
from .ducb import BetaSchedule, beta, coverage_check
from .environment import (DynamicsBounds, FieldState, Grid, TransitionModel,
                          build_convection_diffusion, step_state, validate_dynamics_bounds)
from .errors import ConfigError, NumericalDegeneracyError
from .estimation import init_belief, kalman_update
from .planning import distinct_sum, oracle_optimum, plan
from .sensing import SensorSpec, measurement_matrix, sample_measurement

log = logging.getLogger(__name__)


@dataclass
class Scenario:
    grid: Grid
    model: TransitionModel
    sensors: list[SensorSpec]
    graph: CommGraph
    initial: FieldState  # ground truth when the agents start
    sigma0: float
    schedule: BetaSchedule
    bounds: DynamicsBounds
    horizon: int
    planners: list[str] = field(default_factory=lambda: ["ducb"])
    filter_knows_source: bool = False

    @property
    def n_agents(self) -> int:
        return len(self.sensors)


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    grid = Grid(cfg.grid.size)
    model = build_convection_diffusion(dynamics_params(cfg.dynamics), grid)
    sensors = []
    for i, a in enumerate(cfg.agents):
        if not a.noise_variance > 0:
            raise ConfigError("noise variance must be positive", f"agents[{i}].noise_variance")
        sensors.append(SensorSpec(a.sensor, a.radius, a.noise_variance))
    graph = CommGraph(cfg.n_agents, cfg.edge_list())

    state = FieldState(np.full(grid.n_cells, cfg.dynamics.initial_level), 0)
    for _ in range(cfg.dynamics.spinup_steps):
        state = step_state(model, state)

    bounds_horizon = cfg.dynamics.bounds_horizon or max(cfg.horizon, 1)
    bounds = validate_dynamics_bounds(model, bounds_horizon)
    n = grid.n_cells
    variances = [s.noise_variance for s in sensors]
    prior_err = cfg.ducb.prior_error_bound
    if prior_err is None:
        prior_err = math.sqrt(n) * float(np.max(state.values))
    schedule = BetaSchedule.from_bounds(
        delta=cfg.ducb.delta, prior_error_bound=prior_err,
        sigma_lo=cfg.filter.sigma0, sigma_hi=cfg.filter.sigma0,
        alpha_hi=bounds.alpha_max, v_lo=min(variances), v_hi=max(variances), n=n,
        scale=cfg.ducb.beta_scale if cfg.ducb.beta_scale is not None else 1.0 / n**2)
    return Scenario(grid, model, sensors, graph, state, cfg.filter.sigma0, schedule, bounds,
                    cfg.horizon, cfg.planners, cfg.filter.filter_knows_source)


@dataclass(frozen=True)
class StepRecord:
    k: int
    f_actual: float
    f_star: float
    regret: float
    coverage: bool
    positions: tuple[int, ...]


@dataclass
class TrialTrace:
    seed: int
    planner: str
    records: list[StepRecord]
    failure: Optional[str] = None

    @property
    def aborted(self) -> bool:
        return self.failure is not None

    @property
    def regret(self) -> np.ndarray:
        return np.array([r.regret for r in self.records])

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.regret)

    @property
    def coverage(self) -> np.ndarray:
        return np.array([r.coverage for r in self.records], dtype=bool)


def run_episode(scenario: Scenario, seed: int, planner: Optional[str] = None) -> TrialTrace:
    """Measure, fuse, filter, bound, plan; regret is scored on the true field."""
    planner = planner or scenario.planners[0]
    grid, model, n_agents = scenario.grid, scenario.model, scenario.n_agents
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_agents)]
    truth = scenario.initial
    belief = init_belief(grid, scenario.sigma0)
    sched = scenario.schedule

    trace = TrialTrace(seed, planner, [])
    if scenario.horizon == 0:
        return trace
    assignment = plan(planner, belief=belief, beta_k=beta(1, sched), grid=grid, k=0,
                      n_agents=n_agents)
    try:
        for k in range(1, scenario.horizon + 1):
            locals_ = []
            for i, (spec, rng) in enumerate(zip(scenario.sensors, streams)):
                H = measurement_matrix(assignment.positions[i], spec, grid)
                z = sample_measurement(H, truth, spec, rng, agent=i)
                locals_.append(local_information(H, spec, z))
            info = aggregate(scenario.graph, locals_)
            clock = truth.k + 1
            b = model.affine_at(clock) if scenario.filter_knows_source else None
            belief = kalman_update(belief, model.matrix_at(clock), b, info)
            truth = step_state(model, truth)

            beta_k = beta(k, sched)
            assignment = plan(planner, belief=belief, beta_k=beta_k, grid=grid, k=k,
                              n_agents=n_agents)
            _, f_star = oracle_optimum(truth, n_agents)
            f_act = distinct_sum(truth.values, assignment.positions)
            trace.records.append(StepRecord(k, f_act, f_star, f_star - f_act,
                                            coverage_check(belief, truth, beta_k),
                                            assignment.positions))
    except NumericalDegeneracyError as exc:
        trace.failure = f"step {len(trace.records) + 1}: {exc}"
        log.error("trial seed=%d planner=%s aborted: %s", seed, planner, trace.failure)
    return trace


@dataclass
class MonteCarloResult:
    planner: str
    traces: list[TrialTrace]
    mean_regret: np.ndarray
    var_regret: np.ndarray
    mean_cum: np.ndarray
    var_cum: np.ndarray
    coverage_rate: np.ndarray  # per step, over completed trials

    @property
    def aborted(self) -> list[TrialTrace]:
        return [t for t in self.traces if t.aborted]

    @property
    def completed(self) -> list[TrialTrace]:
        return [t for t in self.traces if not t.aborted]

    @property
    def coverage_frequency(self) -> float:
        cov = [t.coverage for t in self.completed]
        return float(np.concatenate(cov).mean()) if cov and cov[0].size else float("nan")


def _episode_job(args):
    scenario, seed, planner = args
    return run_episode(scenario, seed, planner)


def monte_carlo(scenario: Scenario, trials: int, base_seed: int = 0,
                planner: Optional[str] = None, jobs: int = 1,
                seeds: Optional[Sequence[int]] = None) -> MonteCarloResult:
    if trials < 1:
        raise ValueError("need at least one trial")
    planner = planner or scenario.planners[0]
    seeds = list(seeds) if seeds is not None else [base_seed + t for t in range(trials)]
    jobs_args = [(scenario, s, planner) for s in seeds]
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(_episode_job, jobs_args))
    else:
        traces = [_episode_job(a) for a in jobs_args]

    done = [t for t in traces if not t.aborted]
    if len(done) < len(traces):
        log.warning("%d of %d trials aborted and are excluded from the means",
                    len(traces) - len(done), len(traces))
    K = scenario.horizon
    if done:
        R = np.vstack([t.regret for t in done]).reshape(len(done), K)
        C = np.cumsum(R, axis=1)
        cov = np.vstack([t.coverage for t in done]).reshape(len(done), K).astype(float)
        stats = (R.mean(0), R.var(0), C.mean(0), C.var(0), cov.mean(0))
    else:
        stats = tuple(np.full(K, np.nan) for _ in range(5))
    return MonteCarloResult(planner, traces, *stats)


def fit_growth_exponent(cumulative: Sequence[float], window: float = 0.5) -> float:
    """Least-squares slope of log(cum regret) against log(k) over the trailing window."""
    c = np.asarray(cumulative, dtype=float)
    if c.size < 100:
        raise ValueError("need at least 100 steps to fit a growth exponent")
    if not np.any(c > 0):
        return 0.0
    k = np.arange(1, c.size + 1)
    start = int(math.floor(c.size * (1.0 - window)))
    k, c = k[start:], c[start:]
    keep = c > 0
    if keep.sum() < 2:
        return 0.0
    slope, _ = np.polyfit(np.log(k[keep]), np.log(c[keep]), 1)
    return float(slope)


@dataclass(frozen=True)
class RegretDiagnostics:
    gamma_bar: float

    def violations(self, regrets: Sequence[float]) -> int:
        return int(np.sum(np.asarray(regrets) > self.gamma_bar))


def loss_bound_value(n_agents: int, alpha_hi: float, phi0_norm: float) -> float:
    return 2.0 * math.sqrt(n_agents * alpha_hi) * phi0_norm**2


def loss_bound(scenario: Scenario) -> RegretDiagnostics:
    return RegretDiagnostics(loss_bound_value(
        scenario.n_agents, scenario.bounds.alpha_max,
        float(np.linalg.norm(scenario.initial.values))))


# CSV formats

TRACE_COLUMNS = ["trial", "k", "F_star", "F_actual", "regret", "cum_regret", "coverage",
                 "agent_positions"]
AGGREGATE_COLUMNS = ["k", "mean_regret", "var_regret", "mean_cum_regret", "var_cum_regret",
                     "coverage_rate"]


def write_trace_csv(path, trace: TrialTrace, trial: int) -> None:
    cum = trace.cumulative
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for rec, c in zip(trace.records, cum):
            w.writerow([trial, rec.k, repr(rec.f_star), repr(rec.f_actual), repr(rec.regret),
                        repr(float(c)), int(rec.coverage),
                        ";".join(str(p) for p in rec.positions)])


def read_trace_csv(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                "trial": int(row["trial"]), "k": int(row["k"]),
                "F_star": float(row["F_star"]), "F_actual": float(row["F_actual"]),
                "regret": float(row["regret"]), "cum_regret": float(row["cum_regret"]),
                "coverage": bool(int(row["coverage"])),
                "agent_positions": tuple(int(p) for p in row["agent_positions"].split(";")
                                         if p != ""),
            })
    return rows


def write_aggregate_csv(path, result: MonteCarloResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(AGGREGATE_COLUMNS)
        for k in range(result.mean_regret.size):
            w.writerow([k + 1] + [repr(float(a[k])) for a in (
                result.mean_regret, result.var_regret, result.mean_cum, result.var_cum,
                result.coverage_rate)])


def read_aggregate_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {c: np.array([float(r[c]) for r in rows]) for c in AGGREGATE_COLUMNS}
