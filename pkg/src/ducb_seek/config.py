"""Scenario configuration: nested dataclasses loaded strictly from JSON."""
from __future__ import annotations

import dataclasses
import json
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .errors import ConfigError
from .planning import PLANNERS

GRAPH_KINDS = ("line", "ring", "complete", "star")


@dataclass
class GridConfig:
    size: int


@dataclass
class SourceConfig:
    cell: int
    rate: float
    until_step: Optional[int] = None


@dataclass
class DynamicsConfig:
    diffusivity: float = 0.0
    velocity_x: float = 0.0
    velocity_y: float = 0.0
    dt: float = 1.0
    dx: float = 1.0
    sources: list[SourceConfig] = field(default_factory=list)
    # ground truth starts uniform at initial_level and is rolled forward
    # spinup_steps before the agents start
    initial_level: float = 0.0
    spinup_steps: int = 0
    # horizon of the A[k:t] eigenvalue sweep; None means the episode horizon
    bounds_horizon: Optional[int] = None


@dataclass
class AgentConfig:
    sensor: str = "circular"
    radius: float = 0.0
    noise_variance: float = 1.0


@dataclass
class GraphConfig:
    kind: Optional[str] = None
    edges: Optional[list[list[int]]] = None


@dataclass
class FilterConfig:
    sigma0: float = 1.0
    filter_knows_source: bool = False


@dataclass
class DucbConfig:
    delta: float = 0.1
    beta_scale: Optional[float] = None  # None: 1 / N^2
    prior_error_bound: Optional[float] = None  # None: sqrt(N) * max initial field value


@dataclass
class ScenarioConfig:
    grid: GridConfig
    dynamics: DynamicsConfig
    agents: list[AgentConfig]
    horizon: int
    graph: GraphConfig = field(default_factory=GraphConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    ducb: DucbConfig = field(default_factory=DucbConfig)
    planner: Union[str, list[str]] = "ducb"
    trials: int = 1
    base_seed: int = 0

    def __post_init__(self):
        if isinstance(self.planner, str):
            self.planner = [self.planner]

    @property
    def planners(self) -> list[str]:
        return list(self.planner)

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    def edge_list(self) -> list[tuple[int, int]]:
        n = self.n_agents
        if self.graph.edges is not None:
            return [tuple(e) for e in self.graph.edges]
        kind = self.graph.kind or "complete"
        if kind == "line":
            return [(i, i + 1) for i in range(n - 1)]
        if kind == "ring":
            return [(i, (i + 1) % n) for i in range(n)] if n > 2 else [(i, i + 1) for i in range(n - 1)]
        if kind == "star":
            return [(0, j) for j in range(1, n)]
        return [(i, j) for i in range(n) for j in range(i + 1, n)]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "ScenarioConfig":
        return from_dict(_merge(self.to_dict(), changes))


def _merge(base: dict, changes: dict) -> dict:
    out = dict(base)
    for key, val in changes.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def _coerce(tp, value, path):
    origin = typing.get_origin(tp)
    if origin is Union:
        args = typing.get_args(tp)
        if value is None and type(None) in args:
            return None
        errors = []
        for arg in args:
            if arg is type(None):
                continue
            try:
                return _coerce(arg, value, path)
            except ConfigError as exc:
                errors.append(exc)
        raise errors[0]
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"expected a list, got {type(value).__name__}", path)
        (item_tp,) = typing.get_args(tp)
        return [_coerce(item_tp, v, f"{path}[{i}]") for i, v in enumerate(value)]
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError("expected true/false", path)
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", path)
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", path)
        if not math.isfinite(value):
            raise ConfigError("expected a finite number", path)
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path)
        return value
    raise TypeError(f"unsupported config type {tp}")


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"expected an object, got {type(data).__name__}", path or "<root>")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError("unknown key", f"{path}.{key}" if path else key)
    kwargs = {}
    for f in dataclasses.fields(cls):
        sub = f"{path}.{f.name}" if path else f.name
        if f.name in data:
            kwargs[f.name] = _coerce(hints[f.name], data[f.name], sub)
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError("missing required key", sub)
    return cls(**kwargs)


def from_dict(data: dict) -> ScenarioConfig:
    cfg = _build(ScenarioConfig, data, "")
    validate_config(cfg)
    return cfg


def validate_config(cfg: ScenarioConfig) -> None:
    """Cross-field checks that must hold before anything is simulated."""
    from .consensus import CommGraph
    from .environment import Grid, build_convection_diffusion

    if cfg.grid.size < 1:
        raise ConfigError("must be a positive integer", "grid.size")
    n = cfg.grid.size ** 2
    if cfg.horizon < 0:
        raise ConfigError("must be non-negative", "horizon")
    if cfg.trials < 1:
        raise ConfigError("must be at least 1", "trials")
    if not cfg.agents:
        raise ConfigError("at least one agent is required", "agents")
    if cfg.n_agents > n:
        raise ConfigError(f"{cfg.n_agents} agents exceed {n} cells", "agents")
    for i, a in enumerate(cfg.agents):
        if a.sensor not in ("circular", "pointwise"):
            raise ConfigError(f"unknown sensor {a.sensor!r}", f"agents[{i}].sensor")
        if a.radius < 0:
            raise ConfigError("must be non-negative", f"agents[{i}].radius")
        if a.noise_variance < 0:
            raise ConfigError("must be non-negative", f"agents[{i}].noise_variance")
    if cfg.graph.kind is not None and cfg.graph.kind not in GRAPH_KINDS:
        raise ConfigError(f"must be one of {GRAPH_KINDS}", "graph.kind")
    try:
        CommGraph(cfg.n_agents, cfg.edge_list())
    except ConfigError as exc:
        key = "graph.edges" if cfg.graph.edges is not None else "graph.kind"
        raise ConfigError(str(exc).split(": ", 1)[-1], key) from None
    if not cfg.filter.sigma0 > 0:
        raise ConfigError("must be positive", "filter.sigma0")
    if not 0 < cfg.ducb.delta < 1:
        raise ConfigError(f"must lie in (0, 1), got {cfg.ducb.delta}", "ducb.delta")
    if cfg.ducb.beta_scale is not None and not cfg.ducb.beta_scale > 0:
        raise ConfigError("must be positive", "ducb.beta_scale")
    if cfg.ducb.prior_error_bound is not None and cfg.ducb.prior_error_bound < 0:
        raise ConfigError("must be non-negative", "ducb.prior_error_bound")
    for p in cfg.planners:
        if p not in PLANNERS:
            raise ConfigError(f"unknown planner {p!r}; expected one of {PLANNERS}", "planner")
    if not cfg.planners:
        raise ConfigError("at least one planner is required", "planner")
    dyn = cfg.dynamics
    if dyn.spinup_steps < 0:
        raise ConfigError("must be non-negative", "dynamics.spinup_steps")
    if dyn.initial_level < 0:
        raise ConfigError("must be non-negative", "dynamics.initial_level")
    if dyn.bounds_horizon is not None and dyn.bounds_horizon < 1:
        raise ConfigError("must be at least 1", "dynamics.bounds_horizon")
    for i, s in enumerate(dyn.sources):
        if not 0 <= s.cell < n:
            raise ConfigError(f"cell {s.cell} outside the {n}-cell grid",
                              f"dynamics.sources[{i}].cell")
    build_convection_diffusion(dynamics_params(dyn), Grid(cfg.grid.size))


def dynamics_params(dyn: DynamicsConfig):
    from .environment import ConvectionDiffusionParams, Source

    return ConvectionDiffusionParams(
        diffusivity=dyn.diffusivity, velocity_x=dyn.velocity_x, velocity_y=dyn.velocity_y,
        sources=tuple(Source(s.cell, s.rate, s.until_step) for s in dyn.sources),
        dt=dyn.dt, dx=dyn.dx)


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}", str(path)) from exc
    return from_dict(data)


def write_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
