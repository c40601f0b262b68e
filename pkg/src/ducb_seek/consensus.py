"""Exact fusion of per-agent information pairs over a communication graph.

Fusion is a convergecast/broadcast on a breadth-first spanning tree rooted at
agent 0. Messages carry the contributions of the sender's subtree tagged by
agent id; the root reduces them in ascending id order, so the result does not
depend on the topology, only on the agent set.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .errors import ConfigError, StructuralError
from .sensing import Measurement, MeasurementMatrix, SensorSpec


@dataclass(frozen=True)
class InfoPair:
    """Diagonal of Y = H^T V^-1 H and the vector y = H^T V^-1 z."""

    Y: np.ndarray
    y: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.Y)


class CommGraph:
    def __init__(self, n_agents: int, edges: Iterable[Sequence[int]] = ()):
        if n_agents < 1:
            raise ConfigError("need at least one agent", "agents")
        g = nx.Graph()
        g.add_nodes_from(range(n_agents))
        for e in edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ConfigError(f"self-loop on agent {i}", "graph.edges")
            if not (0 <= i < n_agents and 0 <= j < n_agents):
                raise ConfigError(f"edge {[i, j]} references unknown agent", "graph.edges")
            g.add_edge(i, j)
        if not nx.is_connected(g):
            raise ConfigError("communication graph is not connected", "graph.edges")
        self.graph = g
        self.n_agents = n_agents
        # BFS tree from the lowest id; children visited in ascending id order
        self.parent = {0: None}
        self.depth = {0: 0}
        order = [0]
        for u in order:
            for v in sorted(g.neighbors(u)):
                if v not in self.parent:
                    self.parent[v] = u
                    self.depth[v] = self.depth[u] + 1
                    order.append(v)
        self._bfs_order = order

    @classmethod
    def line(cls, n):
        return cls(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def ring(cls, n):
        edges = [(i, i + 1) for i in range(n - 1)]
        if n > 2:
            edges.append((n - 1, 0))
        return cls(n, edges)

    @classmethod
    def complete(cls, n):
        return cls(n, [(i, j) for i in range(n) for j in range(i + 1, n)])

    @classmethod
    def star(cls, n):
        return cls(n, [(0, j) for j in range(1, n)])

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted(tuple(sorted(e)) for e in self.graph.edges)

    @property
    def tree_depth(self) -> int:
        return max(self.depth.values())


def local_information(H: MeasurementMatrix, spec: SensorSpec, z: Measurement) -> InfoPair:
    vals = np.asarray(z.values, dtype=float)
    if vals.shape != (H.m,):
        raise StructuralError(f"measurement of length {vals.size} for a {H.m}-row matrix")
    Y = np.zeros(H.n_cells)
    y = np.zeros(H.n_cells)
    Y[H.cells] = 1.0 / spec.noise_variance
    y[H.cells] = vals / spec.noise_variance
    return InfoPair(Y, y)


def aggregate(graph: CommGraph, locals_: Sequence[InfoPair]) -> InfoPair:
    if len(locals_) != graph.n_agents:
        raise StructuralError(f"{len(locals_)} local pairs for {graph.n_agents} agents")
    # convergecast: deepest agents report first, each parent merges child bundles
    bundles = {i: {i: locals_[i]} for i in range(graph.n_agents)}
    for node in reversed(graph._bfs_order[1:]):
        bundles[graph.parent[node]].update(bundles.pop(node))
    root = bundles[0]
    Y = np.zeros_like(locals_[0].Y)
    y = np.zeros_like(locals_[0].y)
    for i in sorted(root):
        Y += root[i].Y
        y += root[i].y
    # broadcast is a no-op on shared memory: every agent receives (Y, y)
    return InfoPair(Y, y)


def message_rounds(graph: CommGraph) -> int:
    return 2 * graph.tree_depth
