"""
Topology generation for the simulator.

Graphs are plain networkx graphs relabelled to 0..n-1 with a sorted,
immutable adjacency so that neighbour iteration (and therefore every
simulation) is deterministic for a given seed.
"""

import logging
import math
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field, model_validator

from proxaddr import settings

logger = logging.getLogger(__name__)

DEFAULT_MEAN_DEGREE = 10.0
DEFAULT_BRANCHING = 2


class SimulationError(Exception):
    """Base class for simulator failures."""


class TopologyUnsatisfiable(SimulationError):
    """No connected graph could be generated from the parameters."""


class TopologyKind(str, Enum):
    """Supported topology families."""
    RANDOM_GEOMETRIC = "random-geometric"
    GRID = "grid"
    TREE = "tree"


class ScheduleKind(str, Enum):
    """Join order strategies."""
    BFS = "bfs"
    RANDOM = "random"


class TopologySpec(BaseModel):
    """
    Topology parameters.

    random-geometric needs `n` and either `radius` (unit square) or
    `mean_degree`; grid needs `rows` and `cols`, or a square `n`; tree needs
    `n` or `height`, with `branching` children per node.
    """
    kind: TopologyKind
    n: Optional[int] = Field(None, gt=0)
    radius: Optional[float] = Field(None, gt=0.0)
    mean_degree: Optional[float] = Field(None, gt=0.0)
    rows: Optional[int] = Field(None, gt=0)
    cols: Optional[int] = Field(None, gt=0)
    branching: Optional[int] = Field(None, gt=0)
    height: Optional[int] = Field(None, ge=0)

    class Config:
        """Pydantic config."""
        extra = "forbid"
        json_schema_extra = {
            "example": {"kind": "grid", "rows": 10, "cols": 10}
        }

    @model_validator(mode="after")
    def _check_params(self) -> "TopologySpec":
        if self.kind is TopologyKind.RANDOM_GEOMETRIC and self.n is None:
            raise ValueError("random-geometric topology needs n")
        if self.kind is TopologyKind.GRID:
            if self.rows is None and self.cols is None:
                if self.n is None:
                    raise ValueError("grid topology needs rows and cols, or n")
                side = math.isqrt(self.n)
                if side * side != self.n:
                    raise ValueError(f"grid n={self.n} is not a perfect square; give rows and cols")
            elif self.rows is None or self.cols is None:
                raise ValueError("grid topology needs both rows and cols")
            elif self.n is not None and self.n != self.rows * self.cols:
                raise ValueError(f"grid n={self.n} does not match {self.rows}x{self.cols}")
        if self.kind is TopologyKind.TREE and self.n is None and self.height is None:
            raise ValueError("tree topology needs n or height")
        return self

    def with_n(self, n: int) -> "TopologySpec":
        """Copy of this spec scaled to `n` nodes (grid dimensions are dropped)."""
        update: Dict[str, Optional[int]] = {"n": n}
        if self.kind is TopologyKind.GRID:
            update.update(rows=None, cols=None)
        if self.kind is TopologyKind.TREE:
            update["height"] = None
        return self.model_validate({**self.model_dump(), **update})

    @property
    def size(self) -> int:
        """Node count this topology describes."""
        if self.kind is TopologyKind.GRID and self.rows is not None and self.cols is not None:
            return self.rows * self.cols
        if self.kind is TopologyKind.TREE and self.n is None:
            b = self.branching or DEFAULT_BRANCHING
            h = self.height or 0
            return h + 1 if b == 1 else (b ** (h + 1) - 1) // (b - 1)
        assert self.n is not None
        return self.n


@dataclass
class Topology:
    """
    An undirected, connected network.

    Attributes:
        graph: the networkx graph, nodes 0..n-1
        adjacency: sorted neighbour tuples indexed by node
        n: node count
        l: link count
        diameter: hop diameter (lower bound when `diameter_exact` is False)
        diameter_exact: whether `diameter` was computed exactly
        kind: topology family
    """
    graph: nx.Graph
    adjacency: Tuple[Tuple[int, ...], ...]
    n: int
    l: int
    diameter: int
    diameter_exact: bool
    kind: TopologyKind
    _paths: Dict[int, Dict[int, List[int]]] = field(default_factory=dict, repr=False)

    @classmethod
    def from_graph(
        cls,
        graph: nx.Graph,
        kind: TopologyKind,
        exact_limit: Optional[int] = None,
    ) -> "Topology":
        """Canonicalise `graph` and compute its metrics."""
        canonical = _canonical(graph)
        if canonical.number_of_nodes() == 0 or not nx.is_connected(canonical):
            raise TopologyUnsatisfiable("graph is empty or disconnected")
        limit = settings.EXACT_DIAMETER_LIMIT if exact_limit is None else exact_limit
        n = canonical.number_of_nodes()
        if n <= limit:
            diameter, exact = nx.diameter(canonical, usebounds=True), True
        else:
            diameter, exact = _double_sweep(canonical), False
        adjacency = tuple(tuple(sorted(canonical.adj[v])) for v in range(n))
        return cls(
            graph=canonical,
            adjacency=adjacency,
            n=n,
            l=canonical.number_of_edges(),
            diameter=int(diameter),
            diameter_exact=exact,
            kind=kind,
        )

    def neighbors(self, node: int) -> Tuple[int, ...]:
        return self.adjacency[node]

    def route(self, src: int, dst: int) -> Tuple[int, ...]:
        """
        Hops of a shortest path from `src` to `dst`, excluding `src`.

        Paths from one source are computed once and cached.
        """
        if src == dst:
            return ()
        paths = self._paths.get(src)
        if paths is None:
            paths = nx.single_source_shortest_path(self.graph, src)
            self._paths[src] = paths
        return tuple(paths[dst][1:])

    def distance(self, src: int, dst: int) -> int:
        return len(self.route(src, dst))


def _canonical(graph: nx.Graph) -> nx.Graph:
    relabelled = nx.convert_node_labels_to_integers(graph, ordering="sorted")
    canonical = nx.Graph()
    canonical.add_nodes_from(range(relabelled.number_of_nodes()))
    canonical.add_edges_from(sorted((min(u, v), max(u, v)) for u, v in relabelled.edges()))
    return canonical


def _farthest(graph: nx.Graph, source: int) -> Tuple[int, int]:
    lengths = nx.single_source_shortest_path_length(graph, source)
    far = max(lengths.values())
    node = min(v for v, dist in lengths.items() if dist == far)
    return node, far


def _double_sweep(graph: nx.Graph) -> int:
    """Diameter lower bound from two breadth-first sweeps."""
    u, _ = _farthest(graph, 0)
    _, d = _farthest(graph, u)
    return d


def _sub_seed(seed: int, attempt: int) -> int:
    return int(np.random.SeedSequence([seed, attempt]).generate_state(1)[0])


def _random_geometric(spec: TopologySpec, seed: int, attempts: int) -> nx.Graph:
    assert spec.n is not None
    n = spec.n
    if spec.radius is not None:
        radius = spec.radius
    else:
        mean_degree = spec.mean_degree or DEFAULT_MEAN_DEGREE
        radius = math.sqrt(mean_degree / (math.pi * max(n - 1, 1)))

    for attempt in range(attempts):
        graph = nx.random_geometric_graph(n, radius, seed=_sub_seed(seed, attempt))
        if nx.is_connected(graph):
            if attempt:
                logger.info(f"random-geometric n={n} connected after {attempt + 1} attempts")
            return graph
        logger.warning(f"random-geometric n={n} r={radius:.4f} attempt {attempt + 1} disconnected, regenerating")
    raise TopologyUnsatisfiable(
        f"no connected random-geometric graph with n={n}, r={radius:.4f} in {attempts} attempts"
    )


def build_topology(
    spec: TopologySpec,
    seed: int,
    attempts: Optional[int] = None,
    exact_limit: Optional[int] = None,
) -> Topology:
    """
    Build a connected topology.

    Deterministic for a given (spec, seed). Random-geometric graphs are
    regenerated with derived sub-seeds until connected.

    Raises:
        TopologyUnsatisfiable: no connected graph within `attempts` tries

    Example:
        >>> topo = build_topology(TopologySpec(kind="grid", rows=10, cols=10), seed=1)
        >>> topo.n, topo.l, topo.diameter
        (100, 180, 18)
    """
    attempts = settings.TOPOLOGY_ATTEMPTS if attempts is None else attempts
    if spec.kind is TopologyKind.RANDOM_GEOMETRIC:
        graph = _random_geometric(spec, seed, attempts)
    elif spec.kind is TopologyKind.GRID:
        if spec.rows is not None and spec.cols is not None:
            rows, cols = spec.rows, spec.cols
        else:
            assert spec.n is not None
            rows = cols = math.isqrt(spec.n)
        # (r, c) sorts row-major, so node r*cols + c
        graph = nx.grid_2d_graph(rows, cols)
    else:
        branching = spec.branching or DEFAULT_BRANCHING
        if spec.n is not None:
            graph = nx.full_rary_tree(branching, spec.n)
        else:
            assert spec.height is not None
            graph = nx.balanced_tree(branching, spec.height)

    topology = Topology.from_graph(graph, spec.kind, exact_limit)
    logger.info(
        f"built {spec.kind.value} topology: n={topology.n} l={topology.l} "
        f"d={topology.diameter}{'' if topology.diameter_exact else ' (lower bound)'}"
    )
    return topology


def join_schedule(
    topology: Topology,
    controller: int,
    kind: ScheduleKind = ScheduleKind.BFS,
    seed: int = 0,
) -> List[int]:
    """
    Order in which the non-controller nodes join.

    Every node in the result is adjacent to the controller or to a node
    earlier in the list. "bfs" visits breadth-first with neighbours in id
    order; "random" picks uniformly (seeded) among nodes adjacent to the
    already scheduled set.
    """
    if not 0 <= controller < topology.n:
        raise ValueError(f"controller {controller} is not a node of the topology")

    order: List[int] = []
    if ScheduleKind(kind) is ScheduleKind.BFS:
        seen = {controller}
        queue = deque([controller])
        while queue:
            v = queue.popleft()
            for w in topology.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    order.append(w)
                    queue.append(w)
        return order

    rng = random.Random(_sub_seed(seed, 0))
    placed = {controller}
    frontier: List[int] = []
    in_frontier = set()
    for w in topology.neighbors(controller):
        frontier.append(w)
        in_frontier.add(w)
    while frontier:
        i = rng.randrange(len(frontier))
        frontier[i], frontier[-1] = frontier[-1], frontier[i]
        v = frontier.pop()
        in_frontier.discard(v)
        placed.add(v)
        order.append(v)
        for w in topology.neighbors(v):
            if w not in placed and w not in in_frontier:
                frontier.append(w)
                in_frontier.add(w)
    return order
