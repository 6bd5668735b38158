"""Search planning on the grid graph: greedy walks, a brute-force oracle,
round-robin joint planning, and the per-step search control law."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .search_density import SearchGrid

# distances are compared after rounding so that equal-length routes summed in
# different orders still tie and fall back to the node-id rule
_TIE_DECIMALS = 9


@dataclass
class SearchGraph:
    nodes: list[int]
    edges: dict[tuple[int, int], float]
    positions: np.ndarray | None = None

    def __post_init__(self):
        self.nodes = sorted(self.nodes)
        self._index = {v: i for i, v in enumerate(self.nodes)}
        n = len(self.nodes)
        rows, cols, vals = [], [], []
        for (i, j), c in self.edges.items():
            if c <= 0:
                raise ValueError(f"edge {(i, j)} has non-positive cost {c}")
            a, b = self._index[i], self._index[j]
            rows += [a, b]
            cols += [b, a]
            vals += [c, c]
        self._adj = csr_matrix((vals, (rows, cols)), shape=(n, n))
        self._dist, self._pred = dijkstra(self._adj, directed=False, return_predecessors=True)

    @classmethod
    def from_edge_list(cls, edges, positions=None) -> "SearchGraph":
        emap: dict[tuple[int, int], float] = {}
        nodes: set[int] = set()
        for i, j, c in edges:
            key = (min(i, j), max(i, j))
            emap[key] = float(c)
            nodes.update((i, j))
        return cls(sorted(nodes), emap, positions)

    def neighbors(self, i: int) -> list[int]:
        row = self._adj.getrow(self._index[i])
        return sorted(self.nodes[k] for k in row.indices)

    def cost(self, i: int, j: int) -> float:
        key = (min(i, j), max(i, j))
        if key not in self.edges:
            raise KeyError(f"{i} and {j} are not adjacent")
        return self.edges[key]

    def distance(self, i: int, j: int) -> float:
        return float(self._dist[self._index[i], self._index[j]])

    def path(self, i: int, j: int) -> list[int]:
        """Shortest path from i to j (inclusive of both ends)."""
        a, b = self._index[i], self._index[j]
        if not np.isfinite(self._dist[a, b]):
            raise ValueError(f"{j} is unreachable from {i}")
        out = [b]
        while out[-1] != a:
            out.append(int(self._pred[a, out[-1]]))
        return [self.nodes[k] for k in reversed(out)]

    def walk_cost(self, walk: list[int]) -> float:
        return float(sum(self.cost(u, v) for u, v in zip(walk, walk[1:])))

    def is_walk(self, walk: list[int]) -> bool:
        return all((min(u, v), max(u, v)) in self.edges for u, v in zip(walk, walk[1:]))

    def nearest(self, head: int, candidates) -> int | None:
        """Closest candidate by graph distance; ties go to the lowest id."""
        best, best_d = None, np.inf
        row = self._dist[self._index[head]]
        for v in sorted(candidates):
            d = round(float(row[self._index[v]]), _TIE_DECIMALS)
            if d < best_d:
                best, best_d = v, d
        return best


@dataclass
class Plan:
    nodes: list[int]
    owner: int = 0
    assigned: frozenset = field(default_factory=frozenset)

    def cost(self, gr: SearchGraph) -> float:
        return gr.walk_cost(self.nodes)


@lru_cache(maxsize=16)
def _grid_graph(origin, cell, nx, ny, connectivity) -> SearchGraph:
    steps = [(1, 0), (0, 1)]
    if connectivity == 8:
        steps += [(1, 1), (-1, 1)]
    elif connectivity != 4:
        raise ValueError("connectivity must be 4 or 8")
    edges = {}
    for iy in range(ny):
        for ix in range(nx):
            u = iy * nx + ix
            for dx, dy in steps:
                jx, jy = ix + dx, iy + dy
                if 0 <= jx < nx and 0 <= jy < ny:
                    v = jy * nx + jx
                    edges[(min(u, v), max(u, v))] = cell * float(np.hypot(dx, dy))
    ix = np.tile(np.arange(nx), ny)
    iy = np.repeat(np.arange(ny), nx)
    pos = np.column_stack([origin[0] + (ix + 0.5) * cell, origin[1] + (iy + 0.5) * cell])
    return SearchGraph(list(range(nx * ny)), edges, pos)


def build_graph(g: SearchGrid, connectivity: int = 8) -> SearchGraph:
    return _grid_graph(*g.geometry(), connectivity)


def _extend(gr: SearchGraph, walk: list[int], target: int, remaining: set[int], covered: set[int]):
    for v in gr.path(walk[-1], target)[1:]:
        walk.append(v)
        if v in remaining:
            remaining.discard(v)
            covered.add(v)


def greedy_path(gr: SearchGraph, targets, start: int) -> Plan:
    """Nearest-unvisited-node walk from ``start`` until every target is covered."""
    remaining = set(targets)
    covered: set[int] = set()
    if start in remaining:
        remaining.discard(start)
        covered.add(start)
    walk = [start]
    while remaining:
        nxt = gr.nearest(walk[-1], remaining)
        if nxt is None or not np.isfinite(gr.distance(walk[-1], nxt)):
            break
        _extend(gr, walk, nxt, remaining, covered)
    return Plan(walk, assigned=frozenset(covered))


MAX_EXACT_TARGETS = 6


def exact_path_small(gr: SearchGraph, targets, start: int) -> Plan:
    """Minimum-cost open walk from ``start`` covering ``targets`` (brute force).

    Only meant as a reference for tiny instances.
    """
    todo = sorted(set(targets) - {start})
    if len(todo) > MAX_EXACT_TARGETS:
        raise ValueError(f"exact search is limited to {MAX_EXACT_TARGETS} targets")
    best_order, best_cost = (), 0.0 if not todo else np.inf
    for order in itertools.permutations(todo):
        c, prev = 0.0, start
        for v in order:
            c += gr.distance(prev, v)
            prev = v
        if round(c, _TIE_DECIMALS) < round(best_cost, _TIE_DECIMALS):
            best_order, best_cost = order, c
    walk = [start]
    for v in best_order:
        walk += gr.path(walk[-1], v)[1:]
    return Plan(walk, assigned=frozenset(set(targets)))


def joint_plan(gr: SearchGraph, targets, starts: list[int]) -> list[Plan]:
    """Round-robin greedy partition of ``targets`` among agents at ``starts``.

    Agents take turns in index order; each turn appends the remaining target
    nearest (by graph distance) to that agent's walk head, splicing in the
    connecting path.
    """
    if not starts:
        raise ValueError("joint planning needs at least one agent")
    remaining = set(targets)
    walks = [[s] for s in starts]
    covered: list[set[int]] = [set() for _ in starts]
    n = len(starts)
    stalled = 0
    turn = 0
    while remaining and stalled < n:
        j = turn % n
        turn += 1
        nxt = gr.nearest(walks[j][-1], remaining)
        if nxt is None or not np.isfinite(gr.distance(walks[j][-1], nxt)):
            stalled += 1
            continue
        stalled = 0
        if nxt == walks[j][-1]:
            remaining.discard(nxt)
            covered[j].add(nxt)
            continue
        _extend(gr, walks[j], nxt, remaining, covered[j])
    return [Plan(w, owner=j, assigned=frozenset(c)) for j, (w, c) in enumerate(zip(walks, covered))]


def search_control(s, U, v) -> tuple[float, float]:
    """Control whose resulting position is closest to node centre ``v``."""
    if not U:
        raise ValueError("empty control set")
    best, best_d = U[0], np.inf
    for u in U:
        d = round(float(np.hypot(u[0] - v[0], u[1] - v[1])), _TIE_DECIMALS)
        if d < best_d:
            best, best_d = u, d
    return best
