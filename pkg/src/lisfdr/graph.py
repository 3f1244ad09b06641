"""Undirected hypothesis-dependence graphs.

Nodes are hypotheses ``0..m-1``. Each edge carries a class label that selects
which coupling parameter it uses (high / medium / low r^2, or a single default
class for the fabricated structures).
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import GraphSizeError, StructureError

MAX_NODES = 2**31 - 1


class EdgeClass(enum.IntEnum):
    HIGH = 0
    MEDIUM = 1
    LOW = 2
    DEFAULT = 3

    @property
    def key(self) -> str:
        return self.name.lower()

    @classmethod
    def from_key(cls, key: str) -> "EdgeClass":
        try:
            return cls[key.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown edge class {key!r}") from None


class R2Record(NamedTuple):
    i: int
    j: int
    r2: float


class ForestOrder(NamedTuple):
    """Breadth-first layout of an acyclic graph.

    ``order`` lists every node so that parents precede children. ``parent[v]``
    is -1 for component roots; ``parent_edge[v]`` is the index of the edge
    joining ``v`` to its parent.
    """

    order: np.ndarray
    parent: np.ndarray
    parent_edge: np.ndarray


@dataclass(frozen=True, eq=False)
class Graph:
    m: int
    edges: np.ndarray  # (n_edges, 2) int64, canonical i < j
    classes: np.ndarray  # (n_edges,) int64 EdgeClass values

    def __post_init__(self):
        if self.m < 1 or self.m > MAX_NODES:
            raise GraphSizeError(f"node count must be in [1, {MAX_NODES}], got {self.m}")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        classes = np.asarray(self.classes, dtype=np.int64).reshape(-1)
        if len(classes) != len(edges):
            raise ValueError("one class label per edge required")
        if len(edges):
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loops are not allowed")
            if edges.min() < 0 or edges.max() >= self.m:
                raise IndexError("edge endpoint out of range")
            if np.any(edges[:, 0] > edges[:, 1]):
                raise ValueError("edges must be canonical (i < j)")
            keys = edges[:, 0] * self.m + edges[:, 1]
            if len(np.unique(keys)) != len(keys):
                raise ValueError("duplicate edge")
            valid = {int(c) for c in EdgeClass}
            if not set(np.unique(classes).tolist()) <= valid:
                raise ValueError("unknown edge class label")
        edges.setflags(write=False)
        classes.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "classes", classes)

    @classmethod
    def from_edges(cls, m: int, edges: Iterable[Sequence], default=EdgeClass.DEFAULT) -> "Graph":
        """Build from ``(i, j)`` or ``(i, j, class)`` tuples in any orientation."""
        pairs, labels = [], []
        for e in edges:
            i, j = int(e[0]), int(e[1])
            pairs.append((min(i, j), max(i, j)))
            labels.append(int(e[2]) if len(e) > 2 else int(default))
        return cls(m, np.array(pairs, dtype=np.int64).reshape(-1, 2), np.array(labels, dtype=np.int64))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_list(self) -> list[tuple[int, int, EdgeClass]]:
        return [(int(i), int(j), EdgeClass(int(c))) for (i, j), c in zip(self.edges, self.classes)]

    @cached_property
    def present_classes(self) -> tuple[EdgeClass, ...]:
        return tuple(EdgeClass(int(c)) for c in np.unique(self.classes))

    @cached_property
    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.m)]
        for i, j in self.edges.tolist():
            adj[i].append(j)
            adj[j].append(i)
        return adj

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(indptr, neighbors, edge_ids)`` with both directions of every edge."""
        n = self.n_edges
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        eid = np.concatenate([np.arange(n), np.arange(n)]).astype(np.int64)
        order = np.argsort(src, kind="stable")
        indptr = np.zeros(self.m + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return indptr, dst[order].astype(np.int64), eid[order]

    @cached_property
    def n_components(self) -> int:
        parent = np.arange(self.m)

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        count = self.m
        for i, j in self.edges.tolist():
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
                count -= 1
        return count

    @property
    def is_acyclic(self) -> bool:
        return self.n_edges == self.m - self.n_components

    @cached_property
    def forest_order(self) -> ForestOrder:
        if not self.is_acyclic:
            raise StructureError("graph has cycles")
        indptr, nbrs, eids = self.csr
        parent = np.full(self.m, -1, dtype=np.int64)
        parent_edge = np.full(self.m, -1, dtype=np.int64)
        seen = np.zeros(self.m, dtype=bool)
        order = []
        for root in range(self.m):
            if seen[root]:
                continue
            seen[root] = True
            queue = deque([root])
            while queue:
                v = queue.popleft()
                order.append(v)
                for k in range(indptr[v], indptr[v + 1]):
                    u = nbrs[k]
                    if not seen[u]:
                        seen[u] = True
                        parent[u] = v
                        parent_edge[u] = eids[k]
                        queue.append(u)
        return ForestOrder(np.array(order, dtype=np.int64), parent, parent_edge)


def build_chain(m: int) -> Graph:
    if m < 1:
        raise GraphSizeError("chain needs at least one node")
    i = np.arange(m - 1, dtype=np.int64)
    return Graph(m, np.stack([i, i + 1], axis=1), np.full(m - 1, EdgeClass.DEFAULT, dtype=np.int64))


def build_perfect_binary_tree(height: int) -> Graph:
    """Node ``k`` has children ``2k+1`` and ``2k+2``."""
    if height < 0 or 2 ** (height + 1) - 1 > MAX_NODES:
        raise GraphSizeError(f"invalid tree height {height}")
    m = 2 ** (height + 1) - 1
    child = np.arange(1, m, dtype=np.int64)
    return Graph(m, np.stack([(child - 1) // 2, child], axis=1), np.full(m - 1, EdgeClass.DEFAULT, dtype=np.int64))


def build_grid(rows: int, cols: int) -> Graph:
    """4-neighbour lattice; node id is ``r * cols + c``."""
    if rows < 1 or cols < 1:
        raise GraphSizeError("grid dimensions must be positive")
    if rows * cols > MAX_NODES:
        raise GraphSizeError("grid too large")
    ids = np.arange(rows * cols, dtype=np.int64).reshape(rows, cols)
    horiz = np.stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()], axis=1)
    vert = np.stack([ids[:-1, :].ravel(), ids[1:, :].ravel()], axis=1)
    edges = np.concatenate([horiz, vert]).reshape(-1, 2)
    return Graph(rows * cols, edges, np.full(len(edges), EdgeClass.DEFAULT, dtype=np.int64))


def classify_r2(r2: float, thresholds: tuple[float, float, float]) -> EdgeClass | None:
    t_low, t_mid, t_high = thresholds
    if r2 > t_high:
        return EdgeClass.HIGH
    if r2 > t_mid:
        return EdgeClass.MEDIUM
    if r2 >= t_low:
        return EdgeClass.LOW
    return None


def build_max_r2_graph(
    records: Iterable[R2Record | Sequence],
    m: int,
    thresholds: tuple[float, float, float] = (0.25, 0.5, 0.8),
) -> Graph:
    """Connect every node to its highest-r^2 partner, then bin edges by r^2.

    Ties in r^2 go to the partner with the lowest id. Mutual best pairs
    collapse into a single edge.
    """
    t_low, t_mid, t_high = thresholds
    if not 0 < t_low < t_mid < t_high < 1:
        raise ValueError("thresholds must satisfy 0 < t_low < t_mid < t_high < 1")
    if m < 1:
        raise GraphSizeError("need at least one node")
    best_r2 = np.full(m, -1.0)
    best = np.full(m, -1, dtype=np.int64)

    def offer(a, b, r2):
        if r2 > best_r2[a] or (r2 == best_r2[a] and b < best[a]):
            best_r2[a] = r2
            best[a] = b

    for rec in records:
        i, j, r2 = int(rec[0]), int(rec[1]), float(rec[2])
        if i < 0 or j < 0 or i >= m or j >= m:
            raise IndexError(f"record ({i}, {j}) references a node outside 0..{m - 1}")
        if i == j:
            raise ValueError("r2 record with i == j")
        if not 0.0 <= r2 <= 1.0:
            raise ValueError(f"r2 out of [0, 1]: {r2}")
        offer(i, j, r2)
        offer(j, i, r2)

    chosen: dict[tuple[int, int], EdgeClass] = {}
    for a in range(m):
        if best[a] < 0:
            continue
        label = classify_r2(best_r2[a], thresholds)
        if label is None:
            continue
        key = (min(a, int(best[a])), max(a, int(best[a])))
        chosen.setdefault(key, label)
    keys = sorted(chosen)
    return Graph(
        m,
        np.array(keys, dtype=np.int64).reshape(-1, 2),
        np.array([chosen[k] for k in keys], dtype=np.int64),
    )
