"""Graphs, distance matrices and intersection numbers."""

from __future__ import annotations

import io
import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import TextIO

import numpy as np


class GraphFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DisconnectedGraphError(ValueError):
    pass


class NotDistanceRegularError(ValueError):
    def __init__(self, message: str, triple=None, pair=None):
        self.triple = triple
        self.pair = pair
        super().__init__(message)


@dataclass(frozen=True)
class Graph:
    """A finite simple connected graph on the vertices 0..n-1."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphFormatError(f"edge ({u}, {v}) out of range")
            if u == v:
                raise GraphFormatError(f"loop at vertex {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphFormatError(f"duplicate edge {key}")
            seen.add(key)
        if self.n == 0:
            raise GraphFormatError("empty graph")
        if len(_bfs(self.neighbours(), 0)) != self.n:
            raise DisconnectedGraphError("graph is not connected")

    def neighbours(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for lst in adj:
            lst.sort()
        return adj

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=np.int64)
        for u, v in self.edges:
            A[u, v] = A[v, u] = 1
        return A


def _bfs(adj: list[list[int]], source: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


# ---------------------------------------------------------------------------
# text format


def parse_graph(text: str) -> Graph:
    """Read the edge-list format: a header ``n m`` then ``m`` lines ``u v``."""
    header = None
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError("expected two integers", lineno)
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError("expected two integers", lineno) from None
        if header is None:
            if a <= 0 or b < 0:
                raise GraphFormatError("bad header", lineno)
            header = (a, b)
            continue
        n = header[0]
        if a == b:
            raise GraphFormatError(f"loop at vertex {a}", lineno)
        if not (0 <= a < b < n):
            raise GraphFormatError(f"edge must satisfy 0 <= u < v < {n}", lineno)
        edges.append((a, b))
    if header is None:
        raise GraphFormatError("missing header line")
    if len(edges) != header[1]:
        raise GraphFormatError(f"header announces {header[1]} edges, found {len(edges)}")
    if len(set(edges)) != len(edges):
        raise GraphFormatError("duplicate edge")
    return Graph(header[0], tuple(edges))


def load_graph(source: TextIO | str | Path) -> Graph:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            return parse_graph(fh.read())
    return parse_graph(source.read())


def format_graph(g: Graph, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    buf.write(f"{g.n} {len(g.edges)}\n")
    for u, v in sorted((min(e), max(e)) for e in g.edges):
        buf.write(f"{u} {v}\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# constructors


def _from_adjacency_rule(vertices, adjacent) -> Graph:
    index = {v: i for i, v in enumerate(vertices)}
    edges = [
        (index[x], index[y])
        for x, y in itertools.combinations(vertices, 2)
        if adjacent(x, y)
    ]
    return Graph(len(vertices), tuple(edges))


def hamming(D: int, q: int) -> Graph:
    """Hamming graph H(D, q): words of length D, adjacent when differing once."""
    words = list(itertools.product(range(q), repeat=D))
    return _from_adjacency_rule(words, lambda x, y: sum(a != b for a, b in zip(x, y)) == 1)


def hypercube(D: int) -> Graph:
    return hamming(D, 2)


def johnson(n: int, k: int) -> Graph:
    """Johnson graph J(n, k): k-subsets, adjacent when meeting in k-1 points."""
    subsets = [frozenset(c) for c in itertools.combinations(range(n), k)]
    return _from_adjacency_rule(subsets, lambda x, y: len(x & y) == k - 1)


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple(itertools.combinations(range(n), 2)))


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)) + ((0, n - 1),))


def complete_multipartite(parts: int, size: int) -> Graph:
    vertices = [(p, i) for p in range(parts) for i in range(size)]
    return _from_adjacency_rule(vertices, lambda x, y: x[0] != y[0])


def dodecahedron() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    middle = [(5 + i, 10 + i) for i in range(5)] + [(5 + i, 10 + (i - 1) % 5) for i in range(5)]
    inner_spokes = [(10 + i, 15 + i) for i in range(5)]
    inner = [(15 + i, 15 + (i + 1) % 5) for i in range(5)]
    edges = {tuple(sorted(e)) for e in outer + spokes + middle + inner_spokes + inner}
    return Graph(20, tuple(sorted(edges)))


# ---------------------------------------------------------------------------
# distances and intersection numbers


@dataclass(frozen=True)
class DistanceData:
    diameter: int
    dist: np.ndarray
    matrices: tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def adjacency(self) -> np.ndarray:
        return self.matrices[1] if self.diameter >= 1 else np.zeros_like(self.dist)


def distance_data(g: Graph) -> DistanceData:
    adj = g.neighbours()
    dist = np.zeros((g.n, g.n), dtype=np.int64)
    for x in range(g.n):
        for y, d in _bfs(adj, x).items():
            dist[x, y] = d
    D = int(dist.max())
    mats = tuple((dist == i).astype(np.int64) for i in range(D + 1))
    return DistanceData(D, dist, mats)


@dataclass(frozen=True)
class IntersectionNumbers:
    """Intersection numbers of a distance-regular graph.

    ``p[h, i, j]`` is the number of vertices at distance i from x and j
    from y whenever x, y are at distance h.  The sequences ``c``, ``a``,
    ``b`` and ``k`` have length D+1 with the usual conventions c[0] = 0
    and b[D] = 0.
    """

    p: np.ndarray
    c: tuple[int, ...]
    a: tuple[int, ...]
    b: tuple[int, ...]
    k: tuple[int, ...]

    @property
    def diameter(self) -> int:
        return len(self.k) - 1

    @property
    def valency(self) -> int:
        return self.b[0]


def verify_distance_regular(dd: DistanceData) -> IntersectionNumbers:
    D, dist, n = dd.diameter, dd.dist, dd.n
    size = D + 1
    table = np.full((size, size, size), -1, dtype=np.int64)
    witness: dict[int, tuple[int, int]] = {}
    for x in range(n):
        for y in range(n):
            h = int(dist[x, y])
            counts = np.bincount(dist[x] * size + dist[y], minlength=size * size).reshape(size, size)
            if h not in witness:
                table[h] = counts
                witness[h] = (x, y)
                continue
            diff = np.argwhere(counts != table[h])
            if diff.size:
                i, j = (int(v) for v in diff[0])
                raise NotDistanceRegularError(
                    f"p^{h}_({i},{j}) differs: pair {witness[h]} gives {table[h][i, j]}, "
                    f"pair {(x, y)} gives {counts[i, j]}",
                    triple=(h, i, j),
                    pair=(x, y),
                )
    mats = dd.matrices
    for i in range(size):
        for j in range(size):
            lhs = mats[i] @ mats[j]
            rhs = sum(table[h, i, j] * mats[h] for h in range(size))
            if not np.array_equal(lhs, rhs):
                raise NotDistanceRegularError(f"A_{i} A_{j} is not expanded by the table")
    k = tuple(int(table[0, i, i]) for i in range(size))
    c = (0,) + tuple(int(table[i, 1, i - 1]) for i in range(1, size))
    a = tuple(int(table[i, 1, i]) for i in range(size))
    b = tuple(int(table[i, 1, i + 1]) for i in range(size - 1)) + (0,)
    valency = k[1] if D >= 1 else 0
    for i in range(size):
        if c[i] + a[i] + b[i] != valency:
            raise NotDistanceRegularError(f"c_{i} + a_{i} + b_{i} != k")
        if Fraction(_prod(b[:i]), _prod(c[1 : i + 1])) != k[i]:
            raise NotDistanceRegularError(f"valency k_{i} disagrees with the b/c product")
    if D >= 1 and c[1] != 1:
        raise NotDistanceRegularError("c_1 != 1")
    for h, i, j in itertools.product(range(size), repeat=3):
        if max(h, i, j) * 2 > h + i + j and table[h, i, j] != 0:
            raise NotDistanceRegularError(f"p^{h}_({i},{j}) violates the triangle inequality")
    return IntersectionNumbers(table, c, a, b, k)


def _prod(xs) -> int:
    out = 1
    for x in xs:
        out *= x
    return out
