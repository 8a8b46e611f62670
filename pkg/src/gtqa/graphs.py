"""Connectivity graphs: construction, random regular sampling, loop analysis
and spectral bipartitioning.

Vertices are the integers ``0 .. n-1``. Edges are stored as ``(a, b)`` with
``a < b`` and sorted lexicographically; this order is the canonical edge
order used everywhere else in the package (BP sweeps, gate streams, files).
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import GenerationError, NumericalError, ParameterError, SchemaError, TopologyError

__all__ = [
    "ConnectivityGraph",
    "Bipartition",
    "random_regular",
    "random_tree",
    "cycle_graph",
    "path_graph",
    "complete_graph",
    "star_graph",
    "heavy_hex_127",
    "shortest_loop_lengths",
    "loop_length_histogram",
    "spectral_bipartition",
    "bipartition_objective",
    "make_bipartition",
]

Edge = tuple[int, int]

GRAPH_FORMAT = "gtqa-graph"
GRAPH_VERSION = "1.0"


def _canonical(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class ConnectivityGraph:
    """Simple undirected graph on ``n`` vertices.

    Use :meth:`from_edges` to build one; it validates and canonicalizes the
    edge list.
    """

    n: int
    edges: tuple[Edge, ...]
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"graph needs at least one vertex, got n={self.n}")
        adj: list[list[int]] = [[] for _ in range(self.n)]
        seen = set()
        for a, b in self.edges:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise TopologyError(f"edge ({a}, {b}) out of range for n={self.n}")
            if a == b:
                raise TopologyError(f"self-loop at vertex {a}")
            if a > b:
                raise TopologyError(f"edge ({a}, {b}) is not canonical; use from_edges")
            if (a, b) in seen:
                raise TopologyError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))
            adj[a].append(b)
            adj[b].append(a)
        if list(self.edges) != sorted(self.edges):
            raise TopologyError("edges must be sorted; use from_edges")
        object.__setattr__(self, "adjacency", tuple(tuple(sorted(x)) for x in adj))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "ConnectivityGraph":
        canon = set()
        for e in edges:
            a, b = int(e[0]), int(e[1])
            if a == b:
                raise TopologyError(f"self-loop at vertex {a}")
            c = _canonical(a, b)
            if c in canon:
                raise TopologyError(f"duplicate edge {c}")
            canon.add(c)
        return cls(int(n), tuple(sorted(canon)))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degree(self, a: int) -> int:
        return len(self.adjacency[a])

    def neighbors(self, a: int) -> tuple[int, ...]:
        return self.adjacency[a]

    @cached_property
    def edge_index(self) -> dict[Edge, int]:
        """Position of each edge in the canonical order, keyed both ways."""
        idx = {}
        for i, (a, b) in enumerate(self.edges):
            idx[(a, b)] = i
            idx[(b, a)] = i
        return idx

    @cached_property
    def bond_axis(self) -> dict[Edge, int]:
        """``bond_axis[(a, b)]`` is the axis of vertex ``a``'s tensor that
        carries the bond to ``b`` (axis 0 is the physical index)."""
        out = {}
        for a, nbrs in enumerate(self.adjacency):
            for pos, b in enumerate(nbrs):
                out[(a, b)] = pos + 1
        return out

    def has_edge(self, a: int, b: int) -> bool:
        return (a, b) in self.edge_index

    def index_of(self, a: int, b: int) -> int:
        try:
            return self.edge_index[(a, b)]
        except KeyError:
            raise TopologyError(f"({a}, {b}) is not an edge of the graph") from None

    def is_connected(self) -> bool:
        return len(_component(self, 0)) == self.n

    def is_tree(self) -> bool:
        return self.num_edges == self.n - 1 and self.is_connected()

    def laplacian(self) -> np.ndarray:
        lap = np.zeros((self.n, self.n))
        for a, b in self.edges:
            lap[a, b] -= 1.0
            lap[b, a] -= 1.0
            lap[a, a] += 1.0
            lap[b, b] += 1.0
        return lap

    def to_dict(self) -> dict:
        return {
            "format": GRAPH_FORMAT,
            "version": GRAPH_VERSION,
            "n": self.n,
            "edges": [[a, b] for a, b in self.edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConnectivityGraph":
        from ._io import check_version

        check_version(data, None)
        try:
            n = int(data["n"])
            edges = [(int(e[0]), int(e[1])) for e in data["edges"]]
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise SchemaError(f"malformed graph record: {exc}") from exc
        return cls.from_edges(n, edges)


def _component(g: ConnectivityGraph, start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in g.adjacency[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

MAX_PAIRING_ATTEMPTS = 20_000


def random_regular(n: int, d: int, seed: int = 0, connected: bool = False) -> ConnectivityGraph:
    """Uniform random ``d``-regular simple graph via the pairing model.

    Stubs are shuffled and paired; any pairing with a self-loop or a repeated
    edge is rejected and the next attempt uses the next derived seed
    ``(seed, attempt)``. With ``connected=True`` disconnected samples are
    rejected as well.
    """
    if n < 1 or d < 1:
        raise ParameterError(f"n and d must be positive, got n={n}, d={d}")
    if (n * d) % 2:
        raise ParameterError(f"n*d must be even, got n={n}, d={d}")
    if d >= n:
        raise ParameterError(f"need d < n, got n={n}, d={d}")

    stubs = np.repeat(np.arange(n), d)
    for attempt in range(MAX_PAIRING_ATTEMPTS):
        rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, attempt])
        perm = rng.permutation(stubs).reshape(-1, 2)
        lo = np.minimum(perm[:, 0], perm[:, 1])
        hi = np.maximum(perm[:, 0], perm[:, 1])
        if np.any(lo == hi):
            continue
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            continue
        g = ConnectivityGraph(n, tuple(sorted(zip(lo.tolist(), hi.tolist()))))
        if connected and not g.is_connected():
            continue
        return g
    raise GenerationError(f"no simple {d}-regular graph on {n} vertices after {MAX_PAIRING_ATTEMPTS} pairings")


def random_tree(n: int, seed: int = 0) -> ConnectivityGraph:
    """Uniform random labeled tree decoded from a random Pruefer sequence."""
    if n < 1:
        raise ParameterError("n must be positive")
    if n == 1:
        return ConnectivityGraph(1, ())
    if n == 2:
        return ConnectivityGraph(2, ((0, 1),))
    rng = np.random.default_rng(seed)
    seq = rng.integers(0, n, size=n - 2).tolist()
    degree = [1] * n
    for v in seq:
        degree[v] += 1
    edges = []
    import heapq

    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, v))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    u, w = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, w))
    return ConnectivityGraph.from_edges(n, edges)


def cycle_graph(n: int) -> ConnectivityGraph:
    if n < 3:
        raise ParameterError("a cycle needs at least 3 vertices")
    return ConnectivityGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> ConnectivityGraph:
    return ConnectivityGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> ConnectivityGraph:
    return ConnectivityGraph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star_graph(n: int) -> ConnectivityGraph:
    """Vertex 0 joined to each of ``1 .. n-1``."""
    return ConnectivityGraph.from_edges(n, [(0, i) for i in range(1, n)])


def heavy_hex_127() -> ConnectivityGraph:
    """The 127-qubit heavy-hex coupling graph (7 rows joined by bridge qubits)."""
    rows = [range(0, 14), range(18, 33), range(37, 52), range(56, 71),
            range(75, 90), range(94, 109), range(113, 127)]
    edges = []
    for row in rows:
        edges += [(v, v + 1) for v in list(row)[:-1]]
    # (bridge qubit, vertex in the row above, vertex in the row below)
    bridges = [
        (14, 0, 18), (15, 4, 22), (16, 8, 26), (17, 12, 30),
        (33, 20, 39), (34, 24, 43), (35, 28, 47), (36, 32, 51),
        (52, 37, 56), (53, 41, 60), (54, 45, 64), (55, 49, 68),
        (71, 58, 77), (72, 62, 81), (73, 66, 85), (74, 70, 89),
        (90, 75, 94), (91, 79, 98), (92, 83, 102), (93, 87, 106),
        (109, 96, 114), (110, 100, 118), (111, 104, 122), (112, 108, 126),
    ]
    for q, up, down in bridges:
        edges += [(up, q), (q, down)]
    return ConnectivityGraph.from_edges(127, edges)


# ---------------------------------------------------------------------------
# Loop analysis
# ---------------------------------------------------------------------------


def _bfs_distance_without_edge(g: ConnectivityGraph, src: int, dst: int) -> int | None:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        dv = dist[v]
        for w in g.adjacency[v]:
            if v == src and w == dst:
                continue  # the removed edge
            if w in dist:
                continue
            if w == dst:
                return dv + 1
            dist[w] = dv + 1
            queue.append(w)
    return None


def shortest_loop_lengths(g: ConnectivityGraph) -> dict[Edge, int | None]:
    """Length of the shortest cycle through each edge, ``None`` for bridges."""
    out: dict[Edge, int | None] = {}
    for a, b in g.edges:
        d = _bfs_distance_without_edge(g, a, b)
        out[(a, b)] = None if d is None else d + 1
    return out


def loop_length_histogram(lengths: dict[Edge, int | None]) -> dict[int, int]:
    """Counts of loop lengths; edges on no cycle are left out."""
    hist: dict[int, int] = {}
    for v in lengths.values():
        if v is not None:
            hist[v] = hist.get(v, 0) + 1
    return dict(sorted(hist.items()))


def loop_lengths_csv(lengths: dict[Edge, int | None]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["edge_a", "edge_b", "shortest_loop"])
    for (a, b), v in lengths.items():
        w.writerow([a, b, "" if v is None else v])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Bipartition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bipartition:
    part_a: tuple[int, ...]
    part_b: tuple[int, ...]
    cut_edges: tuple[Edge, ...]

    @property
    def objective(self) -> float:
        return len(self.cut_edges) / (len(self.part_a) * len(self.part_b))


def make_bipartition(g: ConnectivityGraph, part_a: Iterable[int]) -> Bipartition:
    a_set = set(int(v) for v in part_a)
    if not a_set or len(a_set) >= g.n or not a_set <= set(range(g.n)):
        raise ParameterError("part_a must be a nonempty proper subset of the vertices")
    cut = tuple(e for e in g.edges if (e[0] in a_set) != (e[1] in a_set))
    part_b = tuple(v for v in range(g.n) if v not in a_set)
    return Bipartition(tuple(sorted(a_set)), part_b, cut)


def bipartition_objective(g: ConnectivityGraph, part_a: Iterable[int]) -> float:
    """``|cut| / (|A| |B|)`` for the split ``part_a`` vs. the rest."""
    return make_bipartition(g, part_a).objective


def spectral_bipartition(g: ConnectivityGraph) -> Bipartition:
    """Best Fiedler-order prefix cut under ``|cut| / (|A| |B|)``.

    Vertices are sorted by their Fiedler-vector entry and every prefix is
    scored; ties go to the more balanced split, then to the shorter prefix.
    """
    if g.n < 2:
        raise ParameterError("bipartition needs at least two vertices")
    if not g.is_connected():
        raise ParameterError("spectral bipartition requires a connected graph")
    try:
        _, vecs = np.linalg.eigh(g.laplacian())
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Laplacian eigensolve failed: {exc}") from exc
    fiedler = vecs[:, 1]
    pivot = int(np.argmax(np.abs(fiedler) > 1e-12))
    if fiedler[pivot] < 0:
        fiedler = -fiedler
    order = sorted(range(g.n), key=lambda v: (round(float(fiedler[v]), 12), v))

    in_a = np.zeros(g.n, dtype=bool)
    cut = 0
    best = None
    for k, v in enumerate(order[:-1], start=1):
        # moving v into A flips the cut status of all its edges
        for w in g.adjacency[v]:
            cut += -1 if in_a[w] else 1
        in_a[v] = True
        score = cut / (k * (g.n - k))
        key = (round(score, 12), abs(g.n - 2 * k), k)
        if best is None or key < best[0]:
            best = (key, k)
    return make_bipartition(g, order[: best[1]])
