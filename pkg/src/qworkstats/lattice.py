"""Spin-lattice graphs, edge colorings and circuit-cost accounting.

The heavy-hex family is generated from a fixed 133-site patch (seven rows of
fifteen sites joined by bridge sites). Three boundary sites are trimmed to
obtain the 130-site, 144-edge layout of diameter 29; smaller layouts are
prefixes of a breadth-first growth order, so they are nested and connected.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence


class GraphError(ValueError):
    pass


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Simple connected undirected graph on vertices ``0..n_vertices-1``."""

    n_vertices: int
    edges: tuple[tuple[int, int], ...]
    layout_id: str | None = None

    def __post_init__(self):
        if self.n_vertices < 1:
            raise GraphError("graph needs at least one vertex")
        normed = []
        seen = set()
        for e in self.edges:
            u, v = (int(x) for x in e)
            if u == v:
                raise GraphError(f"self-loop on vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise GraphError(f"edge {(u, v)} out of range for n={self.n_vertices}")
            key = _norm_edge(u, v)
            if key in seen:
                raise GraphError(f"duplicate edge {key}")
            seen.add(key)
            normed.append(key)
        object.__setattr__(self, "edges", tuple(normed))
        if not _is_connected(self.n_vertices, self.edges):
            raise GraphError("graph is not connected")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency()]

    @property
    def max_degree(self) -> int:
        return max(self.degrees())

    def to_dict(self) -> dict:
        return {
            "n_vertices": self.n_vertices,
            "edges": [list(e) for e in self.edges],
            "layout_id": self.layout_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        try:
            n = int(data["n_vertices"])
            edges = tuple(tuple(e) for e in data["edges"])
        except (KeyError, TypeError) as exc:
            raise GraphError(f"graph needs 'n_vertices' and an 'edges' list of pairs ({exc})") from exc
        if any(len(e) != 2 for e in edges):
            raise GraphError("every edge must be a pair of vertex indices")
        return cls(n, edges, data.get("layout_id"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        return cls.from_dict(json.loads(text))


def load_graph(path: str | Path) -> Graph:
    return Graph.from_json(Path(path).read_text())


def _is_connected(n: int, edges: Iterable[tuple[int, int]]) -> bool:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * n
    seen[0] = True
    stack = [0]
    count = 1
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                count += 1
                stack.append(w)
    return count == n


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)), f"path-{n}")


def cycle_graph(n: int) -> Graph:
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)), f"cycle-{n}")


# ---------------------------------------------------------------------------
# heavy-hex family

HEAVY_HEX_ROWS = 7
HEAVY_HEX_ROW_LENGTH = 15
# bridge columns alternate between even and odd row gaps
_BRIDGES_EVEN = (0, 4, 8, 12)
_BRIDGES_ODD = (2, 6, 10, 14)
# sites trimmed from the 133-site patch to reach 130 sites / 144 edges / diameter 29
_TRIMMED_SITES = (("row", 0, 0), ("row", 0, 5), ("row", 1, 5))
# first site of the growth order; it has degree 3 so layout 1 is a star
_GROWTH_SEED = ("row", 0, 8)

LAYOUT_SIZES = (4, 7, 13, 20, 27, 33, 40, 48, 56, 65, 75, 87, 102, 116, 130)
SCAN_SIZES = (5, 10, 15, 19, 22, 27)


def heavy_hex_patch(
    rows: int = HEAVY_HEX_ROWS, row_length: int = HEAVY_HEX_ROW_LENGTH, dangling: bool = True
) -> tuple[list[tuple], list[tuple[tuple, tuple]]]:
    """Return ``(sites, edges)`` of a heavy-hex patch with labelled sites.

    Rows are paths of ``row_length`` sites. Consecutive rows are joined by
    degree-2 bridge sites; with ``dangling`` an extra set of bridges hangs
    below the last row (as on 133-qubit heavy-hex devices).
    """
    sites: list[tuple] = []
    edges: list[tuple[tuple, tuple]] = []
    for r in range(rows):
        for j in range(row_length):
            sites.append(("row", r, j))
            if j:
                edges.append((("row", r, j - 1), ("row", r, j)))
    n_gaps = rows if dangling else rows - 1
    for r in range(n_gaps):
        cols = _BRIDGES_EVEN if r % 2 == 0 else _BRIDGES_ODD
        for j in cols:
            if j >= row_length:
                continue
            b = ("bridge", r, j)
            sites.append(b)
            edges.append((("row", r, j), b))
            if r + 1 < rows:
                edges.append((b, ("row", r + 1, j)))
    return sites, edges


def _heavy_hex_order() -> tuple[list[tuple], list[tuple[tuple, tuple]]]:
    sites, edges = heavy_hex_patch()
    trimmed = set(_TRIMMED_SITES)
    sites = [s for s in sites if s not in trimmed]
    edges = [e for e in edges if e[0] not in trimmed and e[1] not in trimmed]
    rank = {s: i for i, s in enumerate(sites)}
    adj: dict[tuple, list[tuple]] = {s: [] for s in sites}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    order = [_GROWTH_SEED]
    seen = {_GROWTH_SEED}
    queue = deque(order)
    while queue:
        s = queue.popleft()
        for w in sorted(adj[s], key=rank.__getitem__):
            if w not in seen:
                seen.add(w)
                order.append(w)
                queue.append(w)
    return order, edges


_ORDER_CACHE: tuple[dict[tuple, int], list[tuple[int, int]]] | None = None


def _heavy_hex_indexed() -> tuple[dict[tuple, int], list[tuple[int, int]]]:
    global _ORDER_CACHE
    if _ORDER_CACHE is None:
        order, edges = _heavy_hex_order()
        index = {s: i for i, s in enumerate(order)}
        int_edges = sorted(_norm_edge(index[a], index[b]) for a, b in edges)
        _ORDER_CACHE = (index, int_edges)
    return _ORDER_CACHE


def heavy_hex_layout(layout_index: int | None = None, size_hint: int | None = None) -> Graph:
    """Heavy-hex layout by index (1..15) or by number of sites (2..130).

    Vertex ``k`` is the ``k``-th site of the growth order, so every layout is
    an induced subgraph of all larger ones with consistent labels.
    """
    if (layout_index is None) == (size_hint is None):
        raise ValueError("give exactly one of layout_index or size_hint")
    if layout_index is not None:
        if not 1 <= layout_index <= len(LAYOUT_SIZES):
            raise ValueError(f"layout_index must be in 1..{len(LAYOUT_SIZES)}, got {layout_index}")
        n = LAYOUT_SIZES[layout_index - 1]
        label = f"heavy-hex-L{layout_index}"
    else:
        n = int(size_hint)
        if n < 2:
            raise ValueError(f"size_hint must be >= 2, got {n}")
        if n > LAYOUT_SIZES[-1]:
            raise ValueError(f"size_hint must be <= {LAYOUT_SIZES[-1]}, got {n}")
        label = f"heavy-hex-n{n}"
    _, edges = _heavy_hex_indexed()
    sub = tuple(e for e in edges if e[1] < n)
    return Graph(n, sub, label)


# ---------------------------------------------------------------------------
# edge coloring


@dataclass(frozen=True)
class EdgeColoring:
    color_of_edge: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def n_colors(self) -> int:
        return 1 + max(self.color_of_edge.values()) if self.color_of_edge else 0

    def classes(self, g: Graph) -> list[list[tuple[int, int]]]:
        """Edges grouped by color, each group in ``g.edges`` order."""
        out: list[list[tuple[int, int]]] = [[] for _ in range(self.n_colors)]
        for e in g.edges:
            out[self.color_of_edge[e]].append(e)
        return out

    def is_proper(self, g: Graph) -> bool:
        if set(self.color_of_edge) != set(g.edges):
            return False
        used: set[tuple[int, int]] = set()
        for (u, v), c in self.color_of_edge.items():
            if (u, c) in used or (v, c) in used:
                return False
            used.add((u, c))
            used.add((v, c))
        return True

    def matches(self, g: Graph) -> bool:
        return set(self.color_of_edge) == set(g.edges)


def is_bipartite(g: Graph) -> bool:
    side = [-1] * g.n_vertices
    adj = g.adjacency()
    side[0] = 0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if side[w] < 0:
                side[w] = 1 - side[u]
                queue.append(w)
            elif side[w] == side[u]:
                return False
    return True


class _ColorState:
    def __init__(self, n: int, n_colors: int):
        self.n_colors = n_colors
        self.at: list[dict[int, int]] = [dict() for _ in range(n)]
        self.color: dict[tuple[int, int], int] = {}

    def free(self, v: int) -> int:
        for c in range(self.n_colors):
            if c not in self.at[v]:
                return c
        raise RuntimeError(f"no free color at vertex {v}")

    def is_free(self, v: int, c: int) -> bool:
        return c not in self.at[v]

    def set(self, a: int, b: int, c: int) -> None:
        self.color[_norm_edge(a, b)] = c
        self.at[a][c] = b
        self.at[b][c] = a

    def unset(self, a: int, b: int) -> int:
        c = self.color.pop(_norm_edge(a, b))
        del self.at[a][c]
        del self.at[b][c]
        return c

    def flip_path(self, start: int, c1: int, c2: int) -> None:
        """Swap colors c1/c2 along the alternating path leaving ``start`` on c1."""
        path = []
        x, col = start, c1
        while col in self.at[x]:
            y = self.at[x][col]
            path.append((x, y, col))
            x, col = y, (c2 if col == c1 else c1)
        for a, b, _ in path:
            self.unset(a, b)
        for a, b, col in path:
            self.set(a, b, c2 if col == c1 else c1)


def _konig_coloring(g: Graph) -> dict[tuple[int, int], int]:
    # bipartite: an a/b alternating path from v never reaches u, so Delta colors suffice
    st = _ColorState(g.n_vertices, g.max_degree)
    for u, v in g.edges:
        a = st.free(u)
        if not st.is_free(v, a):
            b = st.free(v)
            st.flip_path(v, a, b)
        st.set(u, v, a)
    return st.color


def _misra_gries_coloring(g: Graph) -> dict[tuple[int, int], int]:
    st = _ColorState(g.n_vertices, g.max_degree + 1)
    for u, v in g.edges:
        fan = [v]
        in_fan = {v}
        grown = True
        while grown:
            grown = False
            last = fan[-1]
            for c, w in sorted(st.at[u].items()):
                if w not in in_fan and st.is_free(last, c):
                    fan.append(w)
                    in_fan.add(w)
                    grown = True
                    break
        c = st.free(u)
        d = st.free(fan[-1])
        if c != d:
            st.flip_path(u, d, c)
        # first fan prefix that is still a fan and ends on a vertex missing d
        k = None
        for i, w in enumerate(fan):
            if i > 0:
                prev_col = st.color.get(_norm_edge(u, w))
                if prev_col is None or not st.is_free(fan[i - 1], prev_col):
                    break
            if st.is_free(w, d):
                k = i
                break
        if k is None:
            raise RuntimeError("Misra-Gries fan search failed")
        shifted = [st.color[_norm_edge(u, fan[j + 1])] for j in range(k)]
        for j in range(1, k + 1):
            st.unset(u, fan[j])
        for j in range(k):
            st.set(u, fan[j], shifted[j])
        st.set(u, fan[k], d)
    return st.color


def color_edges(g: Graph) -> EdgeColoring:
    """Proper edge coloring: Delta colors on bipartite graphs, at most Delta+1 otherwise."""
    if is_bipartite(g):
        colors = _konig_coloring(g)
    else:
        colors = _misra_gries_coloring(g)
    return EdgeColoring({e: colors[e] for e in g.edges})


# ---------------------------------------------------------------------------
# distances and cost


def bfs_distances(g: Graph, source: int) -> list[int]:
    adj = g.adjacency()
    dist = [-1] * g.n_vertices
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def graph_diameter(g: Graph) -> int:
    best = 0
    for s in range(g.n_vertices):
        dist = bfs_distances(g, s)
        if min(dist) < 0:
            raise GraphError("diameter undefined for a disconnected graph")
        best = max(best, max(dist))
    return best


@dataclass(frozen=True)
class CostReport:
    n_vertices: int
    n_edges: int
    n_colors: int
    n_trotter: int
    ry_count: int
    ry_depth: int
    mid_measure_count: int
    mid_measure_depth: int
    rz_count: int
    rz_depth: int
    rxx_count: int
    rxx_depth: int
    final_measure_count: int
    final_measure_depth: int

    @property
    def total_depth(self) -> int:
        return (self.ry_depth + self.mid_measure_depth + self.rz_depth
                + self.rxx_depth + self.final_measure_depth)

    @property
    def total_ops(self) -> int:
        return (self.ry_count + self.mid_measure_count + self.rz_count
                + self.rxx_count + self.final_measure_count)

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["total_depth"] = self.total_depth
        out["total_ops"] = self.total_ops
        return out


def circuit_cost(g: Graph, n_trotter: int, coloring: EdgeColoring | None = None) -> CostReport:
    if n_trotter < 1:
        raise ValueError(f"n_trotter must be >= 1, got {n_trotter}")
    c = (coloring or color_edges(g)).n_colors
    n, m = g.n_vertices, g.n_edges
    return CostReport(
        n_vertices=n, n_edges=m, n_colors=c, n_trotter=n_trotter,
        ry_count=n, ry_depth=1,
        mid_measure_count=n, mid_measure_depth=1,
        rz_count=n * (n_trotter + 1), rz_depth=n_trotter + 1,
        rxx_count=m * n_trotter, rxx_depth=c * n_trotter,
        final_measure_count=n, final_measure_depth=1,
    )


def graph_from_edges(edges: Sequence[Sequence[int]], n_vertices: int | None = None,
                     layout_id: str | None = None) -> Graph:
    if n_vertices is None:
        n_vertices = 1 + max(max(e) for e in edges)
    return Graph(n_vertices, tuple(tuple(e) for e in edges), layout_id)
