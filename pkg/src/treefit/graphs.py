"""Host-graph core: immutable simple graphs, structural queries and file I/O.

Vertices are dense integers 0..n-1; external labels are renumbered on
ingestion.  Average degree is kept as an exact ``Fraction`` so that degree
predicates compared against integer thresholds are never subject to float
error.
"""

from __future__ import annotations

import functools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

from .errors import ContractViolation, ParseError

__all__ = [
    "Graph",
    "Bipartition",
    "DegreeStats",
    "parse_graph",
    "parse_edge_list",
    "parse_graph6",
    "to_edge_list",
    "to_graph6",
    "components",
    "bipartition",
    "diameter",
    "ball",
    "degree_stats",
    "canonical_key",
    "enumerate_graphs",
    "enumerate_connected_graphs",
]


class Graph:
    """Undirected simple graph on {0..n-1}, immutable after construction."""

    __slots__ = ("n", "_adj", "_edges", "_masks")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        if n < 0:
            raise ContractViolation("vertex count must be nonnegative")
        adj: list[set[int]] = [set() for _ in range(n)]
        eset: set[tuple[int, int]] = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ContractViolation(f"edge ({u},{v}) out of range for n={n}")
            if u == v:
                raise ContractViolation(f"self-loop at vertex {u}")
            if u > v:
                u, v = v, u
            if (u, v) in eset:
                continue
            eset.add((u, v))
            adj[u].add(v)
            adj[v].add(u)
        self.n = n
        self._adj = tuple(frozenset(s) for s in adj)
        self._edges = frozenset(eset)
        self._masks: Optional[tuple[int, ...]] = None

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return self._edges

    def edge_count(self) -> int:
        return len(self._edges)

    def neighbors(self, v: int) -> frozenset[int]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def vertices(self) -> range:
        return range(self.n)

    def adjacency_masks(self) -> tuple[int, ...]:
        """Neighbor sets as bitmask integers (cached)."""
        if self._masks is None:
            masks = []
            for v in range(self.n):
                m = 0
                for u in self._adj[v]:
                    m |= 1 << u
                masks.append(m)
            self._masks = tuple(masks)
        return self._masks

    def induced(self, vertices: Iterable[int]) -> tuple["Graph", dict[int, int]]:
        """Induced subgraph with dense renumbering; returns (graph, old->new map)."""
        vs = sorted(set(vertices))
        idx = {v: i for i, v in enumerate(vs)}
        edges = [
            (idx[u], idx[v])
            for (u, v) in self._edges
            if u in idx and v in idx
        ]
        return Graph(len(vs), edges), idx

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Image of the graph under vertex permutation v -> perm[v]."""
        return Graph(self.n, [(perm[u], perm[v]) for (u, v) in self._edges])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self._edges == other._edges
        )

    def __hash__(self) -> int:
        return hash((self.n, self._edges))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={len(self._edges)})"


@dataclass(frozen=True)
class Bipartition:
    """Two-coloring classes of one connected component; classA is the larger
    class (ties broken toward the class containing the smallest vertex)."""

    classA: frozenset[int]
    classB: frozenset[int]


@dataclass(frozen=True)
class DegreeStats:
    minimum: int
    average: Fraction
    maximum: int


# ---------------------------------------------------------------------------
# parsing / serialization
# ---------------------------------------------------------------------------

def parse_edge_list(text: str) -> Graph:
    """Parse "u v" per line; '#' starts a comment; a lone token declares an
    isolated vertex.  Vertices are densely renumbered 0..n-1 in sorted order
    of their external labels."""
    labels: set[int] = set()
    raw_edges: list[tuple[int, int, int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise ParseError(f"non-integer token in {parts!r}", line=lineno)
        if len(nums) == 1:
            labels.add(nums[0])
        elif len(nums) == 2:
            u, v = nums
            if u == v:
                raise ParseError(f"self-loop {u}", line=lineno)
            labels.update(nums)
            raw_edges.append((u, v, lineno))
        else:
            raise ParseError(f"expected 1 or 2 tokens, got {len(nums)}", line=lineno)
    order = {lab: i for i, lab in enumerate(sorted(labels))}
    return Graph(len(order), [(order[u], order[v]) for u, v, _ in raw_edges])


def to_edge_list(g: Graph) -> str:
    """Canonical edge-list text; round-trips through :func:`parse_edge_list`."""
    lines = [f"{u} {v}" for u, v in sorted(g.edges)]
    covered = set()
    for u, v in g.edges:
        covered.add(u)
        covered.add(v)
    lines.extend(str(v) for v in range(g.n) if v not in covered)
    return "\n".join(lines) + ("\n" if lines else "")


def _g6_read_n(data: bytes) -> tuple[int, int]:
    if not data:
        raise ParseError("empty graph6 payload", offset=0)
    b0 = data[0]
    if b0 == 126:  # extended sizes
        if len(data) >= 4 and data[1] != 126:
            n = 0
            for i in range(1, 4):
                if not (63 <= data[i] <= 126):
                    raise ParseError("bad graph6 size byte", offset=i)
                n = (n << 6) | (data[i] - 63)
            return n, 4
        if len(data) >= 8 and data[1] == 126:
            n = 0
            for i in range(2, 8):
                if not (63 <= data[i] <= 126):
                    raise ParseError("bad graph6 size byte", offset=i)
                n = (n << 6) | (data[i] - 63)
            return n, 8
        raise ParseError("truncated graph6 size header", offset=0)
    if not (63 <= b0 <= 125):
        raise ParseError(f"bad graph6 size byte {b0}", offset=0)
    return b0 - 63, 1


def parse_graph6(text: str) -> Graph:
    """Decode one graph in standard graph6 encoding (no ``>>graph6<<`` header)."""
    data = text.strip().encode("ascii", errors="strict") if isinstance(text, str) else text
    if data.startswith(b">>graph6<<"):
        data = data[10:]
    n, pos = _g6_read_n(data)
    nbits = n * (n - 1) // 2
    nbytes = (nbits + 5) // 6
    if len(data) - pos != nbytes:
        raise ParseError(
            f"graph6 payload has {len(data) - pos} data bytes, expected {nbytes}",
            offset=pos,
        )
    bits = []
    for i in range(pos, len(data)):
        b = data[i]
        if not (63 <= b <= 126):
            raise ParseError(f"bad graph6 data byte {b}", offset=i)
        val = b - 63
        bits.extend((val >> shift) & 1 for shift in range(5, -1, -1))
    edges = []
    idx = 0
    for v in range(n):
        for u in range(v):
            if bits[idx]:
                edges.append((u, v))
            idx += 1
    return Graph(n, edges)


def to_graph6(g: Graph) -> str:
    """Encode in standard graph6; inverse of :func:`parse_graph6`."""
    n = g.n
    if n > 68719476735:
        raise ContractViolation("graph too large for graph6")
    if n <= 62:
        head = bytes([n + 63])
    elif n <= 258047:
        head = bytes([126, (n >> 12) + 63, ((n >> 6) & 63) + 63, (n & 63) + 63])
    else:
        head = bytes(
            [126, 126] + [((n >> (6 * k)) & 63) + 63 for k in range(5, -1, -1)]
        )
    bits = []
    for v in range(n):
        for u in range(v):
            bits.append(1 if g.has_edge(u, v) else 0)
    while len(bits) % 6:
        bits.append(0)
    body = bytearray()
    for i in range(0, len(bits), 6):
        val = 0
        for b in bits[i : i + 6]:
            val = (val << 1) | b
        body.append(val + 63)
    return (head + bytes(body)).decode("ascii")


def parse_graph(text: str, fmt: str) -> Graph:
    """Parse from ``edge-list`` or ``graph6`` format."""
    if fmt == "edge-list":
        return parse_edge_list(text)
    if fmt == "graph6":
        return parse_graph6(text)
    raise ContractViolation(f"unknown graph format {fmt!r}")


# ---------------------------------------------------------------------------
# structural queries
# ---------------------------------------------------------------------------

def components(g: Graph) -> list[frozenset[int]]:
    """Connected components, sorted by (size desc, min vertex)."""
    seen = [False] * g.n
    comps = []
    for s in range(g.n):
        if seen[s]:
            continue
        seen[s] = True
        comp = [s]
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for u in g.neighbors(v):
                if not seen[u]:
                    seen[u] = True
                    comp.append(u)
                    queue.append(u)
        comps.append(frozenset(comp))
    comps.sort(key=lambda c: (-len(c), min(c)))
    return comps


def _check_component(g: Graph, component: frozenset[int], op: str) -> None:
    if not component:
        raise ContractViolation(f"{op}: empty component")
    comp = set(component)
    start = min(comp)
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for u in g.neighbors(v):
            if u in comp and u not in seen:
                seen.add(u)
                queue.append(u)
    if seen != comp:
        raise ContractViolation(f"{op}: vertex set is not connected in G")


def bipartition(g: Graph, component: Iterable[int]) -> Optional[Bipartition]:
    """Unique 2-coloring of a connected component, or None on an odd cycle."""
    comp = frozenset(component)
    _check_component(g, comp, "bipartition")
    color = {min(comp): 0}
    queue = deque([min(comp)])
    while queue:
        v = queue.popleft()
        for u in g.neighbors(v):
            if u not in comp:
                continue
            if u not in color:
                color[u] = 1 - color[v]
                queue.append(u)
            elif color[u] == color[v]:
                return None
    c0 = frozenset(v for v in comp if color[v] == 0)
    c1 = comp - c0
    if len(c0) > len(c1):
        return Bipartition(c0, c1)
    if len(c1) > len(c0):
        return Bipartition(c1, c0)
    # tie: the class containing the smallest vertex comes first
    return Bipartition(c0, c1) if min(c0) < min(c1) else Bipartition(c1, c0)


def _bfs_depths(g: Graph, source: int, comp: frozenset[int]) -> dict[int, int]:
    depth = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for u in g.neighbors(v):
            if u in comp and u not in depth:
                depth[u] = depth[v] + 1
                queue.append(u)
    return depth


def diameter(g: Graph, component: Iterable[int]) -> int:
    """Exact diameter of a connected component via all-sources BFS.

    When the induced minimum degree is at least 2, the result is additionally
    checked against the floor(3n/(delta+1)) - 1 bound for connected graphs.
    """
    comp = frozenset(component)
    _check_component(g, comp, "diameter")
    best = 0
    for s in comp:
        depth = _bfs_depths(g, s, comp)
        best = max(best, max(depth.values()))
    mindeg = min(sum(1 for u in g.neighbors(v) if u in comp) for v in comp)
    if mindeg >= 2:
        bound = (3 * len(comp)) // (mindeg + 1) - 1
        if best > bound:
            raise AssertionError(
                f"diameter {best} exceeds bound {bound} (n={len(comp)}, delta={mindeg})"
            )
    return best


def ball(g: Graph, v: int, r: int) -> frozenset[int]:
    """All vertices at distance <= r from v.

    For connected G and r = 3q+1 the size is checked against the
    min((q+1)(delta+1), n) lower bound.
    """
    if not (0 <= v < g.n):
        raise ContractViolation(f"vertex {v} out of range")
    if r < 0:
        raise ContractViolation("radius must be nonnegative")
    depth = {v: 0}
    queue = deque([v])
    while queue:
        w = queue.popleft()
        if depth[w] == r:
            continue
        for u in g.neighbors(w):
            if u not in depth:
                depth[u] = depth[w] + 1
                queue.append(u)
    result = frozenset(depth)
    if r >= 1 and (r - 1) % 3 == 0 and g.n > 0:
        if len(components(g)) == 1:
            q = (r - 1) // 3
            delta = min(g.degree(u) for u in range(g.n))
            lower = min((q + 1) * (delta + 1), g.n)
            if len(result) < lower:
                raise AssertionError(
                    f"ball size {len(result)} below bound {lower} (q={q}, delta={delta})"
                )
    return result


def degree_stats(g: Graph) -> DegreeStats:
    """Exact (min, average, max) degrees; average as a Fraction."""
    if g.n == 0:
        raise ContractViolation("degree_stats requires n >= 1")
    degs = [g.degree(v) for v in range(g.n)]
    return DegreeStats(min(degs), Fraction(2 * len(g.edges), g.n), max(degs))


# ---------------------------------------------------------------------------
# canonical forms and isomorph-free enumeration
# ---------------------------------------------------------------------------

def _refine_colors(n: int, masks: Sequence[int], colors: list[int]) -> list[int]:
    while True:
        sigs = []
        for v in range(n):
            nb = masks[v]
            counts = []
            u = nb
            while u:
                low = u & -u
                counts.append(colors[low.bit_length() - 1])
                u ^= low
            counts.sort()
            sigs.append((colors[v], tuple(counts)))
        ranking = {s: i for i, s in enumerate(sorted(set(sigs)))}
        new = [ranking[s] for s in sigs]
        if new == colors:
            return colors
        colors = new


def _twins(masks: Sequence[int], v: int, w: int) -> bool:
    # open twins (N(v)=N(w)) or closed twins (adjacent, N[v]=N[w])
    return masks[v] == masks[w] or (
        (masks[v] >> w) & 1 and masks[v] ^ (1 << w) == masks[w] ^ (1 << v)
    )


def canonical_key(g: Graph) -> tuple[int, int]:
    """Canonical form (n, packed lower-triangle bits), equal iff isomorphic.

    Maximizes the row-major adjacency encoding over vertex orderings.
    Branch-and-bound keeps only max-row candidates per position; twin
    collapsing tames the degenerate automorphism groups of complete and
    empty-like graphs.  Intended for small n (enumeration, test oracles).
    """
    n = g.n
    masks = list(g.adjacency_masks())
    if n <= 1:
        return (n, 0)
    colors = _refine_colors(n, masks, [len(g.neighbors(v)) for v in range(n)])
    best: Optional[list[int]] = None

    def rec(rows: list[int], row_of: dict[int, int]) -> None:
        nonlocal best
        p = len(rows) + 1  # vertices placed so far
        if not row_of:
            if best is None or rows > best:
                best = rows[:]
            return
        max_row = max(row_of.values())
        if best is not None and rows + [max_row] < best[:p]:
            return
        tried: list[int] = []
        for v in sorted(u for u, r in row_of.items() if r == max_row):
            if any(_twins(masks, v, w) for w in tried):
                continue
            tried.append(v)
            child = {
                u: (r << 1) | ((masks[u] >> v) & 1)
                for u, r in row_of.items()
                if u != v
            }
            rec(rows + [max_row], child)

    # the start class is isomorphism-invariant, so restricting to it is safe
    start_color = max(colors)
    tried: list[int] = []
    for v in sorted(u for u in range(n) if colors[u] == start_color):
        if any(_twins(masks, v, w) for w in tried):
            continue
        tried.append(v)
        rec([], {u: (masks[u] >> v) & 1 for u in range(n) if u != v})
    assert best is not None
    packed = 0
    for i, row in enumerate(best):
        packed = (packed << (i + 1)) | row
    return (n, packed)


@functools.lru_cache(maxsize=None)
def _all_graphs(n: int) -> tuple[Graph, ...]:
    if n == 0:
        return (Graph(0, []),)
    if n == 1:
        return (Graph(1, []),)
    out = []
    seen = set()
    for base in _all_graphs(n - 1):
        base_edges = list(base.edges)
        for nb in range(1 << (n - 1)):
            edges = base_edges + [
                (u, n - 1) for u in range(n - 1) if (nb >> u) & 1
            ]
            g = Graph(n, edges)
            key = canonical_key(g)
            if key not in seen:
                seen.add(key)
                out.append(g)
    return tuple(out)


def enumerate_graphs(n: int) -> Iterator[Graph]:
    """One representative per isomorphism class of graphs on n vertices."""
    if not 0 <= n <= 9:
        raise ContractViolation("graph enumeration supported for n <= 9")
    return iter(_all_graphs(n))


def enumerate_connected_graphs(n: int) -> Iterator[Graph]:
    for g in enumerate_graphs(n):
        if g.n == 0 or len(components(g)) == 1:
            yield g
