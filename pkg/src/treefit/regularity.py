"""Regular-pair primitives, reduced graphs, and matching decompositions.

Densities are exact rationals.  The exhaustive regular-pair check walks all
significant subsets of one side; on the other side it only needs the extreme
(top-w / bottom-w by degree) subsets, which decide the existence of a
violating pair exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import ContractViolation, InternalInvariantError
from .graphs import Graph
from .oracle import packing_dp

__all__ = [
    "pair_density",
    "RegularPairVerdict",
    "check_regular_pair",
    "typical_vertices",
    "RegularPartition",
    "ReducedGraph",
    "build_reduced_graph",
    "ClusterDecomposition",
    "matching_decomposition",
    "RefinedClusterMatching",
    "refine_cluster_matching",
]

EXACT_PACKING_LIMIT = 24


def pair_density(g: Graph, a: Iterable[int], b: Iterable[int]) -> Fraction:
    """Exact e(A,B) / (|A||B|)."""
    sa, sb = frozenset(a), frozenset(b)
    if not sa or not sb:
        raise ContractViolation("pair_density requires nonempty sides")
    if sa & sb:
        raise ContractViolation("pair_density requires disjoint sides")
    e = sum(1 for v in sa for u in g.neighbors(v) if u in sb)
    return Fraction(e, len(sa) * len(sb))


@dataclass(frozen=True)
class RegularPairVerdict:
    kind: str  # "regular" | "irregular" | "undecided"
    witness: Optional[tuple[frozenset[int], frozenset[int]]] = None


def _min_significant(eps: Fraction, m: int) -> int:
    # smallest size with |X| > eps*m
    return (eps.numerator * m) // eps.denominator + 1


def check_regular_pair(
    g: Graph,
    a: Sequence[int],
    b: Sequence[int],
    eps: Fraction,
    mode: str = "exhaustive",
    samples: int = 10**4,
    seed: int = 0,
) -> RegularPairVerdict:
    """Decide epsilon-regularity of the pair (A, B).

    Exhaustive mode (|A| = |B| = m <= 14) is a complete check and returns an
    explicit witness on failure.  Sampled mode can only refute: it returns
    Irregular on a violating sample and Undecided otherwise, never Regular.
    """
    a = sorted(set(a))
    b = sorted(set(b))
    eps = Fraction(eps)
    m = len(a)
    if len(b) != m or m == 0:
        raise ContractViolation("sides must be nonempty and of equal size")
    if set(a) & set(b):
        raise ContractViolation("sides must be disjoint")
    d = pair_density(g, a, b)
    smin = _min_significant(eps, m)
    if smin > m:
        return RegularPairVerdict("regular")  # no significant subsets exist

    def violates(e_xy: int, nx: int, ny: int) -> bool:
        # |e/(nx*ny) - d| >= eps, cross-multiplied
        lhs = abs(e_xy * d.denominator - d.numerator * nx * ny) * eps.denominator
        return lhs >= eps.numerator * nx * ny * d.denominator

    if mode == "exhaustive":
        if m > 14:
            raise ContractViolation("exhaustive mode requires m <= 14")
        amask_vertices = list(a)
        bdeg_cache = {v: frozenset(g.neighbors(v)) for v in b}
        for xmask in range(1, 1 << m):
            nx = xmask.bit_count()
            if nx < smin:
                continue
            xset = [amask_vertices[i] for i in range(m) if (xmask >> i) & 1]
            xfro = set(xset)
            degs = sorted(
                ((len(bdeg_cache[v] & xfro), v) for v in b),
                key=lambda p: (-p[0], p[1]),
            )
            # prefix sums of top-w and bottom-w degree orders
            top = [0]
            for val, _ in degs:
                top.append(top[-1] + val)
            bot = [0]
            for val, _ in reversed(degs):
                bot.append(bot[-1] + val)
            for w in range(smin, m + 1):
                if violates(top[w], nx, w):
                    ywit = frozenset(v for _, v in degs[:w])
                    return RegularPairVerdict("irregular", (frozenset(xset), ywit))
                if violates(bot[w], nx, w):
                    ywit = frozenset(v for _, v in degs[m - w :])
                    return RegularPairVerdict("irregular", (frozenset(xset), ywit))
        return RegularPairVerdict("regular")

    if mode == "sampled":
        rng = random.Random(seed)
        for _ in range(samples):
            nx = rng.randint(smin, m)
            ny = rng.randint(smin, m)
            xs = rng.sample(a, nx)
            ys = rng.sample(b, ny)
            e = sum(1 for v in xs for u in g.neighbors(v) if u in set(ys))
            if violates(e, nx, ny):
                return RegularPairVerdict("irregular", (frozenset(xs), frozenset(ys)))
        return RegularPairVerdict("undecided")

    raise ContractViolation(f"unknown mode {mode!r}")


def typical_vertices(
    g: Graph, a: Sequence[int], b: Sequence[int], y: Iterable[int], eps: Fraction
) -> frozenset[int]:
    """All vertices of A with more than (d(A,B) - eps)|Y| neighbors in Y."""
    eps = Fraction(eps)
    yset = frozenset(y)
    bset = frozenset(b)
    if not yset <= bset:
        raise ContractViolation("Y must be a subset of B")
    if len(yset) * eps.denominator <= eps.numerator * len(bset):
        raise ContractViolation("Y is not significant")
    d = pair_density(g, a, bset)
    thresh = (d - eps) * len(yset)
    out = [
        v
        for v in a
        if Fraction(sum(1 for u in g.neighbors(v) if u in yset)) > thresh
    ]
    return frozenset(out)


# ---------------------------------------------------------------------------
# partitions and reduced graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegularPartition:
    """Equal-size disjoint clusters with pairwise exact densities.

    ``size_spread`` relaxes the equal-size invariant to a max-min gap (the
    half-split refinement produces spread 1 on odd cluster sizes).
    """

    clusters: tuple[tuple[int, ...], ...]
    eps: Fraction
    eta: Fraction
    densities: tuple[tuple[Fraction, ...], ...]
    size_spread: int = 0

    def __post_init__(self):
        sizes = [len(c) for c in self.clusters]
        if not sizes:
            raise ContractViolation("partition needs at least one cluster")
        if max(sizes) - min(sizes) > self.size_spread:
            raise ContractViolation(f"cluster sizes {sizes} exceed spread {self.size_spread}")
        seen: set[int] = set()
        for c in self.clusters:
            cs = set(c)
            if cs & seen:
                raise ContractViolation("clusters overlap")
            seen |= cs
        for i, row in enumerate(self.densities):
            for j, dv in enumerate(row):
                if dv != self.densities[j][i] or not 0 <= dv <= 1:
                    raise ContractViolation("density matrix must be symmetric in [0,1]")

    @property
    def cluster_size(self) -> int:
        return len(self.clusters[0])

    def to_json_dict(self) -> dict:
        return {
            "clusters": [list(c) for c in self.clusters],
            "eps": str(self.eps),
            "eta": str(self.eta),
            "densities": [
                [f"{d.numerator}/{d.denominator}" for d in row]
                for row in self.densities
            ],
            "size_spread": self.size_spread,
        }

    @staticmethod
    def from_json_dict(data: dict) -> "RegularPartition":
        return RegularPartition(
            clusters=tuple(tuple(c) for c in data["clusters"]),
            eps=Fraction(data["eps"]),
            eta=Fraction(data["eta"]),
            densities=tuple(
                tuple(Fraction(x) for x in row) for row in data["densities"]
            ),
            size_spread=data.get("size_spread", 0),
        )


def make_partition(
    g: Graph, clusters: Sequence[Sequence[int]], eps: Fraction, eta: Fraction,
    size_spread: int = 0,
) -> RegularPartition:
    clusters_t = tuple(tuple(sorted(c)) for c in clusters)
    dens = tuple(
        tuple(
            pair_density(g, ci, cj) if i != j and ci and cj else Fraction(0)
            for j, cj in enumerate(clusters_t)
        )
        for i, ci in enumerate(clusters_t)
    )
    return RegularPartition(clusters_t, Fraction(eps), Fraction(eta), dens, size_spread)


@dataclass(frozen=True)
class ReducedGraph:
    """Graph on cluster indices: ij is an edge iff d(V_i, V_j) > eta."""

    graph: Graph
    partition: RegularPartition
    min_degree_transfer: Optional[bool] = None  # delta(R) >= (alpha - 2 eta)|R|

    @property
    def n_clusters(self) -> int:
        return len(self.partition.clusters)

    def cluster(self, i: int) -> tuple[int, ...]:
        return self.partition.clusters[i]


def build_reduced_graph(
    g: Graph,
    clusters: Sequence[Sequence[int]],
    eps: Fraction,
    eta: Fraction,
    alpha: Optional[Fraction] = None,
) -> ReducedGraph:
    """Reduced graph over the given equal-size clusters; with ``alpha`` the
    minimum-degree transfer check delta(R) >= (alpha - 2 eta)|R| is reported."""
    sizes = {len(c) for c in clusters}
    if len(sizes) != 1:
        raise ContractViolation(f"clusters must have equal sizes, got {sorted(sizes)}")
    part = make_partition(g, clusters, eps, eta)
    ell = len(part.clusters)
    edges = [
        (i, j)
        for i in range(ell)
        for j in range(i + 1, ell)
        if part.densities[i][j] > part.eta
    ]
    rgraph = Graph(ell, edges)
    transfer = None
    if alpha is not None:
        alpha = Fraction(alpha)
        mindeg = min(rgraph.degree(i) for i in range(ell)) if ell else 0
        transfer = Fraction(mindeg) >= (alpha - 2 * Fraction(eta)) * ell
    return ReducedGraph(rgraph, part, transfer)


# ---------------------------------------------------------------------------
# matching + triangle decompositions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClusterDecomposition:
    independent: tuple[int, ...]
    matching: tuple[tuple[int, int], ...]
    triangles: tuple[tuple[int, int, int], ...]
    v1: tuple[int, ...]
    v2: tuple[int, ...]
    exact: bool

    def covered(self) -> int:
        return 2 * len(self.matching) + 3 * len(self.triangles)

    def validate(self, h: Graph) -> None:
        used: set[int] = set()
        for u, v in self.matching:
            if not h.has_edge(u, v):
                raise InternalInvariantError(f"matching pair {u},{v} is not an edge")
            used |= {u, v}
        for x, y, z in self.triangles:
            for p, q in ((x, y), (y, z), (x, z)):
                if not h.has_edge(p, q):
                    raise InternalInvariantError(f"triangle {x},{y},{z} is not a triangle")
            used |= {x, y, z}
        if len(used) != self.covered():
            raise InternalInvariantError("matching/triangles overlap")
        if used | set(self.independent) != set(range(h.n)) or used & set(self.independent):
            raise InternalInvariantError("cover is not a partition of V(H)")
        for i, x in enumerate(self.independent):
            for y in self.independent[i + 1 :]:
                if h.has_edge(x, y):
                    raise InternalInvariantError(f"independent set has edge {x},{y}")
        v1s, v2s = set(self.v1), set(self.v2)
        vm = {v for e in self.matching for v in e}
        if v1s | v2s != vm or v1s & v2s:
            raise InternalInvariantError("V1/V2 must partition V(M)")
        for u, v in self.matching:
            if not ((u in v1s) ^ (v in v1s)):
                raise InternalInvariantError(f"matching edge {u},{v} does not span V1/V2")
        for x in self.independent:
            for u in h.neighbors(x):
                if u not in v1s:
                    raise InternalInvariantError(
                        f"independent vertex {x} sees {u} outside V1"
                    )


def _packing_reconstruct(n: int, masks: Sequence[int], dp) -> tuple[list, list]:
    matching, triangles = [], []
    mask = (1 << n) - 1
    while mask:
        low = mask & -mask
        v = low.bit_length() - 1
        rest = mask ^ low
        if dp[mask] == dp[rest]:
            mask = rest
            continue
        nb = masks[v] & rest
        done = False
        m = nb
        while m and not done:
            lu = m & -m
            m ^= lu
            if dp[mask] == 2 + dp[rest ^ lu]:
                matching.append((v, lu.bit_length() - 1))
                mask = rest ^ lu
                done = True
        if done:
            continue
        m = nb
        while m and not done:
            lu = m & -m
            m ^= lu
            u = lu.bit_length() - 1
            mm = nb & masks[u] & ~((lu << 1) - 1)
            while mm and not done:
                lw = mm & -mm
                mm ^= lw
                if dp[mask] == 3 + dp[rest ^ lu ^ lw]:
                    triangles.append((v, u, lw.bit_length() - 1))
                    mask = rest ^ lu ^ lw
                    done = True
        if not done:
            raise InternalInvariantError("packing reconstruction failed")
    return matching, triangles


def _greedy_packing(h: Graph) -> tuple[list, list]:
    matched: set[int] = set()
    matching = []
    triangles = []
    for u, v in sorted(h.edges):
        if u not in matched and v not in matched:
            matching.append((u, v))
            matched |= {u, v}
    # greedy triangles among leftover vertices
    left = [v for v in range(h.n) if v not in matched]
    lset = set(left)
    for x in left:
        if x not in lset:
            continue
        found = None
        for u in sorted(g for g in h.neighbors(x) if g in lset and g > x):
            for w in sorted(g for g in h.neighbors(u) if g in lset and g > u):
                if h.has_edge(x, w):
                    found = (x, u, w)
                    break
            if found:
                break
        if found:
            triangles.append(found)
            lset -= set(found)

    def improve() -> bool:
        iset = set(range(h.n)) - {v for e in matching for v in e} - {
            v for t in triangles for v in t
        }
        # (a) an edge inside I joins the matching
        for x in sorted(iset):
            for y in sorted(h.neighbors(x)):
                if y in iset and y > x:
                    matching.append((x, y))
                    return True
        # (b) I-vertex adjacent to a triangle: rotate into two edges
        for x in sorted(iset):
            for ti, (p, q, r) in enumerate(triangles):
                for hit, others in ((p, (q, r)), (q, (p, r)), (r, (p, q))):
                    if h.has_edge(x, hit):
                        del triangles[ti]
                        matching.append((min(x, hit), max(x, hit)))
                        matching.append(others)
                        return True
        # (c) one I-vertex seeing both endpoints: edge becomes a triangle
        for x in sorted(iset):
            for mi, (u, v) in enumerate(matching):
                if h.has_edge(x, u) and h.has_edge(x, v):
                    del matching[mi]
                    triangles.append((x, u, v))
                    return True
        # (d) two I-vertices seeing opposite endpoints: one edge becomes two
        for mi, (u, v) in enumerate(matching):
            xu = sorted(x for x in iset if h.has_edge(x, u))
            xv = sorted(x for x in iset if h.has_edge(x, v))
            for x in xu:
                for y in xv:
                    if x != y:
                        del matching[mi]
                        matching.append((min(x, u), max(x, u)))
                        matching.append((min(y, v), max(y, v)))
                        return True
        return False

    while improve():
        pass
    return matching, triangles


def matching_decomposition(h: Graph, exact_limit: int = EXACT_PACKING_LIMIT) -> ClusterDecomposition:
    """Partition V(H) into an independent set, a matching and disjoint
    triangles, maximizing |V(M)| + |V(Gamma)| exactly for |H| <= 24
    (mask DP); larger graphs use greedy packing with local improvement, which
    preserves all structural invariants and relaxes only maximality."""
    n = h.n
    if n <= exact_limit:
        masks = list(h.adjacency_masks())
        dp = packing_dp(n, masks)
        matching, triangles = _packing_reconstruct(n, masks, dp)
        exact = True
    else:
        matching, triangles = _greedy_packing(h)
        exact = False
    covered = {v for e in matching for v in e} | {v for t in triangles for v in t}
    independent = tuple(v for v in range(n) if v not in covered)
    iset = set(independent)
    v1, v2 = [], []
    for u, v in matching:
        u_seen = any(x in iset for x in h.neighbors(u))
        v_seen = any(x in iset for x in h.neighbors(v))
        if u_seen and v_seen:
            raise InternalInvariantError(
                f"both endpoints of matching edge {u},{v} are I-visible"
            )
        if v_seen:
            u, v = v, u
        v1.append(u)
        v2.append(v)
    dec = ClusterDecomposition(
        independent,
        tuple(tuple(sorted(e)) for e in matching),
        tuple(tuple(sorted(t)) for t in triangles),
        tuple(sorted(v1)),
        tuple(sorted(v2)),
        exact,
    )
    dec.validate(h)
    return dec


@dataclass(frozen=True)
class RefinedClusterMatching:
    partition: RegularPartition
    matching: tuple[tuple[int, int], ...]  # cluster-index pairs
    independent_family: tuple[int, ...]  # cluster indices
    v1: tuple[int, ...]
    v2: tuple[int, ...]

    def matched_vertices(self) -> int:
        cl = self.partition.clusters
        return sum(len(cl[i]) + len(cl[j]) for i, j in self.matching)


def refine_cluster_matching(
    g: Graph, partition: RegularPartition, t: int
) -> RefinedClusterMatching:
    """Half-split every cluster and assemble a cluster matching M plus an
    independent cluster family C with V(M) and V(C) covering V(G),
    |union M| >= 2t, and all C-neighborhoods inside V1."""
    mindeg = min(g.degree(v) for v in range(g.n)) if g.n else 0
    if mindeg < t:
        raise ContractViolation(f"refine_cluster_matching needs delta(G) >= t; {mindeg} < {t}")
    if g.n < 2 * t:
        raise ContractViolation(f"refine_cluster_matching needs n >= 2t; {g.n} < {2 * t}")
    ell = len(partition.clusters)
    redge = [
        (i, j)
        for i in range(ell)
        for j in range(i + 1, ell)
        if partition.densities[i][j] > partition.eta
    ]
    r = Graph(ell, redge)
    dec = matching_decomposition(r)

    halves: list[tuple[int, ...]] = []
    for c in partition.clusters:
        cut = (len(c) + 1) // 2
        halves.append(tuple(c[:cut]))
        halves.append(tuple(c[cut:]))
    new_eps = 5 * partition.eps
    new_eta = partition.eta - partition.eps
    if new_eta < 0:
        raise ContractViolation("eta - eps must stay nonnegative after refinement")
    spread = 1 if len({len(h) for h in halves}) > 1 else 0
    new_part = make_partition(g, halves, new_eps, new_eta, size_spread=spread)

    def h1(i: int) -> int:
        return 2 * i

    def h2(i: int) -> int:
        return 2 * i + 1

    v1set = set(dec.v1)
    matching: list[tuple[int, int]] = []
    v1: list[int] = []
    v2: list[int] = []
    for u, v in dec.matching:
        if u not in v1set:
            u, v = v, u
        matching += [(h1(u), h1(v)), (h2(u), h2(v))]
        v1 += [h1(u), h2(u)]
        v2 += [h1(v), h2(v)]
    for x, y, z in dec.triangles:
        matching += [(h1(x), h2(y)), (h1(y), h2(z)), (h1(z), h2(x))]
        v1 += [h1(x), h1(y), h1(z)]
        v2 += [h2(x), h2(y), h2(z)]
    family = [h for i in dec.independent for h in (h1(i), h2(i))]

    refined = RefinedClusterMatching(
        new_part, tuple(matching), tuple(sorted(family)), tuple(sorted(v1)), tuple(sorted(v2))
    )
    if refined.matched_vertices() < 2 * t:
        raise InternalInvariantError(
            f"matched vertex count {refined.matched_vertices()} below 2t = {2 * t}"
        )
    # C-family neighborhoods must stay inside V1 in the refined reduced graph
    v2set = set(refined.v2)
    for c in refined.independent_family:
        for d in v2set:
            dval = pair_density(g, new_part.clusters[c], new_part.clusters[d]) if new_part.clusters[c] and new_part.clusters[d] else Fraction(0)
            if dval > new_eta:
                raise InternalInvariantError(
                    f"independent-family cluster {c} sees V2 cluster {d} (density {dval})"
                )
    return refined
