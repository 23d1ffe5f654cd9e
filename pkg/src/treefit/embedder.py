"""Embedding procedures over regularized hosts.

Levelwise regular-pair embedding, the bipartite/nonbipartite component
schemes with seed/link/cluster slices, the two-phase connected-component
embedder, the scenario classifier, and the degree-condition pipelines.

Desk-scale semantics: the named degree/size hypotheses are checked literally
against the instance numbers and violations raise ``HypothesisError``; with
``force`` set they downgrade to notes on the returned embedding.  Cluster
size thresholds are normalized to covered-vertex counts (the |R|/n scaling
is realized as 1/m, i.e. "large" means the clusters of a component hold at
least (1+theta)*k vertices).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

from .errors import ContractViolation, EmbeddingFailure, HypothesisError, InternalInvariantError
from .graphs import Graph, bipartition, components, degree_stats
from .oracle import verify_embedding
from .regularity import ReducedGraph, build_reduced_graph, make_partition, pair_density
from .trees import (
    RootedTree,
    balanced_cut_coloring,
    decompose_pieces,
    half_separator,
    partition_three,
    partition_two,
    tree_bipartition_sizes,
    tree_components_minus,
)

__all__ = [
    "EmbedderConfig",
    "Embedding",
    "Scenario",
    "TreeJob",
    "embed_into_pair",
    "embed_bipartite_component",
    "embed_nonbipartite_component",
    "embed_connected",
    "classify_scenario",
    "embed_key",
    "embed_with_degree_conditions",
    "equipartition",
    "frac_sqrt_upper",
]


def frac_sqrt_upper(x: Fraction, scale: int = 10**12) -> Fraction:
    """Rational upper bound on sqrt(x); exact when x is a rational square."""
    x = Fraction(x)
    if x < 0:
        raise ContractViolation("sqrt of a negative value")
    rn, rd = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if rn * rn == x.numerator and rd * rd == x.denominator:
        return Fraction(rn, rd)
    t = x.numerator * scale * scale
    s = math.isqrt(t // x.denominator)
    while s * s * x.denominator < t:
        s += 1
    return Fraction(s, scale)


@dataclass(frozen=True)
class EmbedderConfig:
    """Numeric knobs shared by all embedding entry points.

    ``alpha`` drives the derived constants: c = 18*ceil(2/alpha) - 5,
    d1 = 3*ceil(2/alpha) - 2, d2 = 2*(d1+1).  ``eta`` defaults to
    5*sqrt(eps).  ``piece_cap`` overrides the piece-order bound
    eps*t/|component| where the literal bound collapses below one vertex at
    desk scale.
    """

    eps: Fraction = Fraction(1, 2500)
    alpha: Fraction = Fraction(1, 2)
    delta: Fraction = Fraction(1, 10)
    diameter_cap: Optional[int] = None
    force: bool = False
    seed: int = 0
    n_clusters: Optional[int] = None
    piece_cap: Optional[int] = None

    def __post_init__(self):
        if not 0 < Fraction(self.eps) < 1:
            raise ContractViolation("eps must lie in (0,1)")
        if not Fraction(1, 2) <= Fraction(self.alpha) < 1:
            raise ContractViolation("alpha must lie in [1/2, 1)")

    @property
    def sqrt_eps(self) -> Fraction:
        return frac_sqrt_upper(Fraction(self.eps))

    @property
    def quarter_eps(self) -> Fraction:
        return frac_sqrt_upper(self.sqrt_eps)

    @property
    def eta(self) -> Fraction:
        return 5 * self.sqrt_eps

    @property
    def ceil_two_over_alpha(self) -> int:
        a = Fraction(self.alpha)
        return -((-2 * a.denominator) // a.numerator)

    @property
    def c(self) -> int:
        return 18 * self.ceil_two_over_alpha - 5

    @property
    def d1(self) -> int:
        return 3 * self.ceil_two_over_alpha - 2

    @property
    def d2(self) -> int:
        return 2 * (self.d1 + 1)

    @property
    def d(self) -> int:
        return self.diameter_cap if self.diameter_cap is not None else self.d2


@dataclass(frozen=True)
class Embedding:
    """Injective pattern -> host map with adjacency preserved.

    Forest embeddings carry one mapping per tree job in ``forest_mappings``
    (job labels are tree-local); ``mapping`` then holds the first job's map.
    """

    mapping: dict[int, int]
    pattern: RootedTree
    host: Graph
    notes: tuple[str, ...] = ()
    forest_mappings: Optional[tuple[dict[int, int], ...]] = None

    def to_json_list(self) -> list[list[int]]:
        return [[v, self.mapping[v]] for v in sorted(self.mapping)]


@dataclass(frozen=True)
class Scenario:
    tag: str  # I, II, III, IVa..IVe, or none
    payload: dict


@dataclass(frozen=True)
class TreeJob:
    """One tree of a forest to embed: the tree (labels are host-independent),
    its proper 2-coloring (class 0 goes to the X side in bipartite mode), and
    an optional prescribed set of host vertices for the root image."""

    tree: RootedTree
    class_of: dict[int, int]
    root_targets: Optional[frozenset[int]] = None


def _check(cond: bool, name: str, lhs, rhs, notes: list[str], force: bool, rel=">=") -> None:
    if cond:
        return
    if force:
        notes.append(f"hypothesis waived ({name}): {lhs} {rel} {rhs} is false")
        return
    raise HypothesisError(name, lhs, rhs, rel)


# ---------------------------------------------------------------------------
# levelwise pair embedding
# ---------------------------------------------------------------------------

def embed_into_pair(
    g: Graph,
    a: Sequence[int],
    b: Sequence[int],
    x: Iterable[int],
    y: Iterable[int],
    z: Iterable[int],
    tree: RootedTree,
    eps: Fraction,
    root_side: str = "x",
    assert_capacity: bool = True,
) -> Embedding:
    """Greedy levelwise embedding of a tree into the targets (X u Y) \\ Z of a
    dense pair (A, B): the root goes to a typical vertex, each level to
    unoccupied typical vertices of the opposite side.

    Each vertex placement records its candidate count; with
    ``assert_capacity`` a step with fewer than 2*eps*m candidates raises a
    structured failure naming the starved level (pairs at desk scale are
    only empirically regular, so exhaustion is a legitimate outcome).
    """
    eps = Fraction(eps)
    aset, bset = frozenset(a), frozenset(b)
    if aset & bset:
        raise ContractViolation("pair sides overlap")
    m = len(aset)
    if len(bset) != m or m == 0:
        raise ContractViolation("pair sides must be nonempty, equal size")
    zset = frozenset(z)
    xfree = set(x) - zset
    yfree = set(y) - zset
    if not (xfree <= aset and yfree <= bset):
        raise ContractViolation("X must sit inside A and Y inside B")
    sqrt_eps = frac_sqrt_upper(eps)
    if min(len(xfree), len(yfree)) <= sqrt_eps * m:
        raise ContractViolation("target sets too small: need > sqrt(eps)*m on both sides")
    d = pair_density(g, aset, bset)
    need = 2 * eps * m
    notes: list[str] = []

    def typical(w: int, pool: set[int]) -> bool:
        if not pool:
            return False
        degw = sum(1 for u in g.neighbors(w) if u in pool)
        return Fraction(degw) > (d - eps) * len(pool)

    levels = tree.levels()
    phi: dict[int, int] = {}
    side_of_level = []
    for i in range(len(levels)):
        if root_side == "x":
            side_of_level.append(0 if i % 2 == 0 else 1)
        else:
            side_of_level.append(1 if i % 2 == 0 else 0)
    min_candidates = None
    for li, level in enumerate(levels):
        own = xfree if side_of_level[li] == 0 else yfree
        opp = yfree if side_of_level[li] == 0 else xfree
        for v in sorted(level):
            if li == 0:
                cands = [w for w in sorted(own) if typical(w, opp)]
            else:
                pw = phi[tree.parent[v]]
                cands = [w for w in sorted(g.neighbors(pw)) if w in own and typical(w, opp)]
            count = len(cands)
            min_candidates = count if min_candidates is None else min(min_candidates, count)
            if not cands or (assert_capacity and Fraction(count) < need):
                raise EmbeddingFailure(
                    "candidate starvation in pair embedding",
                    level=li,
                    vertex=v,
                    candidates=count,
                    required=float(need) if assert_capacity else 1,
                    free_x=len(xfree),
                    free_y=len(yfree),
                )
            w = cands[0]
            phi[v] = w
            own.discard(w)
    notes.append(f"min candidates per step: {min_candidates}")
    emb = Embedding(phi, tree, g, tuple(notes))
    if not verify_embedding(tree, g, phi):
        raise InternalInvariantError("pair embedding failed verification")
    return emb


# ---------------------------------------------------------------------------
# cluster host state
# ---------------------------------------------------------------------------

class _ClusterHost:
    """Occupancy bookkeeping over a sliced regular partition."""

    def __init__(self, g: Graph, reduced: ReducedGraph, config: EmbedderConfig,
                 avoid: Iterable[int] = ()):
        self.g = g
        self.reduced = reduced
        self.config = config
        part = reduced.partition
        self.clusters = part.clusters
        self.densities = part.densities
        self.m = max(len(c) for c in self.clusters)
        s = config.sqrt_eps
        self.slice_size = -((-10 * s.numerator * self.m) // s.denominator)  # ceil
        if 2 * self.slice_size >= self.m:
            raise ContractViolation(
                f"slice size {self.slice_size} too large for cluster size {self.m}"
            )
        self.avoid = frozenset(avoid)
        self.S: list[set[int]] = []
        self.L: list[set[int]] = []
        self.C: list[set[int]] = []
        self.c_size: list[int] = []
        for cl in self.clusters:
            ssz = self.slice_size
            self.S.append(set(cl[:ssz]) - self.avoid)
            self.L.append(set(cl[ssz : 2 * ssz]) - self.avoid)
            cpart = set(cl[2 * ssz :]) - self.avoid
            self.C.append(cpart)
            self.c_size.append(len(cl) - 2 * ssz)
        self.cluster_of: dict[int, int] = {}
        for i, cl in enumerate(self.clusters):
            for v in cl:
                self.cluster_of[v] = i
        self.phi: dict[int, int] = {}
        self.used_c = [0] * len(self.clusters)  # phi preimages inside C-slices
        self.good_thresh = 5 * config.sqrt_eps * self.m
        self.events: list[dict] = []
        self.min_candidates: Optional[int] = None
        self.slice_flags = {"seed_outside_S": 0, "prefix_outside_L": 0}

    # -- measurements -------------------------------------------------------

    def cluster_free(self, i: int) -> int:
        return len(self.S[i]) + len(self.L[i]) + len(self.C[i])

    def is_good_pair(self, i: int, j: int) -> bool:
        if self.densities[i][j] <= self.config.eta:
            return False
        return (
            Fraction(len(self.C[i])) >= self.good_thresh
            and Fraction(len(self.C[j])) >= self.good_thresh
        )

    def fill_percent(self, i: int) -> float:
        total = len(self.clusters[i])
        return 100.0 * (total - self.cluster_free(i)) / total if total else 100.0

    def typical(self, w: int, target_cluster: int, pool: set[int]) -> bool:
        """deg(w, pool) > (d(cluster(w), target) - eps) * |pool|."""
        if not pool:
            return False
        cw = self.cluster_of.get(w)
        if cw is None:
            return True  # unclustered vertices carry no density estimate
        d = self.densities[cw][target_cluster]
        degw = sum(1 for u in self.g.neighbors(w) if u in pool)
        return Fraction(degw) > (d - self.config.eps) * len(pool)

    def condition_d(self, w: int, comp: Sequence[int]) -> bool:
        """Typical toward both the S- and L-slice of some adjacent cluster."""
        cw = self.cluster_of.get(w)
        for u in comp:
            if cw is not None and self.densities[cw][u] <= self.config.eta:
                continue
            if cw is None and not any(
                self.g.has_edge(w, t) for t in self.clusters[u]
            ):
                continue
            if self.typical(w, u, self.S[u]) and self.typical(w, u, self.L[u]):
                return True
        return False

    # -- mutation ------------------------------------------------------------

    def place(self, pv: int, w: int, cluster: int, sl: str) -> None:
        pool = {"S": self.S, "L": self.L, "C": self.C}[sl][cluster]
        pool.discard(w)
        self.phi[pv] = w
        if sl == "C":
            self.used_c[cluster] += 1

    def diag(self, reason: str, **extra) -> EmbeddingFailure:
        fills = {i: round(self.fill_percent(i), 1) for i in range(len(self.clusters))}
        return EmbeddingFailure(reason, fill_percent=fills, **extra)


def _subtree_levels(tree: RootedTree, root: int, vertices: Sequence[int]) -> list[list[int]]:
    vset = set(vertices)
    depth = {root: 0}
    order = [root]
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for c in tree.children[v]:
            if c in vset:
                depth[c] = depth[v] + 1
                order.append(c)
                queue.append(c)
    out: list[list[int]] = [[] for _ in range(max(depth.values()) + 1)]
    for v in order:
        out[depth[v]].append(v)
    return out


# ---------------------------------------------------------------------------
# the seed/link/cluster engine
# ---------------------------------------------------------------------------

class _ComponentEngine:
    """Embeds a forest into one reduced-graph component using the S/L/C
    scheme.  ``mode`` is "bip" (paths, side-consistent) or "nonbip" (walks of
    a fixed length, matching-pair balance)."""

    def __init__(
        self,
        ch: _ClusterHost,
        comp: Sequence[int],
        mode: str,
        side_of: Optional[dict[int, int]] = None,
        mpairs: Optional[Sequence[tuple[int, int]]] = None,
        walk_len: Optional[int] = None,
        path_cap: Optional[int] = None,
    ):
        self.ch = ch
        self.comp = sorted(comp)
        self.comp_set = set(comp)
        self.mode = mode
        self.side_of = side_of or {}
        self.mpairs = [tuple(sorted(p)) for p in (mpairs or [])]
        self.walk_len = walk_len
        self.path_cap = path_cap
        self.radj: dict[int, list[int]] = {
            i: sorted(
                j
                for j in self.comp
                if j != i and ch.densities[i][j] > ch.config.eta
            )
            for i in self.comp
        }
        self.external_child: dict[int, bool] = {}

    # -- reduced-graph walks --------------------------------------------------

    def _dist_from(self, src: int) -> dict[int, int]:
        dist = {src: 0}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in self.radj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def _parity_dist_to(self, target: int) -> dict[tuple[int, int], int]:
        dist = {(target, 0): 0}
        queue = deque([(target, 0)])
        while queue:
            u, p = queue.popleft()
            for v in self.radj[u]:
                key = (v, 1 - p)
                if key not in dist:
                    dist[key] = dist[(u, p)] + 1
                    queue.append(key)
        return dist

    def _shortest_path(self, src: int, target: int) -> Optional[list[int]]:
        prev = {src: src}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            if u == target:
                break
            for v in self.radj[u]:
                if v not in prev:
                    prev[v] = u
                    queue.append(v)
        if target not in prev:
            return None
        path = [target]
        while path[-1] != src:
            path.append(prev[path[-1]])
        return path[::-1]

    def _exact_walk(self, src: int, target: int, length: int) -> Optional[list[int]]:
        """Walk with exactly ``length`` edges from src to target."""
        dist = self._parity_dist_to(target)
        if dist.get((src, length % 2), length + 1) > length:
            return None
        walk = [src]
        cur, rem = src, length
        while rem > 0:
            nxt = None
            for v in self.radj[cur]:
                if dist.get((v, (rem - 1) % 2), rem) <= rem - 1:
                    nxt = v
                    break
            if nxt is None:
                return None
            walk.append(nxt)
            cur, rem = nxt, rem - 1
        return walk

    # -- piece routing ---------------------------------------------------------

    def _pick_good_pair(self) -> Optional[tuple[int, int]]:
        best = None
        if self.mode == "nonbip":
            candidates = self.mpairs
        else:
            candidates = [
                (i, j)
                for i in self.comp
                for j in self.radj[i]
                if i < j
            ]
        for i, j in candidates:
            if not (i in self.comp_set and j in self.comp_set):
                continue
            if not self.ch.is_good_pair(i, j):
                continue
            score = min(len(self.ch.C[i]), len(self.ch.C[j]))
            key = (-score, i, j)
            if best is None or key < best[0]:
                best = (key, (i, j))
        return best[1] if best else None

    def _level_room(self, route: list[int], levels: list[list[int]]) -> bool:
        demand: dict[int, int] = {}
        for li, cl in enumerate(route):
            if li >= len(levels):
                break
            demand[cl] = demand.get(cl, 0) + len(levels[li])
        return all(len(self.ch.L[cl]) >= need for cl, need in demand.items())

    def _place_level_vertex(self, v: int, parent_image: int, cluster: int, sl: str,
                            next_cluster: Optional[int], tree: RootedTree) -> None:
        ch = self.ch
        pool = {"S": ch.S, "L": ch.L, "C": ch.C}[sl][cluster]
        cands = [w for w in sorted(g for g in ch.g.neighbors(parent_image) if g in pool)]
        if next_cluster is not None:
            nxt_pool = ch.L[next_cluster] if sl == "L" else ch.C[next_cluster]
            cands = [w for w in cands if ch.typical(w, next_cluster, nxt_pool)]
        if self.external_child.get(v):
            cands = [w for w in cands if ch.condition_d(w, self.comp)]
        count = len(cands)
        ch.min_candidates = count if ch.min_candidates is None else min(ch.min_candidates, count)
        if not cands:
            raise ch.diag(
                "candidate starvation while routing a piece",
                cluster=cluster,
                slice=sl,
                pattern_vertex=v,
            )
        ch.place(v, cands[0], cluster, sl)

    def embed_piece(self, tree: RootedTree, piece_root: int,
                    piece_vertices: Sequence[int], parent_image: int,
                    root_class: Optional[int] = None) -> None:
        ch = self.ch
        levels = _subtree_levels(tree, piece_root, piece_vertices)
        z0 = ch.cluster_of.get(parent_image)
        # candidate clusters to start the route: adjacent to the parent's
        # cluster (or, for unclustered parents like the key vertex x, any
        # component cluster adjacent in G) with a typical parent image
        if z0 is not None:
            starts = [u for u in self.radj.get(z0, []) if ch.typical(parent_image, u, ch.L[u])]
        else:
            starts = [
                u
                for u in self.comp
                if any(w in ch.L[u] for w in ch.g.neighbors(parent_image))
            ]
        if self.mode == "bip" and root_class is not None:
            starts = [u for u in starts if self.side_of.get(u) == root_class]
        if not starts:
            raise ch.diag(
                "no typical start cluster for piece",
                pattern_vertex=piece_root,
                anchor_cluster=z0,
            )

        pair = self._pick_good_pair()
        if pair is None:
            raise ch.diag(
                "no good pair available", scenario="component", anchor_cluster=z0
            )
        i, j = pair

        route = None
        cpair = None
        for z1 in starts:
            if self.mode in ("bip", "free"):
                paths = []
                for tgt in (i, j):
                    p = self._shortest_path(z1, tgt)
                    if p is not None and (self.path_cap is None or len(p) - 1 <= self.path_cap):
                        paths.append(p)
                if not paths:
                    continue
                paths.sort(key=lambda p: (len(p), p[-1]))
                cand_route = paths[0]
                tgt = cand_route[-1]
                other = j if tgt == i else i
            else:
                # balance rule: heavier residual class of the piece goes to
                # the emptier C-slice of the matching pair
                wl = self.walk_len
                post = levels[wl:] if wl is not None else []
                even = sum(len(l) for li, l in enumerate(post) if li % 2 == 0)
                odd = sum(len(l) for li, l in enumerate(post) if li % 2 == 1)
                emptier, fuller = (i, j) if ch.used_c[i] <= ch.used_c[j] else (j, i)
                tgt = emptier if even >= odd else fuller
                other = j if tgt == i else i
                cand_route = self._exact_walk(z1, tgt, wl)
                if cand_route is None:
                    tgt, other = other, tgt
                    cand_route = self._exact_walk(z1, tgt, wl)
                    if cand_route is None:
                        continue
                cand_route = cand_route[:-1]  # last walk cluster starts the C-phase
                cand_route.append(tgt)
            if self._level_room(cand_route[:-1], levels):
                route = cand_route
                cpair = (tgt, other)
                break
        if route is None:
            raise ch.diag(
                "no routable good pair",
                pair=pair,
                pattern_vertex=piece_root,
                anchor_cluster=z0,
            )

        prefix = route[:-1]
        tgt, other = cpair
        for li, level in enumerate(levels):
            if li < len(prefix):
                cluster, sl = prefix[li], "L"
                nxt = prefix[li + 1] if li + 1 < len(prefix) else (tgt if li + 1 < len(levels) else None)
            else:
                k = li - len(prefix)
                cluster, sl = (tgt if k % 2 == 0 else other), "C"
                nxt = (other if k % 2 == 0 else tgt) if li + 1 < len(levels) else None
            for v in sorted(level):
                pim = parent_image if v == piece_root else ch.phi[tree.parent[v]]
                self._place_level_vertex(v, pim, cluster, sl, nxt, tree)
        if self.mode == "nonbip":
            eps_m = ch.config.eps * ch.m
            for a, b in self.mpairs:
                if abs(ch.used_c[a] - ch.used_c[b]) > eps_m:
                    raise ch.diag(
                        "matching balance violated",
                        pair=(a, b),
                        used=(ch.used_c[a], ch.used_c[b]),
                    )
            ch.events.append(
                {"balance": [[a, b, ch.used_c[a], ch.used_c[b]] for a, b in self.mpairs]}
            )

    # -- seeds -----------------------------------------------------------------

    def place_seed(self, tree: RootedTree, s: int, parent_image: Optional[int],
                   side: Optional[int], targets: Optional[frozenset[int]]) -> None:
        ch = self.ch
        allowed = [
            u for u in self.comp if side is None or self.side_of.get(u) == side
        ]
        if parent_image is None and targets is not None:
            pool_all: list[int] = []
            for u in allowed:
                members = [w for w in targets if w in ch.S[u]]
                spill = [w for w in targets if w in ch.L[u] or w in ch.C[u]]
                pool_all.extend((w, u, w in ch.S[u]) for w in members + spill)
            scored = sorted(pool_all, key=lambda t: (not t[2], t[0]))
            for w, u, in_s in scored:
                if ch.condition_d(w, self.comp):
                    if not in_s:
                        ch.slice_flags["seed_outside_S"] += 1
                    ch.place(s, w, u, "S" if in_s else ("L" if w in ch.L[u] else "C"))
                    return
            raise ch.diag("no prescribed root image available", pattern_vertex=s)
        if parent_image is None:
            order = sorted(allowed, key=lambda u: (-len(ch.S[u]), u))
            for u in order:
                for w in sorted(ch.S[u]):
                    if ch.condition_d(w, self.comp):
                        ch.place(s, w, u, "S")
                        return
            raise ch.diag("no seed slot for root", pattern_vertex=s)
        z0 = ch.cluster_of.get(parent_image)
        neigh = self.radj.get(z0, self.comp) if z0 is not None else self.comp
        order = sorted(neigh, key=lambda u: (-len(ch.S[u]), u))
        for u in order:
            if side is not None and self.side_of.get(u) != side:
                continue
            cands = [
                w
                for w in sorted(ch.g.neighbors(parent_image))
                if w in ch.S[u] and ch.condition_d(w, self.comp)
            ]
            if cands:
                ch.place(s, cands[0], u, "S")
                return
        raise ch.diag("no seed slot adjacent to parent", pattern_vertex=s)

    # -- whole trees -------------------------------------------------------------

    def embed_tree(self, job: TreeJob) -> dict[int, int]:
        ch = self.ch
        ch.phi = {}  # per-tree pattern labels; occupancy persists across trees
        tree = job.tree
        t = tree.t
        ell = len(self.comp)
        if ch.config.piece_cap is not None:
            cap = max(1, ch.config.piece_cap)
            beta = Fraction(cap, t) if t else Fraction(1, 2)
        else:
            beta = Fraction(ch.config.eps, ell)
        if beta >= 1:
            beta = Fraction(1, 2) if t <= 1 else Fraction(t - 1, t)
        dec = decompose_pieces(tree, beta)
        piece_elems = {("piece", idx) for idx in range(len(dec.pieces))}
        in_element: dict[int, tuple[str, int]] = {}
        for s in dec.seeds:
            in_element[s] = ("seed", s)
        for idx, piece in enumerate(dec.pieces):
            for v in piece.vertices:
                in_element[v] = ("piece", idx)
        self.external_child = {
            v: any(in_element[c] != in_element[v] for c in tree.children[v])
            for v in range(tree.n)
        }
        for kind, payload in dec.order:
            if kind == "seed":
                s = payload
                sside = job.class_of.get(s) if self.mode == "bip" else None
                if s == tree.root:
                    self.place_seed(tree, s, None, sside, job.root_targets)
                else:
                    pim = ch.phi[tree.parent[s]]
                    self.place_seed(tree, s, pim, sside, None)
            else:
                piece = dec.pieces[payload]
                pim = ch.phi[piece.parent_vertex]
                rc = job.class_of.get(piece.root) if self.mode == "bip" else None
                self.embed_piece(tree, piece.root, piece.vertices, pim, rc)
        return dict(ch.phi)


# ---------------------------------------------------------------------------
# public component embedders
# ---------------------------------------------------------------------------

def _as_jobs(pattern: Union[RootedTree, Sequence[TreeJob]],
             root_targets: Optional[Iterable[int]] = None) -> list[TreeJob]:
    if isinstance(pattern, RootedTree):
        d = pattern.depths()
        k1, _ = tree_bipartition_sizes(pattern)
        even = sum(1 for v in range(pattern.n) if d[v] % 2 == 0)
        # class 0 = heavier class of the tree
        heavy_parity = 0 if even >= pattern.n - even else 1
        class_of = {v: 0 if d[v] % 2 == heavy_parity else 1 for v in range(pattern.n)}
        rt = frozenset(root_targets) if root_targets is not None else None
        return [TreeJob(pattern, class_of, rt)]
    return list(pattern)


def _component_sides(
    reduced: ReducedGraph, comp: Sequence[int]
) -> Optional[tuple[tuple[int, ...], tuple[int, ...]]]:
    sub = [tuple(sorted(c)) for c in comp]
    rg = reduced.graph
    idx = {c: i for i, c in enumerate(sorted(comp))}
    g2 = Graph(len(comp), [
        (idx[u], idx[v]) for u, v in rg.edges if u in idx and v in idx
    ])
    if g2.edge_count() == 0 and len(comp) > 1:
        return None
    bp = bipartition(g2, frozenset(range(len(comp))))
    if bp is None:
        return None
    back = sorted(comp)
    xa = tuple(sorted(back[i] for i in bp.classA))
    xb = tuple(sorted(back[i] for i in bp.classB))
    return xa, xb


def _union_size(reduced: ReducedGraph, cls: Iterable[int]) -> int:
    return sum(len(reduced.partition.clusters[i]) for i in cls)


def embed_bipartite_component(
    g: Graph,
    reduced: ReducedGraph,
    comp: Sequence[int],
    pattern: Union[RootedTree, Sequence[TreeJob]],
    config: EmbedderConfig,
    avoid: Iterable[int] = (),
    root_targets: Optional[Iterable[int]] = None,
    sides: Optional[tuple[Sequence[int], Sequence[int]]] = None,
    caps: Optional[tuple[int, int]] = None,
    x_whitelist: Optional[Iterable[int]] = None,
) -> Embedding:
    """Embed a tree or forest into one connected bipartite component of the
    reduced graph: seeds to S-slices, piece prefixes through L-slices along
    shortest reduced paths to a good pair, bulk into C-slices.  Class 0 of
    every job lands in union(X).

    ``caps = (kx, ky)``: vertex-capacity hypotheses |union X| >=
    (1+100 sqrt(eps)) kx and cluster-degree(X) >= (1+100 sqrt(eps)) ky; for a
    single tree with k edges these default to (k, k/2).  ``x_whitelist``
    restricts good pairs to the listed X-clusters (the cluster-subset
    weakening of the size hypothesis).
    """
    jobs = _as_jobs(pattern, root_targets)
    notes: list[str] = []
    comp = sorted(comp)
    if sides is None:
        got = _component_sides(reduced, comp)
        if got is None:
            raise ContractViolation("component is not bipartite")
        xs, ys = got
    else:
        xs, ys = tuple(sorted(sides[0])), tuple(sorted(sides[1]))
    m = reduced.partition.cluster_size
    total = sum(job.tree.n for job in jobs)
    k_edges = total - 1
    kx, ky = caps if caps is not None else (k_edges, Fraction(k_edges, 2))
    factor = 1 + 100 * config.sqrt_eps
    # diameter of the component in R
    sub_idx = {c: i for i, c in enumerate(comp)}
    sub = Graph(len(comp), [
        (sub_idx[u], sub_idx[v])
        for u, v in reduced.graph.edges
        if u in sub_idx and v in sub_idx
    ])
    if len(comp) > 1:
        from .graphs import diameter as graph_diameter

        diam = graph_diameter(sub, frozenset(range(len(comp))))
    else:
        diam = 0
    _check(diam <= config.d, "diam(R) <= d", diam, config.d, notes, config.force, "<=")
    whitelist = sorted(x_whitelist) if x_whitelist is not None else list(xs)
    wl_size = _union_size(reduced, whitelist)
    _check(
        Fraction(wl_size) >= factor * Fraction(kx),
        "|union X| >= (1+100 sqrt(eps)) kx",
        wl_size,
        float(factor * Fraction(kx)),
        notes,
        config.force,
    )
    deg_min = min(
        (sum(m for j in comp if reduced.graph.has_edge(i, j)) for i in whitelist),
        default=0,
    )
    _check(
        Fraction(deg_min) >= factor * Fraction(ky),
        "cluster-degree(X) >= (1+100 sqrt(eps)) ky",
        deg_min,
        float(factor * Fraction(ky)),
        notes,
        config.force,
    )
    maxdeg = max(job.tree.max_degree() for job in jobs)
    dcap = max(diam, 1)
    _check(
        maxdeg ** dcap <= max(k_edges, 1),
        "max degree <= k^(1/d)",
        f"{maxdeg}^{dcap}",
        max(k_edges, 1),
        notes,
        config.force,
        "<=",
    )
    avoid = frozenset(avoid)
    if avoid:
        ux = {v for i in xs for v in reduced.partition.clusters[i]}
        uy = {v for i in ys for v in reduced.partition.clusters[i]}
        c0 = sum(sum(1 for v in range(j.tree.n) if j.class_of[v] == 0) for j in jobs)
        c1 = total - c0
        _check(
            len(avoid & ux) + c0 <= kx,
            "|U n union X| + c0 <= kx",
            len(avoid & ux) + c0,
            kx,
            notes,
            config.force,
            "<=",
        )
        _check(
            Fraction(len(avoid & uy) + c1) <= Fraction(ky),
            "|U n union Y| + c1 <= ky",
            len(avoid & uy) + c1,
            float(Fraction(ky)),
            notes,
            config.force,
            "<=",
        )

    ch = _ClusterHost(g, reduced, config, avoid)
    side_of = {i: 0 for i in xs}
    side_of.update({i: 1 for i in ys})
    engine = _ComponentEngine(
        ch, comp, "bip", side_of=side_of, path_cap=config.d,
    )
    if x_whitelist is not None:
        wl = set(whitelist)
        engine.mpairs = []
        orig = engine._pick_good_pair

        def pick_whitelisted():
            best = None
            for i in wl:
                for j in engine.radj[i]:
                    if not ch.is_good_pair(i, j):
                        continue
                    key = (-min(len(ch.C[i]), len(ch.C[j])), i, j)
                    if best is None or key < best[0]:
                        best = (key, (i, j))
            return best[1] if best else None

        engine._pick_good_pair = pick_whitelisted  # type: ignore
    mappings = [engine.embed_tree(job) for job in jobs]
    notes.append(f"min candidates: {ch.min_candidates}")
    notes.append(f"slice flags: {ch.slice_flags}")
    return _finish(jobs, g, mappings, notes)


def _finish(jobs: list[TreeJob], g: Graph, mappings: list[dict[int, int]],
            notes: list[str]) -> Embedding:
    images: list[int] = []
    for job, mapping in zip(jobs, mappings):
        if not verify_embedding(job.tree, g, mapping):
            raise InternalInvariantError("component embedding failed verification")
        images.extend(mapping.values())
    if len(set(images)) != len(images):
        raise InternalInvariantError("forest embedding is not injective")
    return Embedding(
        mappings[0],
        jobs[0].tree,
        g,
        tuple(notes),
        tuple(mappings) if len(jobs) > 1 else None,
    )


def embed_nonbipartite_component(
    g: Graph,
    reduced: ReducedGraph,
    comp: Sequence[int],
    mpairs: Sequence[tuple[int, int]],
    pattern: Union[RootedTree, Sequence[TreeJob]],
    config: EmbedderConfig,
    avoid: Iterable[int] = (),
    root_targets: Optional[Iterable[int]] = None,
) -> Embedding:
    """Embed into a connected nonbipartite component: pieces route along
    walks of exactly 3d+1 edges so either matching endpoint is reachable;
    each piece sends its heavier residual class to the emptier C-slice of
    the chosen matching pair, keeping the pair occupancies within eps*m."""
    jobs = _as_jobs(pattern, root_targets)
    notes: list[str] = []
    comp = sorted(comp)
    sub_idx = {c: i for i, c in enumerate(comp)}
    sub = Graph(len(comp), [
        (sub_idx[u], sub_idx[v])
        for u, v in reduced.graph.edges
        if u in sub_idx and v in sub_idx
    ])
    if len(comp) > 1:
        from .graphs import diameter as graph_diameter

        diam = graph_diameter(sub, frozenset(range(len(comp))))
    else:
        diam = 0
    if _component_sides(reduced, comp) is not None and len(comp) > 1:
        raise ContractViolation("component is bipartite; use the bipartite embedder")
    _check(diam <= config.d, "diam(R) <= d", diam, config.d, notes, config.force, "<=")
    total = sum(job.tree.n for job in jobs)
    k_edges = max(total - 1, 1)
    m = reduced.partition.cluster_size
    factor = 1 + 100 * config.sqrt_eps
    vm = sum(len(reduced.partition.clusters[i]) + len(reduced.partition.clusters[j]) for i, j in mpairs)
    _check(
        Fraction(vm) >= factor * k_edges,
        "|V(M)| >= (1+100 sqrt(eps)) k",
        vm,
        float(factor * k_edges),
        notes,
        config.force,
    )
    maxdeg = max(job.tree.max_degree() for job in jobs)
    walk_len = 3 * (diam if diam > 0 else 1) + 1
    _check(
        maxdeg ** walk_len <= k_edges,
        "max degree <= k^(1/(3d+1))",
        f"{maxdeg}^{walk_len}",
        k_edges,
        notes,
        config.force,
        "<=",
    )
    avoid = frozenset(avoid)
    if avoid:
        eps_m = config.eps * m
        for i, j in mpairs:
            ci = len(avoid & set(reduced.partition.clusters[i]))
            cj = len(avoid & set(reduced.partition.clusters[j]))
            _check(
                Fraction(abs(ci - cj)) < eps_m,
                "avoid set balanced on M",
                abs(ci - cj),
                float(eps_m),
                notes,
                config.force,
                "<",
            )
    ch = _ClusterHost(g, reduced, config, avoid)
    engine = _ComponentEngine(
        ch, comp, "nonbip", mpairs=mpairs, walk_len=walk_len,
    )
    mappings = [engine.embed_tree(job) for job in jobs]
    notes.append(f"min candidates: {ch.min_candidates}")
    notes.append(f"walk length: {walk_len}")
    return _finish(jobs, g, mappings, notes)


# ---------------------------------------------------------------------------
# connected components: phase 1 + structural pivot
# ---------------------------------------------------------------------------

def _restrict_reduced(g: Graph, reduced: ReducedGraph, keep: Sequence[int]):
    """Reduced graph over a subset of clusters; returns (sub, new-of-old)."""
    keep = sorted(keep)
    clusters = [reduced.partition.clusters[i] for i in keep]
    sub = build_reduced_graph(g, clusters, reduced.partition.eps, reduced.partition.eta)
    return sub, {old: new for new, old in enumerate(keep)}


def _max_matching_pairs(rgraph: Graph, keep: Iterable[int],
                        weight_set: Optional[set[int]] = None) -> list[tuple[int, int]]:
    """Maximum matching on the induced cluster subgraph; with ``weight_set``
    the matching maximizes covered weight-set clusters instead."""
    import networkx as nx

    keep = sorted(keep)
    h = nx.Graph()
    h.add_nodes_from(keep)
    kset = set(keep)
    for u, v in sorted(rgraph.edges):
        if u in kset and v in kset:
            if weight_set is None:
                h.add_edge(u, v)
            else:
                w = (u in weight_set) + (v in weight_set)
                h.add_edge(u, v, weight=w)
    if weight_set is None:
        mate = nx.max_weight_matching(h, maxcardinality=True)
    else:
        mate = nx.max_weight_matching(h, maxcardinality=True, weight="weight")
    return sorted(tuple(sorted(e)) for e in mate)


def _induced_min_degree(g: Graph, vertices: Iterable[int]) -> int:
    vs = set(vertices)
    return min(sum(1 for u in g.neighbors(v) if u in vs) for v in vs)


def embed_connected(
    g: Graph,
    reduced: ReducedGraph,
    comp: Sequence[int],
    tree: RootedTree,
    config: EmbedderConfig,
) -> Embedding:
    """Embed a tree into (the host vertices of) one connected reduced-graph
    component.

    Phase 1 runs the seed/link/cluster scheme restricted to good pairs within
    distance d1 of the current cluster.  If it starves, the failure pins a
    cluster C*; the ball H (radius d1) around C* then has enough free space,
    and the tree is re-embedded from scratch into H' (radius d1+1) via the
    nonbipartite embedder (H' nonbipartite: matching maximizing coverage of
    the free clusters) or the bipartite embedder on the heavy side.
    """
    notes: list[str] = []
    comp = sorted(comp)
    k = tree.t
    factor = 1 + 100 * config.sqrt_eps
    union = [v for i in comp for v in reduced.partition.clusters[i]]
    delta_comp = _induced_min_degree(g, union)
    _check(
        Fraction(delta_comp) >= factor * Fraction(config.alpha) * k,
        "delta(G) >= (1+100 sqrt(eps)) alpha k",
        delta_comp,
        float(factor * Fraction(config.alpha) * k),
        notes,
        config.force,
    )
    _check(
        tree.max_degree() ** config.c <= max(k, 1),
        "max degree <= k^(1/c)",
        f"{tree.max_degree()}^{config.c}",
        max(k, 1),
        notes,
        config.force,
        "<=",
    )
    sides = _component_sides(reduced, comp)
    n_comp = len(union)
    if sides is not None:
        xa, xb = sides
        size_a = _union_size(reduced, xa)
        _check(
            Fraction(size_a) >= factor * k,
            "|union A| >= (1+100 sqrt(eps)) k",
            size_a,
            float(factor * k),
            notes,
            config.force,
        )
    else:
        _check(
            Fraction(n_comp) >= factor * k,
            "n >= (1+100 sqrt(eps)) k",
            n_comp,
            float(factor * k),
            notes,
            config.force,
        )

    # small component: the diameter bound applies directly
    if Fraction(n_comp) < factor * 2 * k:
        cfg = EmbedderConfig(
            eps=config.eps, alpha=config.alpha, delta=config.delta,
            diameter_cap=config.d2, force=config.force, seed=config.seed,
            n_clusters=config.n_clusters, piece_cap=config.piece_cap,
        )
        if sides is not None:
            emb = embed_bipartite_component(
                g, reduced, comp, tree, cfg, sides=(xa, xb),
                caps=(k, Fraction(k, 2)),
            )
        else:
            pairs = _max_matching_pairs(reduced.graph, comp)
            emb = embed_nonbipartite_component(
                g, reduced, comp, pairs, tree, cfg,
            )
        return Embedding(emb.mapping, tree, g, tuple(notes) + emb.notes + ("small component branch",))

    # phase 1: path-limited scheme
    jobs = _as_jobs(tree)
    ch = _ClusterHost(g, reduced, config)
    engine = _ComponentEngine(ch, comp, "free", path_cap=config.d1)
    try:
        mapping = engine.embed_tree(jobs[0])
        notes.append("phase 1 complete")
        if not verify_embedding(tree, g, mapping):
            raise InternalInvariantError("phase-1 embedding failed verification")
        return Embedding(mapping, tree, g, tuple(notes))
    except EmbeddingFailure as fail:
        anchor = fail.diagnostics.get("anchor_cluster")
        if anchor is None:
            raise
        notes.append(f"phase 1 failed at cluster {anchor}: {fail.diagnostics['reason']}")

    free_clusters = {
        i for i in comp if Fraction(ch.cluster_free(i)) >= ch.good_thresh
    }
    dists = _bfs_cluster_dist(reduced, comp, anchor)
    h_clusters = [i for i in comp if dists.get(i, 10**9) <= config.d1]
    hp_clusters = [i for i in comp if dists.get(i, 10**9) <= config.d1 + 1]
    sub, new_of_old = _restrict_reduced(g, reduced, hp_clusters)
    sub_comp = list(range(len(hp_clusters)))
    sub_sides = _component_sides(sub, sub_comp)
    cfg2 = EmbedderConfig(
        eps=config.eps, alpha=config.alpha, delta=config.delta,
        diameter_cap=config.d2, force=config.force, seed=config.seed,
        n_clusters=config.n_clusters, piece_cap=config.piece_cap,
    )
    if sub_sides is None:
        s_new = {new_of_old[i] for i in h_clusters if i in free_clusters}
        pairs = _max_matching_pairs(sub.graph, [new_of_old[i] for i in h_clusters], s_new)
        vm = sum(len(sub.partition.clusters[i]) + len(sub.partition.clusters[j]) for i, j in pairs)
        _check(
            Fraction(vm) >= factor * k,
            "|V(M)| >= (1+100 sqrt(eps)) k",
            vm,
            float(factor * k),
            notes,
            config.force,
        )
        emb = embed_nonbipartite_component(g, sub, sub_comp, pairs, tree, cfg2)
        notes.append("phase 2: nonbipartite ball")
    else:
        sa, sb = sub_sides
        in_h = {new_of_old[i] for i in h_clusters}
        wa = _union_size(sub, [i for i in sa if i in in_h])
        wb = _union_size(sub, [i for i in sb if i in in_h])
        if wb > wa:
            sa, sb = sb, sa
            wa, wb = wb, wa
        whitelist = [i for i in sa if i in in_h]
        emb = embed_bipartite_component(
            g, sub, sub_comp, tree, cfg2, sides=(sa, sb),
            caps=(k, Fraction(k, 2)), x_whitelist=whitelist,
        )
        notes.append("phase 2: bipartite ball")
    return Embedding(emb.mapping, tree, g, tuple(notes) + emb.notes)


def _bfs_cluster_dist(reduced: ReducedGraph, comp: Sequence[int], src: int) -> dict[int, int]:
    cset = set(comp)
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in reduced.graph.neighbors(u):
            if v in cset and v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


# ---------------------------------------------------------------------------
# scenario classification and dispatch
# ---------------------------------------------------------------------------

def _reduced_components(reduced: ReducedGraph) -> list[list[int]]:
    comps = components(reduced.graph)
    out = [sorted(c) for c in comps]
    out.sort(key=lambda c: (-_union_size(reduced, c), c[0]))
    return out


def classify_scenario(
    g: Graph,
    x: int,
    reduced: ReducedGraph,
    k: int,
    k1: int,
    config: EmbedderConfig,
) -> Scenario:
    """First matching favourable-configuration tag, in order I, II, III,
    IVa..IVe; ``none`` if nothing matches.

    Size thresholds are vertex-capacity comparisons with theta = eps^(1/4)
    slack; "seeing" a set means sqrt(eps)-fraction adjacency from x.
    """
    theta = config.quarter_eps
    sqe = config.sqrt_eps
    comps = _reduced_components(reduced)
    nx_set = frozenset(g.neighbors(x))

    def union_vertices(cl: Sequence[int]) -> list[int]:
        return [v for i in cl for v in reduced.partition.clusters[i]]

    info = []
    for cl in comps:
        uni = union_vertices(cl)
        deg = sum(1 for v in uni if v in nx_set)
        sides = _component_sides(reduced, cl)
        entry = {
            "clusters": cl,
            "size": len(uni),
            "deg_x": deg,
            "sees": Fraction(deg) >= sqe * len(uni) and deg > 0,
            "edge": deg > 0,
            "sides": sides,
        }
        if sides is not None:
            ua, ub = union_vertices(sides[0]), union_vertices(sides[1])
            entry["side_sizes"] = (len(ua), len(ub))
            entry["side_deg"] = (
                sum(1 for v in ua if v in nx_set),
                sum(1 for v in ub if v in nx_set),
            )
        info.append(entry)

    big = Fraction(1) + theta
    for e in info:
        if e["sides"] is None and Fraction(e["size"]) >= big * k:
            return Scenario("I", {"component": e["clusters"]})
    for e in info:
        if e["sides"] is not None and Fraction(max(e["side_sizes"])) >= big * k1:
            return Scenario("II", {"component": e["clusters"], "sides": e["sides"]})
    for e in info:
        if e["sides"] is None:
            continue
        sa, sb = e["side_sizes"]
        da, db = e["side_deg"]
        if (
            Fraction(max(sa, sb)) >= big * Fraction(2 * k, 3)
            and Fraction(da) >= sqe * sa
            and da > 0
            and Fraction(db) >= sqe * sb
            and db > 0
        ):
            return Scenario("III", {"component": e["clusters"], "sides": e["sides"]})
    seen = [e for e in info if e["sees"]]
    if len(seen) >= 2:
        c1, c2 = seen[0], seen[1]
        third = [
            e["clusters"]
            for e in info
            if e["edge"] and e is not c1 and e is not c2
        ]
        payload = {
            "c1": c1["clusters"],
            "c2": c2["clusters"],
            "sides1": c1["sides"],
            "sides2": c2["sides"],
        }
        if third:
            payload["c3"] = third[0]
            return Scenario("IVa", payload)
        for which, e in (("1", c1), ("2", c2)):
            if e["sides"] is None and Fraction(e["size"]) >= big * Fraction(2 * k, 3):
                payload["nonbip"] = which
                return Scenario("IVb", payload)
        for which, e in (("1", c1), ("2", c2)):
            if e["sides"] is not None and e["side_deg"][0] > 0 and e["side_deg"][1] > 0:
                payload["both_sides"] = which
                return Scenario("IVc", payload)
        for which, e in (("1", c1), ("2", c2)):
            if e["sides"] is None:
                continue
            if min(e["side_sizes"]) >= big * Fraction(2 * k, 3):
                da, db = e["side_deg"]
                if (da > 0) != (db > 0):
                    payload["one_side"] = which
                    return Scenario("IVd", payload)
        if c1["sides"] is not None and c2["sides"] is not None:
            one_sided = all(
                (e["side_deg"][0] > 0) != (e["side_deg"][1] > 0) for e in (c1, c2)
            )
            if one_sided:
                s1 = 0 if c1["side_deg"][0] > 0 else 1
                s2 = 0 if c2["side_deg"][0] > 0 else 1
                a1 = c1["side_sizes"][s1]
                b1 = c1["side_sizes"][1 - s1]
                a2 = c2["side_sizes"][s2]
                b2 = c2["side_sizes"][1 - s2]
                thresh = big * Fraction(2 * k, 3)
                payload["seen_sides"] = (s1, s2)
                if Fraction(min(a1, b2)) >= thresh:
                    payload["orientation"] = ("1", "2")
                    return Scenario("IVe", payload)
                if Fraction(min(a2, b1)) >= thresh:
                    payload["orientation"] = ("2", "1")
                    return Scenario("IVe", payload)
    return Scenario("none", {"components": [e["clusters"] for e in info]})


# ---------------------------------------------------------------------------
# greedy embedding into a component (minimum-degree argument)
# ---------------------------------------------------------------------------

def greedy_embed_tree(
    g: Graph,
    tree: RootedTree,
    root: int,
    vertices: Sequence[int],
    allowed: set[int],
    occupied: set[int],
    root_candidates: Iterable[int],
) -> dict[int, int]:
    """Greedy BFS embedding of the subtree rooted at ``root`` into ``allowed``,
    each vertex taking the smallest free neighbor of its parent's image."""
    phi: dict[int, int] = {}
    vset = set(vertices)
    cands = sorted(w for w in root_candidates if w in allowed and w not in occupied)
    if not cands:
        raise EmbeddingFailure(
            "greedy starvation at a root",
            pattern_vertex=root,
            allowed=len(allowed),
            occupied=len(occupied & allowed),
        )
    phi[root] = cands[0]
    occupied.add(cands[0])
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for c in tree.children[v]:
            if c not in vset:
                continue
            opts = sorted(
                w
                for w in g.neighbors(phi[v])
                if w in allowed and w not in occupied
            )
            if not opts:
                raise EmbeddingFailure(
                    "greedy starvation",
                    pattern_vertex=c,
                    at_image=phi[v],
                    allowed=len(allowed),
                    occupied=len(occupied & allowed),
                )
            phi[c] = opts[0]
            occupied.add(opts[0])
            queue.append(c)
    return phi


def _forest_jobs_from_cut(
    tree: RootedTree, z: int, color: dict[int, int]
) -> list[tuple[int, tuple[int, ...], dict[int, int]]]:
    """Components of T - z with the induced coloring, largest first."""
    comps = tree_components_minus(tree, z)
    return [(root, verts, {v: color[v] for v in verts}) for root, verts in comps]


def _subtree_job(tree: RootedTree, root: int, vertices: Sequence[int],
                 class_of: dict[int, int], targets) -> tuple[TreeJob, list[int]]:
    """Relabel a component of T - z (re-rooted at its attachment vertex) as a
    standalone job; returns (job, old-label-of-new-label)."""
    vs = sorted(vertices)
    idx = {v: i for i, v in enumerate(vs)}
    adj: dict[int, list[int]] = {v: [] for v in vs}
    for u, v in tree.edges():
        if u in idx and v in idx:
            adj[u].append(v)
            adj[v].append(u)
    parent = [0] * len(vs)
    parent[idx[root]] = idx[root]
    seen = {root}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                parent[idx[u]] = idx[v]
                queue.append(u)
    sub = RootedTree(parent, idx[root])
    cls = {idx[v]: class_of[v] for v in vs}
    job = TreeJob(sub, cls, frozenset(targets) if targets is not None else None)
    return job, vs



# ---------------------------------------------------------------------------
# key-configuration dispatch
# ---------------------------------------------------------------------------

def _union_of(reduced: ReducedGraph, clusters: Iterable[int]) -> set[int]:
    return {v for i in clusters for v in reduced.partition.clusters[i]}


def _cut_groups(tree: RootedTree, z: int) -> list[tuple[int, tuple[int, ...]]]:
    return tree_components_minus(tree, z)


def _grouped_indices(sizes: Sequence[int], t: int, two: bool) -> list[list[int]]:
    part = partition_two(sizes, t) if two else partition_three(sizes, t)
    return [list(p) for p in part.parts]


def _greedy_forest(
    g: Graph,
    tree: RootedTree,
    comps: Sequence[tuple[int, tuple[int, ...]]],
    indices: Sequence[int],
    allowed: set[int],
    occupied: set[int],
    root_candidates: frozenset[int],
    mapping: dict[int, int],
) -> None:
    for idx in indices:
        root, verts = comps[idx]
        phi = greedy_embed_tree(g, tree, root, verts, allowed, occupied, root_candidates)
        mapping.update(phi)


def _slice_forest_into_bipartite(
    g: Graph,
    reduced: ReducedGraph,
    comp_clusters: Sequence[int],
    sides: tuple[Sequence[int], Sequence[int]],
    tree: RootedTree,
    comps: Sequence[tuple[int, tuple[int, ...]]],
    indices: Sequence[int],
    root_class_to_x: bool,
    x: int,
    config: EmbedderConfig,
    caps: tuple,
    avoid: set[int],
    mapping: dict[int, int],
    flip_f3_like: Optional[dict[int, int]] = None,
) -> Embedding:
    """Embed the selected components of T - z into a bipartite reduced
    component, roots prescribed into N(x) on the X side; class 0 of each job
    is the class routed to union(X)."""
    ua = _union_of(reduced, sides[0])
    nx_set = frozenset(g.neighbors(x))
    jobs, backs = [], []
    for idx in indices:
        root, verts = comps[idx]
        cls = _tree_parity_classes(tree, verts, root)
        if not root_class_to_x:
            cls = {v: 1 - c for v, c in cls.items()}
        if flip_f3_like and idx in flip_f3_like:
            cls = {v: flip_f3_like[idx] ^ c for v, c in cls.items()}
        targets = nx_set & (ua if cls[root] == 0 else _union_of(reduced, sides[1]))
        job, back = _subtree_job(tree, root, verts, cls, targets - avoid)
        jobs.append(job)
        backs.append(back)
    emb = embed_bipartite_component(
        g, reduced, comp_clusters, jobs, config, sides=sides, caps=caps,
        avoid=avoid,
    )
    maps = emb.forest_mappings if emb.forest_mappings is not None else (emb.mapping,)
    for back, jmap in zip(backs, maps):
        for nv, img in jmap.items():
            mapping[back[nv]] = img
    return emb


def embed_key(
    g: Graph,
    x: int,
    reduced: ReducedGraph,
    tree: RootedTree,
    config: EmbedderConfig,
    scenario: Optional[Scenario] = None,
) -> Embedding:
    """Dispatch on the classified configuration.

    Large components (I/II) go straight to the connected embedder.  The
    x-centered configurations cut the tree at a separator, map the cutvertex
    to x, group the components, and split them across the components x sees:
    greedy minimum-degree embedding into one, slice machinery into the other.
    """
    k = tree.t
    k1, _ = tree_bipartition_sizes(tree)
    notes: list[str] = []
    if scenario is None:
        scenario = classify_scenario(g, x, reduced, k, k1, config)
    tag = scenario.tag
    pay = scenario.payload
    if tag == "none":
        raise EmbeddingFailure("no favourable scenario", scenario="none", detail=pay)
    theta = config.quarter_eps
    stats = degree_stats(g)
    _check(
        Fraction(stats.minimum) >= (1 + theta) * Fraction(config.alpha) * k,
        "delta(G) >= (1+eps^{1/4}) alpha k",
        stats.minimum,
        float((1 + theta) * Fraction(config.alpha) * k),
        notes, config.force,
    )
    _check(
        tree.max_degree() ** config.c <= max(k, 1),
        "max degree <= k^(1/c)",
        f"{tree.max_degree()}^{config.c}", max(k, 1),
        notes, config.force, "<=",
    )
    m = reduced.partition.cluster_size
    _check(
        Fraction(tree.max_degree()) <= config.eps * m,
        "root count <= eps n / |R|",
        tree.max_degree(), float(config.eps * m),
        notes, config.force, "<=",
    )

    if tag in ("I", "II"):
        emb = embed_connected(g, reduced, pay["component"], tree, config)
        return Embedding(
            emb.mapping, tree, g,
            (f"scenario {tag}",) + tuple(notes) + emb.notes,
        )

    nx_set = frozenset(g.neighbors(x))
    mapping: dict[int, int] = {}
    sub_notes: tuple[str, ...] = ()

    if tag == "III":
        col = balanced_cut_coloring(tree)
        z = col.z
        comps_t = _cut_groups(tree, z)
        mapping[z] = x
        emb = _slice_forest_into_bipartite(
            g, reduced, pay["component"], pay["sides"], tree, comps_t,
            list(range(len(comps_t))), True, x, config,
            (Fraction(2 * k, 3), Fraction(k, 2)), set(), mapping,
            flip_f3_like={
                i: col.color[comps_t[i][0]] for i in range(len(comps_t))
            },
        )
        sub_notes = emb.notes
    else:
        # all IV cases share the half-separator cut
        z1 = half_separator(tree, min(tree.leaves()))
        comps_t = _cut_groups(tree, z1)
        sizes = [len(verts) for _, verts in comps_t]
        mapping[z1] = x
        occupied: set[int] = {x}
        c1, c2 = pay["c1"], pay["c2"]
        u1, u2 = _union_of(reduced, c1), _union_of(reduced, c2)

        if tag == "IVa":
            f1, f2, f3 = _grouped_indices(sizes, k, two=False)
            u3 = _union_of(reduced, pay["c3"])
            for indices, uni in ((f1, u1), (f2, u2), (f3, u3)):
                _greedy_forest(g, tree, comps_t, indices, uni, occupied, nx_set, mapping)
        elif tag == "IVb":
            j1, j2 = _grouped_indices(sizes, k, two=True)
            nb = (c1, u1) if pay["nonbip"] == "1" else (c2, u2)
            other = (c2, u2) if pay["nonbip"] == "1" else (c1, u1)
            _greedy_forest(g, tree, comps_t, j2, other[1], occupied, nx_set, mapping)
            jobs, backs = [], []
            for idx in j1:
                root, verts = comps_t[idx]
                cls = _tree_parity_classes(tree, verts, root)
                job, back = _subtree_job(tree, root, verts, cls, (nx_set & nb[1]) - occupied)
                jobs.append(job)
                backs.append(back)
            pairs = _max_matching_pairs(reduced.graph, nb[0])
            emb = embed_nonbipartite_component(
                g, reduced, nb[0], pairs, jobs, config, avoid=occupied,
            )
            maps = emb.forest_mappings if emb.forest_mappings is not None else (emb.mapping,)
            for back, jmap in zip(backs, maps):
                for nv, img in jmap.items():
                    mapping[back[nv]] = img
            sub_notes = emb.notes
        elif tag == "IVc":
            which = pay["both_sides"]
            bip_c = c1 if which == "1" else c2
            other_u = u2 if which == "1" else u1
            sides = pay["sides1"] if which == "1" else pay["sides2"]
            f1, f2, f3 = _grouped_indices(sizes, k, two=False)
            _greedy_forest(g, tree, comps_t, f1, other_u, occupied, nx_set, mapping)
            # orient: A = the side of the bipartite component x sees more of
            da = len(nx_set & _union_of(reduced, sides[0]))
            db = len(nx_set & _union_of(reduced, sides[1]))
            if db > da:
                sides = (sides[1], sides[0])
            ua, ub = _union_of(reduced, sides[0]), _union_of(reduced, sides[1])
            # F2's even levels go to A; F3's larger class joins F2's smaller side
            even2 = odd2 = 0
            for idx in f2:
                root, verts = comps_t[idx]
                cls = _tree_parity_classes(tree, verts, root)
                even2 += sum(1 for v in verts if cls[v] == 0)
                odd2 += sum(1 for v in verts if cls[v] == 1)
            f3_flip: dict[int, int] = {}
            for idx in f3:
                root, verts = comps_t[idx]
                cls = _tree_parity_classes(tree, verts, root)
                big_is_root_class = sum(
                    1 for v in verts if cls[v] == 0
                ) * 2 >= len(verts)
                # larger F3 class joins the side holding F2's smaller class
                target_big_side = 1 if even2 >= odd2 else 0
                root_side = target_big_side if big_is_root_class else 1 - target_big_side
                f3_flip[idx] = root_side  # 0: root class to A, 1: to B
                pool = ua if root_side == 0 else ub
                phi = greedy_embed_tree(
                    g, tree, root, verts, u1 if which == "1" else u2,
                    occupied, nx_set & pool,
                )
                mapping.update(phi)
            emb = _slice_forest_into_bipartite(
                g, reduced, bip_c, sides, tree, comps_t, f2, True, x, config,
                (Fraction(k, 2), Fraction(k, 2)), set(occupied) - {x}, mapping,
            )
            sub_notes = emb.notes
        elif tag == "IVd":
            which = pay["one_side"]
            bip_c = c1 if which == "1" else c2
            other_u = u2 if which == "1" else u1
            sides = pay["sides1"] if which == "1" else pay["sides2"]
            da = len(nx_set & _union_of(reduced, sides[0]))
            if len(nx_set & _union_of(reduced, sides[1])) > da:
                sides = (sides[1], sides[0])
            j1, j2 = _grouped_indices(sizes, k, two=True)
            _greedy_forest(g, tree, comps_t, j2, other_u, occupied, nx_set, mapping)
            emb = _slice_forest_into_bipartite(
                g, reduced, bip_c, sides, tree, comps_t, j1, True, x, config,
                (Fraction(2 * k, 3), Fraction(k, 2)), set(occupied) - {x}, mapping,
            )
            sub_notes = emb.notes
        elif tag == "IVe":
            o1, o2 = pay["orientation"]
            s1, s2 = pay["seen_sides"]
            role1 = (c1, pay["sides1"], s1) if o1 == "1" else (c2, pay["sides2"], s2)
            role2 = (c2, pay["sides2"], s2) if o1 == "1" else (c1, pay["sides1"], s1)
            j1, j2 = _grouped_indices(sizes, k, two=True)
            # the J1 roots all lie in one class of the T-coloring
            root_heavy = 0
            total1 = 0
            for idx in j1:
                root, verts = comps_t[idx]
                cls = _tree_parity_classes(tree, verts, root)
                root_heavy += sum(1 for v in verts if cls[v] == 0)
                total1 += len(verts)
            roots_in_heavy = 2 * root_heavy >= total1
            target = role1 if roots_in_heavy else role2
            rest = role2 if roots_in_heavy else role1
            tc, tsides, tseen = target
            sides = (tsides[tseen], tsides[1 - tseen])
            emb = _slice_forest_into_bipartite(
                g, reduced, tc, sides, tree, comps_t, j1, True, x, config,
                (Fraction(2 * k, 3), Fraction(k, 2)), set(occupied) - {x}, mapping,
            )
            occupied.update(mapping.values())
            _greedy_forest(
                g, tree, comps_t, j2, _union_of(reduced, rest[0]), occupied,
                nx_set, mapping,
            )
            sub_notes = emb.notes
        else:
            raise InternalInvariantError(f"unhandled scenario tag {tag}")

    if not verify_embedding(tree, g, mapping):
        raise InternalInvariantError(f"scenario {tag} produced an invalid mapping")
    return Embedding(mapping, tree, g, (f"scenario {tag}",) + tuple(notes) + sub_notes)


# ---------------------------------------------------------------------------
# degree-condition pipelines
# ---------------------------------------------------------------------------

MODES = ("two-k-half", "two-thirds", "bounded-delta", "erdos-sos", "second-nbhd")


def equipartition(
    g: Graph, exclude: Iterable[int], n_clusters: int, seed: int = 0
) -> list[list[int]]:
    """Seeded random equal-size clusters over V(G) minus ``exclude``;
    leftover vertices (fewer than one cluster) stay unclustered."""
    import random as _random

    verts = sorted(set(range(g.n)) - set(exclude))
    rng = _random.Random(seed)
    rng.shuffle(verts)
    m = len(verts) // n_clusters
    if m == 0:
        raise ContractViolation("not enough vertices for the requested clusters")
    return [sorted(verts[i * m : (i + 1) * m]) for i in range(n_clusters)]


def _second_neighborhood(g: Graph, v: int) -> frozenset[int]:
    n1 = g.neighbors(v)
    n2 = set()
    for u in n1:
        n2.update(g.neighbors(u))
    n2 -= set(n1)
    n2.discard(v)
    return frozenset(n2)


def _peel_to_min_degree(g: Graph, threshold: Fraction) -> list[int]:
    """Repeatedly delete vertices of degree <= threshold; never empties a
    graph whose average degree exceeds 2*threshold."""
    alive = set(range(g.n))
    deg = {v: g.degree(v) for v in alive}
    changed = True
    while changed:
        changed = False
        for v in sorted(alive):
            if Fraction(deg[v]) <= threshold:
                alive.discard(v)
                for u in g.neighbors(v):
                    if u in alive:
                        deg[u] -= 1
                changed = True
        if not alive:
            raise InternalInvariantError("degree peeling emptied the graph")
    return sorted(alive)


def _default_cluster_count(n: int, config: EmbedderConfig) -> int:
    if config.n_clusters is not None:
        return config.n_clusters
    return max(4, min(24, n // 25))


def embed_with_degree_conditions(
    g: Graph,
    tree: RootedTree,
    mode: str,
    config: EmbedderConfig,
    clusters: Optional[Sequence[Sequence[int]]] = None,
    bounded_delta: Optional[int] = None,
) -> Embedding:
    """Full pipelines: check the mode's degree hypotheses, pick the pivot
    vertex, regularize G minus the pivot (supplied clusters or a seeded
    random equipartition), classify the scenario, and dispatch.

    Modes: two-k-half (min k/2 / max 2k), two-thirds (min 2k/3 / max k),
    bounded-delta (max-degree-Delta trees), erdos-sos (average degree,
    routed through the densest reduced component without a pivot), and
    second-nbhd (first and second neighborhood of one vertex).
    """
    if mode not in MODES:
        raise ContractViolation(f"unknown mode {mode!r}")
    k = tree.t
    stats = degree_stats(g)
    one = 1 + Fraction(config.delta)
    notes: list[str] = []
    alpha = Fraction(2, 3) if mode == "two-thirds" else Fraction(1, 2)
    import dataclasses

    cfg = dataclasses.replace(config, alpha=alpha)

    if mode == "two-k-half":
        _check(Fraction(stats.minimum) >= one * Fraction(k, 2),
               "delta(G) >= (1+delta) k/2", stats.minimum,
               float(one * Fraction(k, 2)), notes, config.force)
        _check(Fraction(stats.maximum) >= one * 2 * k,
               "Delta(G) >= 2(1+delta) k", stats.maximum,
               float(one * 2 * k), notes, config.force)
        _check(tree.max_degree() ** 67 <= max(k, 1), "max degree <= k^(1/67)",
               f"{tree.max_degree()}^67", max(k, 1), notes, config.force, "<=")
    elif mode == "two-thirds":
        _check(Fraction(stats.minimum) >= one * Fraction(2 * k, 3),
               "delta(G) >= (1+delta) 2k/3", stats.minimum,
               float(one * Fraction(2 * k, 3)), notes, config.force)
        _check(Fraction(stats.maximum) >= one * k,
               "Delta(G) >= (1+delta) k", stats.maximum,
               float(one * k), notes, config.force)
        _check(tree.max_degree() ** 49 <= max(k, 1), "max degree <= k^(1/49)",
               f"{tree.max_degree()}^49", max(k, 1), notes, config.force, "<=")
    elif mode == "bounded-delta":
        dd = bounded_delta if bounded_delta is not None else max(tree.max_degree(), 2)
        _check(tree.max_degree() <= dd, "Delta(T) <= Delta",
               tree.max_degree(), dd, notes, config.force, "<=")
        _check(Fraction(stats.minimum) >= one * Fraction(k, 2),
               "delta(G) >= (1+delta) k/2", stats.minimum,
               float(one * Fraction(k, 2)), notes, config.force)
        need = 2 * (Fraction(dd - 1, dd) + Fraction(config.delta)) * k
        _check(Fraction(stats.maximum) >= need,
               "Delta(G) >= 2((Delta-1)/Delta + delta) k", stats.maximum,
               float(need), notes, config.force)
    elif mode == "erdos-sos":
        _check(stats.average > one * k, "d(G) > (1+delta) k",
               float(stats.average), float(one * k), notes, config.force, ">")
    elif mode == "second-nbhd":
        _check(Fraction(stats.minimum) >= one * Fraction(k, 2),
               "delta(G) >= (1+delta) k/2", stats.minimum,
               float(one * Fraction(k, 2)), notes, config.force)

    if mode == "erdos-sos":
        alive = _peel_to_min_degree(g, one * Fraction(k, 2))
        notes.append(f"peeled to {len(alive)} vertices")
        ell = _default_cluster_count(len(alive), cfg)
        cls = clusters if clusters is not None else _equipartition_of(
            g, alive, ell, cfg.seed
        )
        reduced = build_reduced_graph(g, cls, cfg.eps, cfg.eta)
        comps = _reduced_components(reduced)
        best, best_score = None, None
        for comp in comps:
            uni = sorted(_union_of(reduced, comp))
            sub, _ = g.induced(uni)
            score = (degree_stats(sub).average, -comp[0]) if uni else (Fraction(0), 0)
            if best_score is None or score > best_score:
                best, best_score = comp, score
        _check(Fraction(_union_size(reduced, best)) >= (1 + Fraction(cfg.delta, 2)) * k,
               "|union C| >= (1+delta/2) k", _union_size(reduced, best),
               float((1 + Fraction(cfg.delta, 2)) * k), notes, config.force)
        emb = embed_connected(g, reduced, best, tree, cfg)
        return Embedding(emb.mapping, tree, g,
                         ("mode erdos-sos",) + tuple(notes) + emb.notes)

    if mode == "second-nbhd":
        scored = [
            (min(g.degree(v), len(_second_neighborhood(g, v))), -v)
            for v in range(g.n)
        ]
        x = -max(zip(scored, range(0, -g.n, -1)))[0][1] if False else max(
            range(g.n),
            key=lambda v: (min(g.degree(v), len(_second_neighborhood(g, v))), -v),
        )
        _check(
            Fraction(min(g.degree(x), len(_second_neighborhood(g, x)))) >= one * Fraction(4 * k, 3),
            "min(|N(x)|, |N2(x)|) >= (1+delta) 4k/3",
            min(g.degree(x), len(_second_neighborhood(g, x))),
            float(one * Fraction(4 * k, 3)), notes, config.force,
        )
    else:
        x = max(range(g.n), key=lambda v: (g.degree(v), -v))
    notes.append(f"pivot vertex {x}")

    ell = _default_cluster_count(g.n - 1, cfg)
    cls = clusters if clusters is not None else equipartition(g, {x}, ell, cfg.seed)
    for c in cls:
        if x in c:
            raise ContractViolation("clusters must avoid the pivot vertex")
    reduced = build_reduced_graph(g, cls, cfg.eps, cfg.eta)
    k1, _ = tree_bipartition_sizes(tree)
    sc = classify_scenario(g, x, reduced, k, k1, cfg)
    notes.append(f"scenario {sc.tag}")

    if mode == "bounded-delta" and tree.max_degree() <= 2 and sc.tag.startswith("IV"):
        # path pattern: separator to the pivot, both halves greedily
        z = half_separator(tree, min(tree.leaves()))
        comps_t = tree_components_minus(tree, z)
        mapping = {z: x}
        occupied = {x}
        nx_set = frozenset(g.neighbors(x))
        targets = [_union_of(reduced, sc.payload["c1"]), _union_of(reduced, sc.payload["c2"])]
        for (root, verts), uni in zip(comps_t, targets):
            phi = greedy_embed_tree(g, tree, root, verts, uni, occupied, nx_set)
            mapping.update(phi)
        if not verify_embedding(tree, g, mapping):
            raise InternalInvariantError("path split produced an invalid mapping")
        return Embedding(mapping, tree, g, tuple(notes) + ("path split",))

    emb = embed_key(g, x, reduced, tree, cfg, scenario=sc)
    return Embedding(emb.mapping, tree, g, (f"mode {mode}",) + tuple(notes) + emb.notes)


def _equipartition_of(g: Graph, vertices: Sequence[int], n_clusters: int, seed: int) -> list[list[int]]:
    import random as _random

    verts = sorted(vertices)
    rng = _random.Random(seed)
    rng.shuffle(verts)
    m = len(verts) // n_clusters
    if m == 0:
        raise ContractViolation("not enough vertices for the requested clusters")
    return [sorted(verts[i * m : (i + 1) * m]) for i in range(n_clusters)]
