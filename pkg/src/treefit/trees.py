"""Rooted trees and the cutting machinery: piece decomposition, separators,
integer-sequence partitioning, and the two balanced cut-coloring procedures.

All fractional thresholds (ceil(t/2), 2t/3, (3t-1)/4) are compared through
integer cross-multiplication; nothing here touches floats.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .errors import ContractViolation, InternalInvariantError, ParseError
from .graphs import Graph

__all__ = [
    "RootedTree",
    "Decomposition",
    "Piece",
    "SequencePartition",
    "CutColoring",
    "enumerate_trees",
    "random_tree",
    "decompose_pieces",
    "half_separator",
    "partition_three",
    "partition_two",
    "cut_coloring",
    "balanced_cut_coloring",
    "imbalance",
    "tree_bipartition_sizes",
    "tree_components_minus",
]


class RootedTree:
    """Tree with a designated root, stored as a parent array.

    parent[root] == root; children lists are kept sorted for determinism.
    """

    __slots__ = ("n", "root", "parent", "children", "_depth")

    def __init__(self, parent: Sequence[int], root: int):
        n = len(parent)
        if n == 0:
            raise ContractViolation("tree must have at least one vertex")
        if not (0 <= root < n) or parent[root] != root:
            raise ContractViolation("root must be its own parent")
        kids: list[list[int]] = [[] for _ in range(n)]
        for v, p in enumerate(parent):
            if v == root:
                continue
            if not (0 <= p < n) or p == v:
                raise ContractViolation(f"bad parent {p} for vertex {v}")
            kids[p].append(v)
        self.n = n
        self.root = root
        self.parent = tuple(parent)
        self.children = tuple(tuple(sorted(c)) for c in kids)
        self._depth: Optional[tuple[int, ...]] = None
        if len(self.preorder()) != n:
            raise ContractViolation("parent array contains a cycle")

    # -- basic structure ---------------------------------------------------

    @property
    def t(self) -> int:
        """Edge count."""
        return self.n - 1

    def preorder(self) -> list[int]:
        order = []
        stack = [self.root]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(self.children[v]))
        return order

    def depths(self) -> tuple[int, ...]:
        if self._depth is None:
            d = [0] * self.n
            for v in self.preorder():
                if v != self.root:
                    d[v] = d[self.parent[v]] + 1
            self._depth = tuple(d)
        return self._depth

    def levels(self) -> list[list[int]]:
        d = self.depths()
        out: list[list[int]] = [[] for _ in range(max(d) + 1)]
        for v in range(self.n):
            out[d[v]].append(v)
        return out

    def subtree_sizes(self) -> list[int]:
        size = [1] * self.n
        for v in reversed(self.preorder()):
            if v != self.root:
                size[self.parent[v]] += size[v]
        return size

    def subtree_vertices(self, v: int) -> list[int]:
        out = []
        stack = [v]
        while stack:
            w = stack.pop()
            out.append(w)
            stack.extend(self.children[w])
        return sorted(out)

    def degree(self, v: int) -> int:
        return len(self.children[v]) + (0 if v == self.root else 1)

    def max_degree(self) -> int:
        return max(self.degree(v) for v in range(self.n))

    def leaves(self) -> list[int]:
        if self.n == 1:
            return [self.root]
        return [v for v in range(self.n) if self.degree(v) == 1]

    def edges(self) -> list[tuple[int, int]]:
        return [
            (min(v, self.parent[v]), max(v, self.parent[v]))
            for v in range(self.n)
            if v != self.root
        ]

    def underlying_graph(self) -> Graph:
        return Graph(self.n, self.edges())

    def reroot(self, new_root: int) -> "RootedTree":
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges():
            adj[u].append(v)
            adj[v].append(u)
        parent = [new_root] * self.n
        seen = [False] * self.n
        seen[new_root] = True
        queue = deque([new_root])
        while queue:
            v = queue.popleft()
            for u in adj[v]:
                if not seen[u]:
                    seen[u] = True
                    parent[u] = v
                    queue.append(u)
        return RootedTree(parent, new_root)

    # -- canonical forms ---------------------------------------------------

    def canonical_sequence(self) -> tuple[int, ...]:
        """Canonical rooted level sequence (children ordered by subtree
        sequence, descending)."""

        def seq(v: int) -> tuple[int, ...]:
            subs = sorted((seq(c) for c in self.children[v]), reverse=True)
            out = [0]
            for s in subs:
                out.extend(x + 1 for x in s)
            return tuple(out)

        return seq(self.root)

    def centroids(self) -> list[int]:
        size = self.subtree_sizes()
        best_val, best = None, []
        for v in range(self.n):
            heaviest = self.n - size[v]
            for c in self.children[v]:
                heaviest = max(heaviest, size[c])
            if best_val is None or heaviest < best_val:
                best_val, best = heaviest, [v]
            elif heaviest == best_val:
                best.append(v)
        return sorted(best)

    def free_canonical_sequence(self) -> tuple[int, ...]:
        """Isomorphism-stable identification of the underlying free tree."""
        return max(self.reroot(c).canonical_sequence() for c in self.centroids())

    # -- serialization -----------------------------------------------------

    def to_parent_string(self) -> str:
        return f"{self.n}; " + " ".join(str(p) for p in self.parent)

    @staticmethod
    def from_parent_string(text: str) -> "RootedTree":
        try:
            head, body = text.strip().split(";")
            n = int(head)
            parent = [int(x) for x in body.split()]
        except ValueError as exc:
            raise ParseError(f"bad parent-array string: {exc}")
        if len(parent) != n:
            raise ParseError(f"expected {n} parents, got {len(parent)}")
        roots = [v for v, p in enumerate(parent) if p == v]
        if len(roots) != 1:
            raise ParseError(f"expected exactly one root, got {roots}")
        return RootedTree(parent, roots[0])

    @staticmethod
    def from_level_sequence(seq: Sequence[int]) -> "RootedTree":
        if not seq or seq[0] != 0:
            raise ContractViolation("level sequence must start at depth 0")
        parent = [0] * len(seq)
        stack = [0]
        for v in range(1, len(seq)):
            d = seq[v]
            if not 1 <= d <= len(stack):
                raise ContractViolation(f"invalid depth {d} at position {v}")
            del stack[d:]
            parent[v] = stack[-1]
            stack.append(v)
        return RootedTree(parent, 0)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RootedTree)
            and self.parent == other.parent
            and self.root == other.root
        )

    def __hash__(self) -> int:
        return hash((self.parent, self.root))

    def __repr__(self) -> str:
        return f"RootedTree(n={self.n}, root={self.root})"


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

def _rooted_level_sequences(n: int) -> Iterator[list[int]]:
    # Beyer-Hedetniemi successor walk over canonical sequences, lex-decreasing
    seq = list(range(n))
    while True:
        yield seq
        p = max((i for i in range(n) if seq[i] >= 2), default=-1)
        if p < 0:
            return
        q = max(i for i in range(p) if seq[i] == seq[p] - 1)
        shift = p - q
        seq = seq[:]
        for i in range(p, n):
            seq[i] = seq[i - shift]


def enumerate_trees(n: int) -> Iterator[RootedTree]:
    """Free trees on n vertices, one per isomorphism class, rooted at a
    centroid.  Counts match 1,1,1,2,3,6,11,23,47,106,... (n = 1,2,3,...)."""
    if not 1 <= n <= 20:
        raise ContractViolation("enumerate_trees supports 1 <= n <= 20")
    if n == 1:
        yield RootedTree([0], 0)
        return
    for seq in _rooted_level_sequences(n):
        tree = RootedTree.from_level_sequence(seq)
        cents = tree.centroids()
        if tree.root not in cents:
            continue
        if tuple(seq) == max(tree.reroot(c).canonical_sequence() for c in cents):
            yield tree


def random_tree(n: int, max_degree: Optional[int] = None, seed: int = 0) -> RootedTree:
    """Seeded random tree by uniform attachment, respecting a degree cap."""
    if n < 1:
        raise ContractViolation("tree must have at least one vertex")
    if max_degree is not None and n > 1 and max_degree < 2 and n > 2:
        raise ContractViolation("max_degree < 2 admits no tree with n > 2")
    rng = random.Random(seed)
    parent = [0] * n
    degree = [0] * n
    for v in range(1, n):
        pool = [
            u
            for u in range(v)
            if max_degree is None or degree[u] < max_degree
        ]
        p = rng.choice(pool)
        parent[v] = p
        degree[p] += 1
        degree[v] += 1
    return RootedTree(parent, 0)


# ---------------------------------------------------------------------------
# piece decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Piece:
    """One component of T - S, rooted at its vertex closest to r(T)."""

    root: int
    vertices: tuple[int, ...]
    parent_vertex: int  # the T-parent of ``root``; always a seed


@dataclass(frozen=True)
class Decomposition:
    seeds: tuple[int, ...]
    pieces: tuple[Piece, ...]
    order: tuple[tuple[str, int], ...]  # ("seed", vertex) / ("piece", index)
    beta: Fraction

    def max_piece_order(self) -> int:
        return max((len(p.vertices) for p in self.pieces), default=0)


def decompose_pieces(tree: RootedTree, beta: Fraction) -> Decomposition:
    """Iterative seed extraction: while some vertex keeps a live subtree of
    more than beta*t vertices, pull the deepest such vertex (first in DFS
    post-order) into the seed set and delete its subtree; finally add the
    root.  Pieces are the components of T - S."""
    beta = Fraction(beta)
    if not 0 < beta < 1:
        raise ContractViolation("beta must lie strictly between 0 and 1")
    n, t = tree.n, tree.t
    alive = [True] * n
    seeds: list[int] = []

    def postorder() -> list[int]:
        out, stack = [], [(tree.root, False)]
        while stack:
            v, done = stack.pop()
            if not alive[v]:
                continue
            if done:
                out.append(v)
            else:
                stack.append((v, True))
                stack.extend((c, False) for c in reversed(tree.children[v]))
        return out

    while True:
        order = postorder()
        size = {v: 1 for v in order}
        for v in order:
            p = tree.parent[v]
            if v != tree.root and alive[p]:
                size[p] += size[v]
        chosen = None
        for v in order:  # post-order: first hit has no qualifying descendant
            if size[v] * beta.denominator > beta.numerator * t:
                chosen = v
                break
        if chosen is None:
            break
        seeds.append(chosen)
        stack = [chosen]
        while stack:
            v = stack.pop()
            alive[v] = False
            stack.extend(c for c in tree.children[v] if alive[c])
    if tree.root not in seeds:
        seeds.append(tree.root)
    seed_set = set(seeds)

    pieces: list[Piece] = []
    assigned = [False] * n
    for v in range(n):
        if v in seed_set or assigned[v]:
            continue
        comp = [v]
        assigned[v] = True
        queue = deque([v])
        while queue:
            w = queue.popleft()
            for u in list(tree.children[w]) + [tree.parent[w]]:
                if u != w and u not in seed_set and not assigned[u]:
                    assigned[u] = True
                    comp.append(u)
                    queue.append(u)
        root = next(w for w in comp if tree.parent[w] in seed_set)
        pieces.append(Piece(root, tuple(sorted(comp)), tree.parent[root]))
    pieces.sort(key=lambda p: (-len(p.vertices), p.root))

    depth = tree.depths()
    elements: list[tuple[str, int]] = [("seed", s) for s in seeds]
    elements += [("piece", i) for i in range(len(pieces))]
    def element_depth(e):
        kind, payload = e
        anchor = payload if kind == "seed" else pieces[payload].root
        return (depth[anchor], 0 if kind == "seed" else 1, payload)
    elements.sort(key=element_depth)
    return Decomposition(tuple(seeds), tuple(pieces), tuple(elements), beta)


# ---------------------------------------------------------------------------
# separators
# ---------------------------------------------------------------------------

def half_separator(tree: RootedTree, x: int) -> int:
    """The deepest vertex z (in the order induced by rooting at x) whose
    subtree exceeds floor(t/2) vertices.  Every component of T - z then has
    at most floor(t/2) vertices, except possibly the one containing x."""
    if tree.n < 2:
        raise ContractViolation("half_separator needs at least 2 vertices")
    rooted = tree.reroot(x)
    if rooted.children[x] and len(rooted.children[x]) != 1:
        raise ContractViolation(f"vertex {x} is not a leaf")
    t = tree.t
    size = rooted.subtree_sizes()
    half = t // 2
    z = x
    while True:
        nxt = [c for c in rooted.children[z] if size[c] > half]
        if not nxt:
            break
        (z,) = nxt  # at most one child subtree can exceed t/2
    if z == x:
        raise InternalInvariantError("separator walk stalled at the leaf")
    return z


def tree_components_minus(tree: RootedTree, z: int) -> list[tuple[int, tuple[int, ...]]]:
    """Components of T - z as (attachment vertex, sorted vertices), ordered
    by (size desc, min vertex).  The attachment vertex is the neighbor of z."""
    adj: list[list[int]] = [[] for _ in range(tree.n)]
    for u, v in tree.edges():
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * tree.n
    seen[z] = True
    comps = []
    for a in sorted(adj[z]):
        if seen[a]:
            continue
        comp = [a]
        seen[a] = True
        queue = deque([a])
        while queue:
            v = queue.popleft()
            for u in adj[v]:
                if not seen[u]:
                    seen[u] = True
                    comp.append(u)
                    queue.append(u)
        comps.append((a, tuple(sorted(comp))))
    comps.sort(key=lambda c: (-len(c[1]), min(c[1])))
    return comps


# ---------------------------------------------------------------------------
# sequence partitioning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SequencePartition:
    values: tuple[int, ...]
    parts: tuple[tuple[int, ...], ...]  # 2 or 3 index sets covering [m]
    sums: tuple[int, ...]


def _suffix_feasible(values: Sequence[int], cap: int) -> list[int]:
    # feas[i] = bitmask of sums reachable using items i..m-1 (sums <= cap)
    mask = (1 << (cap + 1)) - 1
    feas = [0] * (len(values) + 1)
    feas[len(values)] = 1
    for i in range(len(values) - 1, -1, -1):
        feas[i] = (feas[i + 1] | (feas[i + 1] << values[i])) & mask
    return feas


def _max_subset(indices: Sequence[int], values: Sequence[int], cap: int) -> list[int]:
    """Lexicographically-smallest index subset of maximal sum <= cap."""
    vals = [values[i] for i in indices]
    feas = _suffix_feasible(vals, cap)
    target = feas[0].bit_length() - 1
    chosen, rem = [], target
    for pos, i in enumerate(indices):
        v = vals[pos]
        if v <= rem and (feas[pos + 1] >> (rem - v)) & 1:
            chosen.append(i)
            rem -= v
    if rem != 0:
        raise InternalInvariantError("subset reconstruction failed")
    return chosen


def _validate_sequence(a: Sequence[int], t: int) -> None:
    if t < 1:
        raise ContractViolation("t must be positive")
    cap = (t + 1) // 2
    total = 0
    for i, v in enumerate(a):
        if v < 1:
            raise ContractViolation(f"a[{i}] = {v} is not positive")
        if v > cap:
            raise ContractViolation(f"a[{i}] = {v} exceeds ceil(t/2) = {cap}")
        total += v
    if total > t:
        raise ContractViolation(f"sum {total} exceeds t = {t}")


def partition_three(a: Sequence[int], t: int) -> SequencePartition:
    """Greedy maximal-sum extraction of I1 then I2; the leftover I3 has at
    most one element and the sums satisfy sum(I3) <= sum(I2) <= sum(I1) <=
    ceil(t/2)."""
    _validate_sequence(a, t)
    cap = (t + 1) // 2
    all_idx = list(range(len(a)))
    i1 = _max_subset(all_idx, a, cap)
    rest = [i for i in all_idx if i not in set(i1)]
    i2 = _max_subset(rest, a, cap)
    i3 = [i for i in rest if i not in set(i2)]
    s1, s2, s3 = (sum(a[i] for i in part) for part in (i1, i2, i3))
    if not (s3 <= s2 <= s1 <= cap):
        raise InternalInvariantError(f"sum ordering violated: {s1},{s2},{s3}")
    if len(i3) > 1:
        raise InternalInvariantError("leftover part has more than one element")
    return SequencePartition(tuple(a), (tuple(i1), tuple(i2), tuple(i3)), (s1, s2, s3))


def partition_two(a: Sequence[int], t: int) -> SequencePartition:
    """Two parts with sum(J2) <= sum(J1) <= 2t/3, derived from
    :func:`partition_three` (J1 is I1 or I2+I3, whichever sums larger)."""
    if t < 2:
        raise ContractViolation("partition_two requires t >= 2")
    p3 = partition_three(a, t)
    (i1, i2, i3), (s1, s2, s3) = p3.parts, p3.sums
    if not i3:
        j1, j2, t1, t2 = i1, i2, s1, s2
    elif s2 + s3 > s1:
        j1, j2, t1, t2 = tuple(sorted(i2 + i3)), i1, s2 + s3, s1
    else:
        j1, j2, t1, t2 = i1, tuple(sorted(i2 + i3)), s1, s2 + s3
    if 3 * t1 > 2 * t:
        raise InternalInvariantError(f"sum(J1) = {t1} exceeds 2t/3 with t = {t}")
    return SequencePartition(tuple(a), (j1, j2), (t1, t2))


# ---------------------------------------------------------------------------
# cut colorings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CutColoring:
    """Cutvertex z plus a proper 2-coloring of T - z; class 0 is the larger."""

    z: int
    color: dict[int, int]
    sizes: tuple[int, int]
    tree: RootedTree

    @property
    def sigma(self) -> int:
        return self.sizes[0] - self.sizes[1]

    def check_proper(self) -> bool:
        for u, v in self.tree.edges():
            if u != self.z and v != self.z and self.color[u] == self.color[v]:
                return False
        return True


def imbalance(coloring: CutColoring) -> int:
    return coloring.sigma


def tree_bipartition_sizes(tree: RootedTree) -> tuple[int, int]:
    """Class sizes (k1 >= k2) of the unique proper 2-coloring."""
    d = tree.depths()
    even = sum(1 for v in range(tree.n) if d[v] % 2 == 0)
    return max(even, tree.n - even), min(even, tree.n - even)


def _component_classes(
    tree: RootedTree, comps: list[tuple[int, tuple[int, ...]]]
) -> list[tuple[list[int], list[int]]]:
    """Per-component (larger class, smaller class) of the canonical coloring,
    by parity of distance from the component's attachment vertex."""
    adj: list[list[int]] = [[] for _ in range(tree.n)]
    for u, v in tree.edges():
        adj[u].append(v)
        adj[v].append(u)
    out = []
    for a, verts in comps:
        vset = set(verts)
        par = {a: 0}
        queue = deque([a])
        while queue:
            v = queue.popleft()
            for u in adj[v]:
                if u in vset and u not in par:
                    par[u] = 1 - par[v]
                    queue.append(u)
        even = sorted(v for v in verts if par[v] == 0)
        odd = sorted(v for v in verts if par[v] == 1)
        if len(odd) > len(even):
            even, odd = odd, even
        out.append((even, odd))
    return out


def _forest_coloring(
    groups: list[tuple[list[int], list[int]]]
) -> tuple[set[int], set[int]]:
    """Color a forest given per-component (big, small) classes: big classes
    take color 0; if that leaves color 1 empty on a multi-component forest
    (all singletons), half the components are flipped so both colors appear."""
    c0 = set()
    c1 = set()
    for big, small in groups:
        c0.update(big)
        c1.update(small)
    if not c1 and len(groups) >= 2:
        flip = len(groups) // 2
        for big, _ in groups[len(groups) - flip :]:
            c0.difference_update(big)
            c1.update(big)
    return c0, c1


def cut_coloring(tree: RootedTree) -> CutColoring:
    """Cutvertex from the half separator plus the constructive coloring with
    4|c0| <= 3t-1 and 2|c1| <= t.

    The single-edge tree (t = 1) is the documented exception: its unique
    outcome (1, 0) cannot satisfy 4|c0| <= 3t-1.
    """
    if tree.n < 2:
        raise ContractViolation("cut_coloring needs at least 2 vertices")
    t = tree.t
    x = min(tree.leaves())
    z = half_separator(tree, x)
    comps = tree_components_minus(tree, z)
    classes = _component_classes(tree, comps)
    part = partition_three([len(c[1]) for c in comps], t)
    groups = [[classes[i] for i in idxs] for idxs in part.parts]
    colorings = [_forest_coloring(g) for g in groups]
    (c01, c11), (c02, c12), (c03, c13) = colorings
    f1 = sum(len(b) + len(s) for b, s in groups[0])
    if 4 * len(c01) >= 3 * f1 - 1:
        c0 = c01 | c12 | c13
        c1 = c11 | c02 | c03
    else:
        c0 = c01 | c12 | c03
        c1 = c11 | c02 | c13
    if len(c1) > len(c0):
        c0, c1 = c1, c0
    color = {v: 0 for v in c0}
    color.update({v: 1 for v in c1})
    result = CutColoring(z, color, (len(c0), len(c1)), tree)
    if t >= 2 and (4 * len(c0) > 3 * t - 1 or 2 * len(c1) > t):
        raise InternalInvariantError(
            f"cut coloring bounds violated: sizes {result.sizes}, t={t}"
        )
    return result


def balanced_cut_coloring(tree: RootedTree) -> CutColoring:
    """Cutvertex and coloring minimizing the heavier class over all choices
    of cutvertex and per-component color flips; the result always satisfies
    3|c0| <= 2t and 2|c1| <= t (t >= 2).

    Candidate cutvertices are scanned half-separator first, then by id; per
    cutvertex the reachable class sizes come from a subset-sum over component
    imbalances.  t = 1 returns the trivial (1, 0) coloring.
    """
    if tree.n < 2:
        raise ContractViolation("balanced_cut_coloring needs at least 2 vertices")
    t = tree.t
    zs = [half_separator(tree, min(tree.leaves()))]
    zs += [v for v in range(tree.n) if v != zs[0]]

    best: Optional[tuple[int, int, int]] = None  # (c0, z-order index, c0-sum v)
    best_data = None
    for zi, z in enumerate(zs):
        comps = tree_components_minus(tree, z)
        classes = _component_classes(tree, comps)
        base = sum(len(s) for _, s in classes)
        sigmas = [len(b) - len(s) for b, s in classes]
        reach = 1
        for s in sigmas:
            reach |= reach << s
        v = reach.bit_length() - 1
        cand = None
        while v >= 0:
            if (reach >> v) & 1:
                heavy = max(base + v, t - base - v)
                if cand is None or heavy < cand[0]:
                    cand = (heavy, v)
            v -= 1
        if cand is None:
            continue
        heavy, v = cand
        if best is None or heavy < best[0]:
            best = (heavy, zi, v)
            best_data = (z, comps, classes, base, sigmas, v)
            if 2 * heavy <= t + 1:
                break  # cannot do better than ceil(t/2)
    assert best_data is not None
    z, comps, classes, base, sigmas, v = best_data

    # reconstruct which components send their big class to color 0
    feas = _suffix_feasible(sigmas, t)
    chosen, rem = set(), v
    for i, s in enumerate(sigmas):
        if s <= rem and (feas[i + 1] >> (rem - s)) & 1:
            chosen.add(i)
            rem -= s
    c0: set[int] = set()
    c1: set[int] = set()
    for i, (big, small) in enumerate(classes):
        if i in chosen:
            c0.update(big)
            c1.update(small)
        else:
            c0.update(small)
            c1.update(big)
    if len(c1) > len(c0):
        c0, c1 = c1, c0
    color = {w: 0 for w in c0}
    color.update({w: 1 for w in c1})
    result = CutColoring(z, color, (len(c0), len(c1)), tree)
    if t >= 2 and (3 * result.sizes[0] > 2 * t or 2 * result.sizes[1] > t):
        raise InternalInvariantError(
            f"balanced coloring bounds violated: sizes {result.sizes}, t={t}"
        )
    return result
