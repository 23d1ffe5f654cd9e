"""Exact embedding oracle: ground truth behind every derived claim.

``embeds`` runs a complete backtracking search (in the compiled kernel when
available, else the pure-Python twin) and returns Found with a witness,
NotFound only after exhausting the search space, or BudgetExceeded.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Mapping, Optional

from . import _kernel_py
from .errors import ContractViolation
from .graphs import Graph, bipartition, components
from .trees import RootedTree

try:  # compiled twin; optional
    from . import _kernel as _kernel_c  # type: ignore
except ImportError:  # pragma: no cover - depends on build environment
    _kernel_c = None

DEFAULT_BUDGET = 10**8

__all__ = [
    "EmbedResult",
    "embeds",
    "verify_embedding",
    "active_kernel",
    "set_kernel",
    "available_kernels",
]


def _select_backend():
    env = os.environ.get("TREEFIT_KERNEL", "").lower()
    if env in ("py", "python"):
        return _kernel_py
    if env in ("c", "cy", "compiled", "cython"):
        if _kernel_c is None:
            raise RuntimeError("TREEFIT_KERNEL requests the compiled kernel, but it is not built")
        return _kernel_c
    return _kernel_c if _kernel_c is not None else _kernel_py


_backend = _select_backend()


def active_kernel() -> str:
    """Name of the kernel backend in use ("compiled" or "python")."""
    return "compiled" if _backend is not _kernel_py else "python"


def available_kernels() -> list[str]:
    return ["python"] + (["compiled"] if _kernel_c is not None else [])


def set_kernel(name: str) -> None:
    """Switch backends at runtime (used by tests and benchmarks)."""
    global _backend
    if name in ("python", "py"):
        _backend = _kernel_py
    elif name in ("compiled", "c", "cython"):
        if _kernel_c is None:
            raise RuntimeError("compiled kernel is not available")
        _backend = _kernel_c
    else:
        raise ValueError(f"unknown kernel {name!r}")


def packing_dp(n: int, masks):
    """Max edge/triangle packing DP table from the active kernel."""
    return _backend.max_edge_triangle_packing(n, masks)


@dataclass(frozen=True)
class EmbedResult:
    status: str  # "found" | "not_found" | "budget_exceeded"
    embedding: Optional[dict[int, int]]
    nodes: int

    @property
    def found(self) -> bool:
        return self.status == "found"


def verify_embedding(tree: RootedTree, g: Graph, phi: Mapping[int, int]) -> bool:
    """True iff phi is injective on V(T) and maps every tree edge to a host edge."""
    if len(phi) != tree.n:
        return False
    images = set()
    for v in range(tree.n):
        img = phi.get(v)
        if img is None or not (0 <= img < g.n) or img in images:
            return False
        images.add(img)
    for u, v in tree.edges():
        if not g.has_edge(phi[u], phi[v]):
            return False
    return True


def _subtree_shapes(rooted: RootedTree) -> list[int]:
    """Canonical shape id per vertex (equal ids iff isomorphic subtrees)."""
    shape_ids: dict[tuple, int] = {}
    shape = [0] * rooted.n
    for v in reversed(rooted.preorder()):
        key = tuple(sorted(shape[c] for c in rooted.children[v]))
        shape[v] = shape_ids.setdefault(key, len(shape_ids))
    return shape


def pattern_plan(tree: RootedTree):
    """Embedding order and per-position pattern data for the kernel.

    BFS from the smallest centroid; children ordered by decreasing subtree
    size (ties: shape id, then vertex id) so heavy spines fail fast.
    """
    rooted = tree.reroot(tree.centroids()[0])
    size = rooted.subtree_sizes()
    shape = _subtree_shapes(rooted)
    order: list[int] = []
    pos_of = [-1] * rooted.n
    queue = [rooted.root]
    while queue:
        v = queue.pop(0)
        pos_of[v] = len(order)
        order.append(v)
        queue.extend(
            sorted(rooted.children[v], key=lambda c: (-size[c], shape[c], c))
        )
    n = rooted.n
    parent_pos = [-1] * n
    children_pos: list[list[int]] = [[] for _ in range(n)]
    sib_prev = [-1] * n
    for p, v in enumerate(order):
        if v != rooted.root:
            pp = pos_of[rooted.parent[v]]
            parent_pos[p] = pp
            children_pos[pp].append(p)
    for ch in children_pos:
        last_by_shape: dict[int, int] = {}
        for p in ch:
            s = shape[order[p]]
            if s in last_by_shape:
                sib_prev[p] = last_by_shape[s]
            last_by_shape[s] = p
    sub_even = [0] * n
    sub_odd = [0] * n
    for v in reversed(rooted.preorder()):
        sub_even[pos_of[v]] = 1 + sum(sub_odd[pos_of[c]] for c in rooted.children[v])
        sub_odd[pos_of[v]] = sum(sub_even[pos_of[c]] for c in rooted.children[v])
    pdeg = [rooted.degree(order[p]) for p in range(n)]
    return rooted, order, parent_pos, children_pos, pdeg, sib_prev, sub_even, sub_odd


def _host_plan(g: Graph):
    comps = components(g) if g.n else []
    comp_id = [0] * g.n
    side = [-1] * g.n
    for ci, comp in enumerate(comps):
        for v in comp:
            comp_id[v] = ci
        bip = bipartition(g, comp)
        if bip is not None:
            for v in bip.classA:
                side[v] = 0
            for v in bip.classB:
                side[v] = 1
    return comp_id, side, len(comps)


def embeds(tree: RootedTree, g: Graph, budget: int = DEFAULT_BUDGET) -> EmbedResult:
    """Decide whether the tree embeds into the host graph.

    NotFound is only reported after the pruned-but-complete search space is
    exhausted within the node budget.
    """
    if tree.n > g.n:
        raise ContractViolation(f"pattern has {tree.n} vertices, host only {g.n}")
    (
        rooted,
        order,
        parent_pos,
        children_pos,
        pdeg,
        sib_prev,
        sub_even,
        sub_odd,
    ) = pattern_plan(tree)
    comp_id, side, ncomp = _host_plan(g)
    status, assign, nodes = _backend.oracle_search(
        g.n,
        list(g.adjacency_masks()),
        [g.degree(v) for v in range(g.n)],
        comp_id,
        side,
        ncomp,
        tree.n,
        parent_pos,
        children_pos,
        pdeg,
        sib_prev,
        sub_even,
        sub_odd,
        budget,
    )
    if status == _kernel_py.FOUND:
        phi = {order[p]: assign[p] for p in range(tree.n)}
        return EmbedResult("found", phi, nodes)
    if status == _kernel_py.NOT_FOUND:
        return EmbedResult("not_found", None, nodes)
    return EmbedResult("budget_exceeded", None, nodes)
