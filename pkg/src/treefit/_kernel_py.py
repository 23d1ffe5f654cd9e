"""Pure-Python search kernels.

Two hot loops live here: the exact tree-into-graph backtracking search and
the max edge/triangle packing DP.  ``treefit._kernel`` is the compiled twin
with identical semantics; :mod:`treefit.oracle` picks one at import time.

The backtracking search is complete: every prune is a sound refutation
(degree filter, forced-subtree counting per host component and bipartition
class, a grouped Hall condition on pending children, interchangeable-twin
image skipping, and symmetry breaking between isomorphic sibling subtrees),
so NOT_FOUND means no embedding exists.
"""

from __future__ import annotations

BACKEND = "python"

FOUND = 0
NOT_FOUND = 1
BUDGET_EXCEEDED = 2


def _twin_masks(mask_v: int, mask_w: int, v: int, w: int) -> bool:
    # open twins share neighborhoods; closed twins are adjacent and share them
    if mask_v == mask_w:
        return True
    return bool((mask_v >> w) & 1) and (mask_v ^ (1 << w)) == (mask_w ^ (1 << v))


def oracle_search(
    hn,
    hadj,
    hdeg,
    comp_id,
    side,
    ncomp,
    pn,
    parent_pos,
    children_pos,
    pdeg,
    sib_prev,
    sub_even,
    sub_odd,
    budget,
):
    """Backtracking search for an injective homomorphism of the pattern tree
    (given in embedding order) into the host.

    Returns (status, assignment-per-position or None, nodes used).
    """
    if pn > hn:
        return NOT_FOUND, None, 0

    free_mask = (1 << hn) - 1
    free_tot = [0] * ncomp
    free_side = [0] * (2 * ncomp)
    for v in range(hn):
        free_tot[comp_id[v]] += 1
        if side[v] >= 0:
            free_side[2 * comp_id[v] + side[v]] += 1
    dem_tot = [0] * ncomp
    dem_side = [0] * (2 * ncomp)
    pending = [0] * pn
    assign = [-1] * pn
    nodes = 0

    def feasible(c: int) -> bool:
        if dem_tot[c] > free_tot[c]:
            return False
        if dem_side[2 * c] > free_side[2 * c] or dem_side[2 * c + 1] > free_side[2 * c + 1]:
            return False
        return True

    def hall_ok(pos: int) -> bool:
        groups: dict[int, int] = {}
        for q in range(pos + 1):
            pq = pending[q]
            if pq > 0:
                m = hadj[assign[q]] & free_mask
                groups[m] = groups.get(m, 0) + pq
        for m, need in groups.items():
            if m.bit_count() < need:
                return False
        return True

    def apply(p: int, v: int) -> bool:
        nonlocal free_mask
        cv = comp_id[v]
        sv = side[v]
        cw = -1
        if p > 0:
            w = assign[parent_pos[p]]
            cw = comp_id[w]
            sw = side[w]
            if sw >= 0:
                dem_side[2 * cw + 1 - sw] -= sub_even[p]
                dem_side[2 * cw + sw] -= sub_odd[p]
            dem_tot[cw] -= sub_even[p] + sub_odd[p]
            pending[parent_pos[p]] -= 1
        assign[p] = v
        free_mask &= ~(1 << v)
        free_tot[cv] -= 1
        if sv >= 0:
            free_side[2 * cv + sv] -= 1
        for r in children_pos[p]:
            if sv >= 0:
                dem_side[2 * cv + 1 - sv] += sub_even[r]
                dem_side[2 * cv + sv] += sub_odd[r]
            dem_tot[cv] += sub_even[r] + sub_odd[r]
        pending[p] = len(children_pos[p])
        ok = feasible(cv) and (cw < 0 or cw == cv or feasible(cw))
        return ok and hall_ok(p)

    def undo(p: int) -> None:
        nonlocal free_mask
        v = assign[p]
        cv = comp_id[v]
        sv = side[v]
        for r in children_pos[p]:
            if sv >= 0:
                dem_side[2 * cv + 1 - sv] -= sub_even[r]
                dem_side[2 * cv + sv] -= sub_odd[r]
            dem_tot[cv] -= sub_even[r] + sub_odd[r]
        pending[p] = 0
        free_tot[cv] += 1
        if sv >= 0:
            free_side[2 * cv + sv] += 1
        free_mask |= 1 << v
        assign[p] = -1
        if p > 0:
            w = assign[parent_pos[p]]
            cw = comp_id[w]
            sw = side[w]
            if sw >= 0:
                dem_side[2 * cw + 1 - sw] += sub_even[p]
                dem_side[2 * cw + sw] += sub_odd[p]
            dem_tot[cw] += sub_even[p] + sub_odd[p]
            pending[parent_pos[p]] += 1

    # iterative depth-first search; rem[p] holds untried candidate images
    rem = [0] * pn
    tried: list[list[int]] = [[] for _ in range(pn)]

    def init_candidates(p: int) -> None:
        if p == 0:
            m = free_mask
        else:
            m = hadj[assign[parent_pos[p]]] & free_mask
            sp = sib_prev[p]
            if sp >= 0:
                # isomorphic siblings take increasing images
                m &= ~((1 << (assign[sp] + 1)) - 1)
        rem[p] = m
        tried[p] = []

    init_candidates(0)
    p = 0
    while True:
        advanced = False
        while rem[p]:
            low = rem[p] & -rem[p]
            rem[p] ^= low
            v = low.bit_length() - 1
            if hdeg[v] < pdeg[p]:
                continue
            mv = hadj[v]
            if any(_twin_masks(mv, hadj[w], v, w) for w in tried[p]):
                continue
            tried[p].append(v)
            nodes += 1
            if nodes > budget:
                return BUDGET_EXCEEDED, None, nodes
            if apply(p, v):
                if p + 1 == pn:
                    return FOUND, assign[:], nodes
                p += 1
                init_candidates(p)
                advanced = True
                break
            undo(p)
        if advanced:
            continue
        if p == 0:
            return NOT_FOUND, None, nodes
        p -= 1
        undo(p)


def max_edge_triangle_packing(n, masks):
    """dp[mask] = max vertices coverable inside ``mask`` by vertex-disjoint
    edges and triangles.  Returns the dp table (bytearray, 255 = unvisited).

    Top-down over reachable masks; the compiled twin fills the whole table
    bottom-up, which yields identical values wherever both are defined.
    """
    dp = bytearray([255]) * (1 << n)
    dp[0] = 0
    full = (1 << n) - 1

    def solve(mask: int) -> int:
        val = dp[mask]
        if val != 255:
            return val
        low = mask & -mask
        v = low.bit_length() - 1
        rest = mask ^ low
        best = solve(rest)
        nb = masks[v] & rest
        m = nb
        while m:
            lu = m & -m
            m ^= lu
            cand = 2 + solve(rest ^ lu)
            if cand > best:
                best = cand
            u = lu.bit_length() - 1
            mm = nb & masks[u]
            mm &= ~((lu << 1) - 1)  # w > u only
            while mm:
                lw = mm & -mm
                mm ^= lw
                cand = 3 + solve(rest ^ lu ^ lw)
                if cand > best:
                    best = cand
        dp[mask] = best
        return best

    import sys

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, n * n + 1000))
    try:
        solve(full)
    finally:
        sys.setrecursionlimit(old)
    return dp
