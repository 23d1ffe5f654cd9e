# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled search kernels: behavioral twin of ``treefit._kernel_py``.

Same inputs, same candidate order, same prunes, same node counts.  Bitmasks
are uint64 word arrays instead of Python integers.
"""

from libc.stdlib cimport calloc, free
from libc.string cimport memset

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctz(unsigned int) nogil

BACKEND = "compiled"

FOUND = 0
NOT_FOUND = 1
BUDGET_EXCEEDED = 2

cdef enum:
    C_FOUND = 0
    C_NOT_FOUND = 1
    C_BUDGET = 2

ctypedef unsigned long long u64


cdef inline bint _rows_equal(u64 *a, u64 *b, int W) noexcept nogil:
    cdef int i
    for i in range(W):
        if a[i] != b[i]:
            return 0
    return 1


cdef bint _twin_rows(u64 *av, u64 *aw, int v, int w, int W) noexcept nogil:
    # open twins: identical rows; closed twins: rows equal after removing
    # the mutual adjacency bits
    cdef int i
    cdef u64 xa, xb
    if _rows_equal(av, aw, W):
        return 1
    if not (av[w >> 6] >> (w & 63)) & 1:
        return 0
    for i in range(W):
        xa = av[i]
        xb = aw[i]
        if i == (w >> 6):
            xa ^= (<u64>1) << (w & 63)
        if i == (v >> 6):
            xb ^= (<u64>1) << (v & 63)
        if xa != xb:
            return 0
    return 1


def oracle_search(
    int hn,
    hadj,
    hdeg,
    comp_id,
    side,
    int ncomp,
    int pn,
    parent_pos,
    children_pos,
    pdeg,
    sib_prev,
    sub_even,
    sub_odd,
    long long budget,
):
    """See ``treefit._kernel_py.oracle_search``; identical contract."""
    if pn > hn:
        return NOT_FOUND, None, 0

    cdef int W = (hn + 63) >> 6
    cdef int i, j, v, w, p, q, c
    cdef long long nodes = 0

    cdef u64 *adj = <u64 *> calloc(<size_t> hn * W, sizeof(u64))
    cdef u64 *free_mask = <u64 *> calloc(W, sizeof(u64))
    cdef u64 *rem = <u64 *> calloc(<size_t> pn * W, sizeof(u64))
    cdef u64 *supports = <u64 *> calloc(<size_t> pn * W, sizeof(u64))
    cdef int *sup_need = <int *> calloc(pn, sizeof(int))
    cdef int *c_hdeg = <int *> calloc(hn, sizeof(int))
    cdef int *c_comp = <int *> calloc(hn, sizeof(int))
    cdef int *c_side = <int *> calloc(hn, sizeof(int))
    cdef int *c_parent = <int *> calloc(pn, sizeof(int))
    cdef int *c_pdeg = <int *> calloc(pn, sizeof(int))
    cdef int *c_sib = <int *> calloc(pn, sizeof(int))
    cdef int *c_even = <int *> calloc(pn, sizeof(int))
    cdef int *c_odd = <int *> calloc(pn, sizeof(int))
    cdef int *child_start = <int *> calloc(pn + 1, sizeof(int))
    cdef int *child_list = <int *> calloc(pn if pn > 1 else 1, sizeof(int))
    cdef int *assign = <int *> calloc(pn, sizeof(int))
    cdef int *pending = <int *> calloc(pn, sizeof(int))
    cdef int *tried = <int *> calloc(<size_t> pn * hn, sizeof(int))
    cdef int *tried_cnt = <int *> calloc(pn, sizeof(int))
    cdef int *free_tot = <int *> calloc(ncomp, sizeof(int))
    cdef int *dem_tot = <int *> calloc(ncomp, sizeof(int))
    cdef int *free_side = <int *> calloc(2 * ncomp, sizeof(int))
    cdef int *dem_side = <int *> calloc(2 * ncomp, sizeof(int))

    cdef object py_mask
    cdef u64 word

    try:
        for v in range(hn):
            py_mask = hadj[v]
            for i in range(W):
                adj[v * W + i] = <u64> ((py_mask >> (64 * i)) & 0xFFFFFFFFFFFFFFFF)
            c_hdeg[v] = hdeg[v]
            c_comp[v] = comp_id[v]
            c_side[v] = side[v]
            free_tot[c_comp[v]] += 1
            if c_side[v] >= 0:
                free_side[2 * c_comp[v] + c_side[v]] += 1
        for i in range(W):
            free_mask[i] = 0
        for v in range(hn):
            free_mask[v >> 6] |= (<u64>1) << (v & 63)
        j = 0
        for p in range(pn):
            c_parent[p] = parent_pos[p]
            c_pdeg[p] = pdeg[p]
            c_sib[p] = sib_prev[p]
            c_even[p] = sub_even[p]
            c_odd[p] = sub_odd[p]
            assign[p] = -1
            child_start[p] = j
            for q in children_pos[p]:
                child_list[j] = q
                j += 1
        child_start[pn] = j

        result = _search(
            hn, W, pn, ncomp, budget, adj, free_mask, rem, supports, sup_need,
            c_hdeg, c_comp, c_side, c_parent, c_pdeg, c_sib, c_even, c_odd,
            child_start, child_list, assign, pending, tried, tried_cnt,
            free_tot, dem_tot, free_side, dem_side, &nodes,
        )
        if result == C_FOUND:
            out = [assign[p] for p in range(pn)]
            return FOUND, out, nodes
        if result == C_NOT_FOUND:
            return NOT_FOUND, None, nodes
        return BUDGET_EXCEEDED, None, nodes
    finally:
        free(adj); free(free_mask); free(rem); free(supports); free(sup_need)
        free(c_hdeg); free(c_comp); free(c_side); free(c_parent); free(c_pdeg)
        free(c_sib); free(c_even); free(c_odd); free(child_start); free(child_list)
        free(assign); free(pending); free(tried); free(tried_cnt)
        free(free_tot); free(dem_tot); free(free_side); free(dem_side)


cdef int _search(
    int hn, int W, int pn, int ncomp, long long budget,
    u64 *adj, u64 *free_mask, u64 *rem, u64 *supports, int *sup_need,
    int *hdeg, int *comp_id, int *side, int *parent_pos, int *pdeg,
    int *sib_prev, int *sub_even, int *sub_odd,
    int *child_start, int *child_list, int *assign, int *pending,
    int *tried, int *tried_cnt, int *free_tot, int *dem_tot,
    int *free_side, int *dem_side, long long *nodes_out,
) noexcept nogil:
    cdef int p = 0
    cdef int i, v, w, q, cv, cw, sv, sw, r, nsup, need, pc
    cdef long long nodes = 0
    cdef u64 word
    cdef bint advanced, ok, is_twin

    _init_candidates(0, W, adj, free_mask, rem, sib_prev, assign, parent_pos)
    tried_cnt[0] = 0

    while True:
        advanced = 0
        while True:
            # pop lowest candidate bit at depth p
            v = -1
            for i in range(W):
                word = rem[p * W + i]
                if word:
                    v = (i << 6) + __builtin_ctzll(word)
                    rem[p * W + i] = word & (word - 1)
                    break
            if v < 0:
                break
            if hdeg[v] < pdeg[p]:
                continue
            is_twin = 0
            for i in range(tried_cnt[p]):
                w = tried[p * hn + i]
                if _twin_rows(adj + v * W, adj + w * W, v, w, W):
                    is_twin = 1
                    break
            if is_twin:
                continue
            tried[p * hn + tried_cnt[p]] = v
            tried_cnt[p] += 1
            nodes += 1
            if nodes > budget:
                nodes_out[0] = nodes
                return C_BUDGET

            # apply assignment p -> v
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
            free_mask[v >> 6] &= ~((<u64>1) << (v & 63))
            free_tot[cv] -= 1
            if sv >= 0:
                free_side[2 * cv + sv] -= 1
            for i in range(child_start[p], child_start[p + 1]):
                r = child_list[i]
                if sv >= 0:
                    dem_side[2 * cv + 1 - sv] += sub_even[r]
                    dem_side[2 * cv + sv] += sub_odd[r]
                dem_tot[cv] += sub_even[r] + sub_odd[r]
            pending[p] = child_start[p + 1] - child_start[p]

            ok = _comp_ok(cv, free_tot, dem_tot, free_side, dem_side)
            if ok and cw >= 0 and cw != cv:
                ok = _comp_ok(cw, free_tot, dem_tot, free_side, dem_side)
            if ok:
                ok = _hall_ok(p, hn, W, adj, free_mask, assign, pending,
                              supports, sup_need)
            if ok:
                if p + 1 == pn:
                    nodes_out[0] = nodes
                    return C_FOUND
                p += 1
                _init_candidates(p, W, adj, free_mask, rem, sib_prev, assign,
                                 parent_pos)
                tried_cnt[p] = 0
                advanced = 1
                break
            _undo(p, W, adj, free_mask, assign, pending, comp_id, side,
                  sub_even, sub_odd, child_start, child_list, parent_pos,
                  free_tot, dem_tot, free_side, dem_side)
        if advanced:
            continue
        if p == 0:
            nodes_out[0] = nodes
            return C_NOT_FOUND
        p -= 1
        _undo(p, W, adj, free_mask, assign, pending, comp_id, side,
              sub_even, sub_odd, child_start, child_list, parent_pos,
              free_tot, dem_tot, free_side, dem_side)


cdef inline void _init_candidates(
    int p, int W, u64 *adj, u64 *free_mask, u64 *rem,
    int *sib_prev, int *assign, int *parent_pos,
) noexcept nogil:
    cdef int i, sp, lo
    if p == 0:
        for i in range(W):
            rem[i] = free_mask[i]
        return
    for i in range(W):
        rem[p * W + i] = adj[assign[parent_pos[p]] * W + i] & free_mask[i]
    sp = sib_prev[p]
    if sp >= 0:
        lo = assign[sp]  # keep only images strictly above the sibling's
        for i in range(W):
            if i < (lo >> 6):
                rem[p * W + i] = 0
            elif i == (lo >> 6):
                if (lo & 63) == 63:
                    rem[p * W + i] = 0
                else:
                    rem[p * W + i] &= ~((((<u64>1) << ((lo & 63) + 1)) - 1))


cdef inline bint _comp_ok(int c, int *free_tot, int *dem_tot,
                          int *free_side, int *dem_side) noexcept nogil:
    if dem_tot[c] > free_tot[c]:
        return 0
    if dem_side[2 * c] > free_side[2 * c]:
        return 0
    if dem_side[2 * c + 1] > free_side[2 * c + 1]:
        return 0
    return 1


cdef bint _hall_ok(int pos, int hn, int W, u64 *adj, u64 *free_mask,
                   int *assign, int *pending, u64 *supports, int *sup_need) noexcept nogil:
    # group pending-children demands by identical free-support mask
    cdef int nsup = 0
    cdef int q, i, j, need, cnt
    cdef bint merged
    for q in range(pos + 1):
        if pending[q] > 0:
            for i in range(W):
                supports[nsup * W + i] = adj[assign[q] * W + i] & free_mask[i]
            sup_need[nsup] = pending[q]
            nsup += 1
    for i in range(nsup):
        if sup_need[i] == 0:
            continue
        need = sup_need[i]
        for j in range(i + 1, nsup):
            if sup_need[j] > 0 and _rows_equal(supports + i * W, supports + j * W, W):
                need += sup_need[j]
                sup_need[j] = 0
        cnt = 0
        for j in range(W):
            cnt += __builtin_popcountll(supports[i * W + j])
        if cnt < need:
            return 0
    return 1


cdef void _undo(
    int p, int W, u64 *adj, u64 *free_mask, int *assign, int *pending,
    int *comp_id, int *side, int *sub_even, int *sub_odd,
    int *child_start, int *child_list, int *parent_pos,
    int *free_tot, int *dem_tot, int *free_side, int *dem_side,
) noexcept nogil:
    cdef int v = assign[p]
    cdef int cv = comp_id[v]
    cdef int sv = side[v]
    cdef int i, r, w, cw, sw
    for i in range(child_start[p], child_start[p + 1]):
        r = child_list[i]
        if sv >= 0:
            dem_side[2 * cv + 1 - sv] -= sub_even[r]
            dem_side[2 * cv + sv] -= sub_odd[r]
        dem_tot[cv] -= sub_even[r] + sub_odd[r]
    pending[p] = 0
    free_tot[cv] += 1
    if sv >= 0:
        free_side[2 * cv + sv] += 1
    free_mask[v >> 6] |= (<u64>1) << (v & 63)
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


def max_edge_triangle_packing(int n, masks):
    """Bottom-up twin of the pure DP; identical values on reachable masks."""
    if n > 24:
        raise ValueError("packing DP supports n <= 24")
    cdef unsigned int full = (1 << n) - 1 if n else 0
    dp_obj = bytearray(1 << n)
    cdef unsigned char[::1] dp = dp_obj
    cdef unsigned int *cmasks = <unsigned int *> calloc(n if n else 1, sizeof(unsigned int))
    cdef unsigned int mask, rest, nb, m, mm, lu, lw
    cdef int v, u, best, cand
    try:
        for v in range(n):
            cmasks[v] = masks[v]
        dp[0] = 0
        for mask in range(1, full + 1):
            v = __builtin_ctz(mask)
            rest = mask ^ ((<unsigned int>1) << v)
            best = dp[rest]
            nb = cmasks[v] & rest
            m = nb
            while m:
                lu = m & (-m)
                m ^= lu
                cand = 2 + dp[rest ^ lu]
                if cand > best:
                    best = cand
                u = __builtin_ctz(lu)
                mm = nb & cmasks[u]
                mm &= ~((lu << 1) - 1)
                while mm:
                    lw = mm & (-mm)
                    mm ^= lw
                    cand = 3 + dp[rest ^ lu ^ lw]
                    if cand > best:
                        best = cand
            dp[mask] = best
        return dp_obj
    finally:
        free(cmasks)
