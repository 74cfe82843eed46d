"""Compiled inner loops for the accelerator and the baselines.

All tie-breaking is "smaller distance first, then smaller centroid id", and
every pruning test carries a relative slack of ``SLACK`` so that rounding in
the triangle inequality can only make a test more conservative.

Counter layout of the ``stats`` array::

    0 distance evaluations involving a centroid or a centroid-node pivot
    1 points assigned through whole-node pruning
    2 successful inter-bound tests (node or point level)
    3 centroid-tree nodes skipped by the kNN search
    4 kNN searches started
    5 points settled by the gap test on their own ball inside a leaf
"""
import math

import numpy as np
from numba import njit

SLACK = 1e-12

DIST = 0
BATCH = 1
INTERBOUND = 2
KNN_PRUNE = 3
KNN_CALLS = 4
POINT_GAP = 5
N_STATS = 6


@njit(cache=True, inline="always")
def _dist(a, b):
    s = 0.0
    for c in range(a.shape[0]):
        diff = a[c] - b[c]
        s += diff * diff
    return math.sqrt(s)


@njit(cache=True, inline="always")
def _inside_half(x, bound):
    # x < bound / 2, with slack; an infinite bound always passes
    if bound == np.inf:
        return True
    return x + SLACK * (x + bound) < 0.5 * bound


@njit(cache=True, inline="always")
def _before(d, j, dref, jref):
    # (d, j) sorts before (dref, jref); jref < 0 is the ub sentinel, which only
    # admits strictly smaller distances.
    if d < dref:
        return True
    return d == dref and jref >= 0 and j < jref


@njit(cache=True, inline="always")
def _offer(kk, d, j, out_id, out_d):
    last = kk - 1
    if not _before(d, j, out_d[last], out_id[last]):
        return
    if kk == 2 and _before(d, j, out_d[0], out_id[0]):
        out_d[1] = out_d[0]
        out_id[1] = out_id[0]
        out_d[0] = d
        out_id[0] = j
    else:
        out_d[last] = d
        out_id[last] = j


@njit(cache=True)
def knn(kk, q, C, order, piv, rad, left, right, start, end, ub,
        out_id, out_d, st_node, st_lb, stats):
    """Fill ``out_id/out_d`` with the ``kk`` nearest centroids closer than ``ub``.

    Unfilled slots keep distance ``ub`` and id ``-1``.  The centroid tree is
    searched depth first, nearer child first; a child is skipped when the
    lower bound ``||q - pivot|| - radius`` exceeds the current ``kk``-th
    distance.
    """
    for s in range(kk):
        out_d[s] = ub
        out_id[s] = -1
    st_node[0] = 0
    st_lb[0] = -np.inf
    sp = 1
    while sp > 0:
        sp -= 1
        node = st_node[sp]
        if st_lb[sp] > out_d[kk - 1]:
            stats[KNN_PRUNE] += 1
            continue
        if left[node] < 0:
            for t in range(start[node], end[node]):
                j = order[t]
                d = _dist(q, C[j])
                stats[DIST] += 1
                _offer(kk, d, j, out_id, out_d)
            continue
        lc = left[node]
        rc = right[node]
        dl = _dist(q, piv[lc])
        dr = _dist(q, piv[rc])
        stats[DIST] += 2
        lbl = dl - rad[lc] - SLACK * (dl + rad[lc])
        lbr = dr - rad[rc] - SLACK * (dr + rad[rc])
        bound = out_d[kk - 1]
        if lbl <= lbr:
            first, lbf, second, lbs = lc, lbl, rc, lbr
        else:
            first, lbf, second, lbs = rc, lbr, lc, lbl
        if lbs > bound:
            stats[KNN_PRUNE] += 1
        else:
            st_node[sp] = second
            st_lb[sp] = lbs
            sp += 1
        if lbf > bound:
            stats[KNN_PRUNE] += 1
        else:
            st_node[sp] = first
            st_lb[sp] = lbf
            sp += 1


@njit(cache=True)
def scan(kk, q, C, out_id, out_d, stats):
    """Linear-scan counterpart of :func:`knn` with an infinite bound."""
    for s in range(kk):
        out_d[s] = np.inf
        out_id[s] = -1
    for j in range(C.shape[0]):
        d = _dist(q, C[j])
        _offer(kk, d, j, out_id, out_d)
    stats[DIST] += C.shape[0]


@njit(cache=True)
def inter_bounds_knn(C, order, piv, rad, left, right, start, end,
                     cb, drifts, first, stats):
    """Distance from every centroid to its nearest other centroid.

    From the second iteration on, each 2-NN search is seeded with
    ``cb[j] + drift[j] + max(drift)`` from the previous iteration.
    """
    k = C.shape[0]
    if k == 1:
        cb[0] = np.inf
        return
    max_drift = 0.0
    for j in range(k):
        if drifts[j] > max_drift:
            max_drift = drifts[j]
    out_id = np.empty(2, dtype=np.int64)
    out_d = np.empty(2)
    st_node = np.empty(len(rad) + 2, dtype=np.int64)
    st_lb = np.empty(len(rad) + 2)
    for j in range(k):
        if first:
            ub = np.inf
        else:
            ub = (cb[j] + drifts[j] + max_drift) * (1.0 + SLACK)
        if ub <= 0.0:
            cb[j] = 0.0
            continue
        stats[KNN_CALLS] += 1
        knn(2, C[j], C, order, piv, rad, left, right, start, end, ub,
            out_id, out_d, st_node, st_lb, stats)
        cb[j] = out_d[1]


@njit(cache=True)
def inter_bounds_scan(C, cb, stats):
    k = C.shape[0]
    for j in range(k):
        best = np.inf
        for o in range(k):
            if o == j:
                continue
            d = _dist(C[j], C[o])
            if d < best:
                best = d
        cb[j] = best
    stats[DIST] += k * (k - 1)


@njit(cache=True)
def _node_sum(X, order, piv, left, start, end, node, out):
    cnt = end[node] - start[node]
    if left[node] < 0:
        for c in range(X.shape[1]):
            out[c] = 0.0
        for t in range(start[node], end[node]):
            i = order[t]
            for c in range(X.shape[1]):
                out[c] += X[i, c]
    else:
        for c in range(X.shape[1]):
            out[c] = piv[node, c] * cnt


@njit(cache=True)
def move_subtree(root, target, X, order, piv, left, right, start, end,
                 node_label, point_label, sums, counts, stack, tmp):
    """Reassign every point under ``root`` to ``target``, updating sum vectors.

    A labelled node moves as a whole; unlabelled nodes are opened until
    labelled nodes or individual points are reached.
    """
    stack[0] = root
    sp = 1
    d = X.shape[1]
    while sp > 0:
        sp -= 1
        x = stack[sp]
        lx = node_label[x]
        if lx >= 0:
            if lx != target:
                cnt = end[x] - start[x]
                _node_sum(X, order, piv, left, start, end, x, tmp)
                for c in range(d):
                    sums[lx, c] -= tmp[c]
                    sums[target, c] += tmp[c]
                counts[lx] -= cnt
                counts[target] += cnt
        elif left[x] < 0:
            for t in range(start[x], end[x]):
                i = order[t]
                a = point_label[i]
                if a != target:
                    for c in range(d):
                        if a >= 0:
                            sums[a, c] -= X[i, c]
                        sums[target, c] += X[i, c]
                    if a >= 0:
                        counts[a] -= 1
                    counts[target] += 1
                    point_label[i] = target
        else:
            stack[sp] = left[x]
            stack[sp + 1] = right[x]
            sp += 2
        node_label[x] = target


@njit(cache=True)
def assign(X, order, piv, rad, left, right, start, end,
           C, c_order, c_piv, c_rad, c_left, c_right, c_start, c_end,
           cb, node_label, point_label, sums, counts,
           use_inb, use_knn, root, root_ub, stats):
    """Assign every point under ``root`` to its nearest centroid.

    ``node_label[N] >= 0`` means all points under ``N`` sit in that cluster;
    labels of the descendants of a labelled node may be stale and are pushed
    down whenever the traversal has to open the node.
    """
    m = len(rad)
    st_node = np.empty(3 * m + 3, dtype=np.int64)
    st_ub = np.empty(3 * m + 3)
    st_post = np.empty(3 * m + 3, dtype=np.bool_)
    mv_stack = np.empty(m + 2, dtype=np.int64)
    tmp = np.empty(X.shape[1])
    k_st_node = np.empty(len(c_rad) + 2, dtype=np.int64)
    k_st_lb = np.empty(len(c_rad) + 2)
    ids = np.empty(2, dtype=np.int64)
    ds = np.empty(2)

    st_node[0] = root
    st_ub[0] = root_ub
    st_post[0] = False
    sp = 1
    while sp > 0:
        sp -= 1
        node = st_node[sp]
        ub = st_ub[sp]
        if st_post[sp]:
            ll = node_label[left[node]]
            rl = node_label[right[node]]
            node_label[node] = ll if ll == rl else -1
            continue

        cnt = end[node] - start[node]
        r = rad[node]
        lab = node_label[node]
        if use_inb and lab >= 0:
            dd = _dist(piv[node], C[lab])
            stats[DIST] += 1
            if _inside_half(dd + r, cb[lab]):
                stats[INTERBOUND] += 1
                stats[BATCH] += cnt
                continue

        if use_knn:
            stats[KNN_CALLS] += 1
            knn(2, piv[node], C, c_order, c_piv, c_rad, c_left, c_right,
                c_start, c_end, ub, ids, ds, k_st_node, k_st_lb, stats)
            if ids[0] < 0:
                stats[KNN_CALLS] += 1
                knn(2, piv[node], C, c_order, c_piv, c_rad, c_left, c_right,
                    c_start, c_end, np.inf, ids, ds, k_st_node, k_st_lb, stats)
        else:
            scan(2, piv[node], C, ids, ds, stats)
        n1 = ids[0]
        d1 = ds[0]
        d2 = ds[1]
        if d2 == np.inf or d2 - d1 > 2.0 * r + SLACK * (d1 + d2 + 2.0 * r):
            move_subtree(node, n1, X, order, piv, left, right, start, end,
                         node_label, point_label, sums, counts, mv_stack, tmp)
            stats[BATCH] += cnt
            continue

        if left[node] < 0:
            if lab >= 0:
                for t in range(start[node], end[node]):
                    point_label[order[t]] = lab
            common = -2
            for t in range(start[node], end[node]):
                i = order[t]
                a = point_label[i]
                # the gap test again, on the ball around the pivot that just
                # reaches this point
                rho = _dist(X[i], piv[node])
                if d2 == np.inf or d2 - d1 > 2.0 * rho + SLACK * (d1 + d2 + 2.0 * rho):
                    stats[POINT_GAP] += 1
                    keep = a == n1
                    a_new = n1
                else:
                    keep = False
                    a_new = -1
                if not keep and a_new < 0 and use_inb and a >= 0:
                    dd = _dist(X[i], C[a])
                    stats[DIST] += 1
                    if _inside_half(dd, cb[a]):
                        stats[INTERBOUND] += 1
                        keep = True
                if not keep:
                    if a_new >= 0:
                        b = a_new
                    elif use_knn:
                        ub1 = (d1 + rho) * (1.0 + SLACK)
                        stats[KNN_CALLS] += 1
                        knn(1, X[i], C, c_order, c_piv, c_rad, c_left, c_right,
                            c_start, c_end, ub1, ids, ds, k_st_node, k_st_lb, stats)
                        if ids[0] < 0:
                            stats[KNN_CALLS] += 1
                            knn(1, X[i], C, c_order, c_piv, c_rad, c_left, c_right,
                                c_start, c_end, np.inf, ids, ds, k_st_node, k_st_lb, stats)
                        b = ids[0]
                    else:
                        scan(1, X[i], C, ids, ds, stats)
                        b = ids[0]
                    if b != a:
                        for c in range(X.shape[1]):
                            if a >= 0:
                                sums[a, c] -= X[i, c]
                            sums[b, c] += X[i, c]
                        if a >= 0:
                            counts[a] -= 1
                        counts[b] += 1
                        point_label[i] = b
                        a = b
                if common == -2:
                    common = a
                elif common != a:
                    common = -1
            node_label[node] = common
        else:
            lc = left[node]
            rc = right[node]
            if lab >= 0:
                node_label[lc] = lab
                node_label[rc] = lab
            node_label[node] = -1
            child_ub = (d2 + r) * (1.0 + SLACK)
            st_node[sp] = node
            st_post[sp] = True
            st_ub[sp] = 0.0
            st_node[sp + 1] = rc
            st_post[sp + 1] = False
            st_ub[sp + 1] = child_ub
            st_node[sp + 2] = lc
            st_post[sp + 2] = False
            st_ub[sp + 2] = child_ub
            sp += 3


@njit(cache=True)
def materialize(order, left, right, start, end, node_label, point_label, out):
    """Write the current cluster of every point into ``out``."""
    stack = np.empty(len(left) + 2, dtype=np.int64)
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        x = stack[sp]
        lx = node_label[x]
        if lx >= 0:
            for t in range(start[x], end[x]):
                out[order[t]] = lx
                point_label[order[t]] = lx
        elif left[x] < 0:
            for t in range(start[x], end[x]):
                out[order[t]] = point_label[order[t]]
        else:
            stack[sp] = left[x]
            stack[sp + 1] = right[x]
            sp += 2


@njit(cache=True)
def lloyd_assign(X, C, out, stats):
    n = X.shape[0]
    k = C.shape[0]
    for i in range(n):
        best = np.inf
        bj = 0
        for j in range(k):
            d = _dist(X[i], C[j])
            if d < best:
                best = d
                bj = j
        out[i] = bj
    stats[DIST] += n * k


@njit(cache=True)
def cluster_sums(X, labels, k):
    sums = np.zeros((k, X.shape[1]))
    counts = np.zeros(k, dtype=np.int64)
    for i in range(X.shape[0]):
        a = labels[i]
        counts[a] += 1
        for c in range(X.shape[1]):
            sums[a, c] += X[i, c]
    return sums, counts


@njit(cache=True)
def hamerly_assign(X, C, half_cb, labels, upper, lower, first, stats):
    """One Hamerly pass: a single upper and lower bound per point."""
    n = X.shape[0]
    k = C.shape[0]
    for i in range(n):
        if not first:
            a = labels[i]
            m = max(half_cb[a], lower[i])
            if upper[i] + SLACK * (upper[i] + m) < m:
                stats[INTERBOUND] += 1
                continue
            upper[i] = _dist(X[i], C[a])
            stats[DIST] += 1
            if upper[i] + SLACK * (upper[i] + m) < m:
                stats[INTERBOUND] += 1
                continue
        b1 = 0
        d1 = np.inf
        d2 = np.inf
        for j in range(k):
            d = _dist(X[i], C[j])
            if d < d1:
                d2 = d1
                d1 = d
                b1 = j
            elif d < d2:
                d2 = d
        stats[DIST] += k
        labels[i] = b1
        upper[i] = d1
        lower[i] = d2


@njit(cache=True)
def hamerly_update(labels, upper, lower, drifts):
    max_drift = 0.0
    for j in range(len(drifts)):
        if drifts[j] > max_drift:
            max_drift = drifts[j]
    for i in range(len(labels)):
        upper[i] += drifts[labels[i]]
        lower[i] -= max_drift


@njit(cache=True)
def sse(X, C, labels):
    total = 0.0
    for i in range(X.shape[0]):
        a = labels[i]
        for c in range(X.shape[1]):
            diff = X[i, c] - C[a, c]
            total += diff * diff
    return total
