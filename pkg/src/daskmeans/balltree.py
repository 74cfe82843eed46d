"""Balanced Ball-tree over points (or centroids) stored as flat arrays.

Every node keeps the exact mean of its covered points as pivot and the
largest pivot-to-point distance as radius.  Leaves own a contiguous slice of
``order``, a permutation of the input row indices, so the tree never copies
coordinates.

The number of leaves is fixed up front.  With ``fill="half"`` (the default)
a tree over ``n`` points gets ``ceil(2n/f)`` leaves of about ``f/2`` points
each, which is the shape the closed-form memory model assumes; with
``fill="full"`` it gets ``ceil(n/f)`` leaves of about ``f`` points.  A node
owning leaves ``[a, b)`` splits its points along the axis of largest spread
at the order statistic that hands ``ceil((b-a)/2)`` leaves to the left
child.  The partition is a deterministic quickselect, so the same input
always yields the same tree.
"""
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ContractViolation, InvalidCapacity
from .spatial import as_points

FILL_MODES = ("half", "full")


@njit(cache=True)
def _select(keys, vals, kth):
    """Partially sort ``keys`` (and ``vals`` alongside) so that positions
    ``< kth`` hold keys no larger than those at positions ``>= kth``."""
    lo = 0
    hi = len(keys) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        a = keys[lo]
        b = keys[mid]
        c = keys[hi]
        if a < b:
            pivot = b if b < c else (c if a < c else a)
        else:
            pivot = a if a < c else (c if b < c else b)
        i = lo
        j = hi
        while i <= j:
            while keys[i] < pivot:
                i += 1
            while keys[j] > pivot:
                j -= 1
            if i <= j:
                tk = keys[i]
                keys[i] = keys[j]
                keys[j] = tk
                tv = vals[i]
                vals[i] = vals[j]
                vals[j] = tv
                i += 1
                j -= 1
        if kth <= j:
            hi = j
        elif kth >= i:
            lo = i
        else:
            break


@njit(cache=True)
def _build_kernel(X, n_leaves):
    n, d = X.shape
    m = 2 * n_leaves - 1
    order = np.arange(n)
    pivots = np.zeros((m, d))
    radii = np.zeros(m)
    left = np.full(m, -1, dtype=np.int64)
    right = np.full(m, -1, dtype=np.int64)
    start = np.zeros(m, dtype=np.int64)
    end = np.zeros(m, dtype=np.int64)
    depth = np.zeros(m, dtype=np.int64)
    leaf_lo = np.zeros(m, dtype=np.int64)
    leaf_hi = np.zeros(m, dtype=np.int64)
    lo_c = np.empty(d)
    hi_c = np.empty(d)

    stack = np.empty(m, dtype=np.int64)
    sp = 1
    stack[0] = 0
    leaf_hi[0] = n_leaves
    depth[0] = 1
    next_id = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        a = leaf_lo[node]
        b = leaf_hi[node]
        lo = (a * n) // n_leaves
        hi = (b * n) // n_leaves
        start[node] = lo
        end[node] = hi
        cnt = hi - lo

        for c in range(d):
            lo_c[c] = np.inf
            hi_c[c] = -np.inf
        for t in range(lo, hi):
            i = order[t]
            for c in range(d):
                v = X[i, c]
                pivots[node, c] += v
                if v < lo_c[c]:
                    lo_c[c] = v
                if v > hi_c[c]:
                    hi_c[c] = v
        for c in range(d):
            pivots[node, c] /= cnt
        rmax = 0.0
        for t in range(lo, hi):
            i = order[t]
            s = 0.0
            for c in range(d):
                diff = X[i, c] - pivots[node, c]
                s += diff * diff
            s = math.sqrt(s)
            if s > rmax:
                rmax = s
        radii[node] = rmax

        if b - a == 1:
            continue

        axis = 0
        best = hi_c[0] - lo_c[0]
        for c in range(1, d):
            spread = hi_c[c] - lo_c[c]
            if spread > best:
                best = spread
                axis = c
        mid = a + (b - a + 1) // 2
        keys = np.empty(cnt)
        for t in range(cnt):
            keys[t] = X[order[lo + t], axis]
        _select(keys, order[lo:hi], (mid * n) // n_leaves - lo)

        lc = next_id
        rc = next_id + 1
        next_id += 2
        leaf_lo[lc] = a
        leaf_hi[lc] = mid
        leaf_lo[rc] = mid
        leaf_hi[rc] = b
        depth[lc] = depth[node] + 1
        depth[rc] = depth[node] + 1
        left[node] = lc
        right[node] = rc
        stack[sp] = rc
        sp += 1
        stack[sp] = lc
        sp += 1
    return order, pivots, radii, left, right, start, end, depth


def leaf_count_for(n, f, fill="half"):
    """Number of leaves a tree over ``n`` points gets for capacity ``f``."""
    if fill == "half":
        return max(1, math.ceil(2 * n / f))
    if fill == "full":
        return max(1, math.ceil(n / f))
    raise ContractViolation(f"unknown fill mode {fill!r}")


@dataclass(frozen=True, eq=False)
class BallTree:
    """Immutable Ball-tree.  Node 0 is the root; ``left == -1`` marks a leaf."""

    data: np.ndarray
    f: int
    order: np.ndarray
    pivots: np.ndarray
    radii: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    end: np.ndarray
    depths: np.ndarray

    root = 0

    @property
    def node_count(self):
        return len(self.radii)

    @property
    def leaves(self):
        return (self.node_count + 1) // 2

    @property
    def internals(self):
        return self.node_count - self.leaves

    @property
    def depth(self):
        return int(self.depths.max())

    @property
    def node_counts(self):
        return {"leaves": self.leaves, "internals": self.internals, "depth": self.depth}

    @property
    def n(self):
        return len(self.order)

    def counts(self):
        return self.end - self.start

    def is_leaf(self, node):
        return self.left[node] < 0

    def members(self, node):
        """Row indices of the points covered by ``node``."""
        return self.order[self.start[node]:self.end[node]]

    def leaf_nodes(self):
        return np.flatnonzero(self.left < 0)

    def preorder(self):
        out = []
        stack = [0]
        while stack:
            node = stack.pop()
            out.append(node)
            if self.left[node] >= 0:
                stack.append(int(self.right[node]))
                stack.append(int(self.left[node]))
        return out

    def dump(self):
        """One line per node in preorder: ``depth pivot... radius count``."""
        lines = []
        for node in self.preorder():
            piv = " ".join(repr(float(v)) for v in self.pivots[node])
            lines.append(
                f"{int(self.depths[node])} {piv} {float(self.radii[node])!r} "
                f"{int(self.end[node] - self.start[node])}"
            )
        return "\n".join(lines) + "\n"


def build(points, f, fill="half"):
    """Build a balanced Ball-tree over a Dataset or an ``(n, d)`` array."""
    if int(f) != f or f < 2:
        raise InvalidCapacity(f"leaf capacity must be an integer >= 2, got {f}")
    X = np.ascontiguousarray(as_points(points))
    n_leaves = leaf_count_for(X.shape[0], int(f), fill)
    arrays = _build_kernel(X, n_leaves)
    for arr in arrays:
        arr.setflags(write=False)
    return BallTree(X, int(f), *arrays)


def structural_float_count(tree):
    """Memory units of the index: ``6 + f`` per leaf and ``8`` per internal node."""
    return tree.leaves * (6 + tree.f) + tree.internals * 8
