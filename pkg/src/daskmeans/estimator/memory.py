"""Closed-form memory model of the two Ball-tree indexes.

A leaf costs ``6 + f`` units (3 pivot coordinates, radius, count, cluster id
and room for ``f`` members) and an internal node ``8`` (the same six plus two
child links).  A balanced tree over ``n`` items with half-full leaves has
``L = ceil(2n/f)`` leaves and ``L - 1`` internal nodes, so

    M(n, f) = L (6 + f) + (L - 1) 8  ~  2n + 28n/f - 16

and the whole run needs ``m = M(n, f) + M(k, f) + n`` units, the last term
being the assignment array.  One unit is one 8-byte word.
"""
import math
from dataclasses import dataclass

import numpy as np

from ..errors import BudgetInfeasible, ContractViolation

BYTES_PER_UNIT = 8
# half-width of the capacity window searched around the closed-form guess
_WINDOW = 64


def _check(n, f):
    if int(n) != n or n < 1:
        raise ContractViolation(f"n must be a positive integer, got {n}")
    if int(f) != f or f < 2:
        raise ContractViolation(f"f must be an integer >= 2, got {f}")


def leaves_for(n, f):
    return max(1, math.ceil(2 * n / f))


def estimate_index_memory(n, f):
    """Exact node accounting ``L(6+f) + (L-1)8`` with ``L = ceil(2n/f)``."""
    _check(n, f)
    n, f = int(n), int(f)
    leaves = -(-2 * n // f) if n else 1
    leaves = max(1, leaves)
    return leaves * (6 + f) + (leaves - 1) * 8


def simplified_index_memory(n, f):
    """The smooth approximation ``2n + 28n/f - 16``."""
    _check(n, f)
    return 2.0 * n + 28.0 * n / f - 16.0


@dataclass(frozen=True)
class MemoryEstimate:
    point_index_floats: int
    centroid_index_floats: int
    assignment_ints: int
    total_units: int
    f: int = None

    @property
    def total_bytes(self):
        return self.total_units * BYTES_PER_UNIT

    def as_dict(self):
        return {
            "f": self.f,
            "point_index_floats": self.point_index_floats,
            "centroid_index_floats": self.centroid_index_floats,
            "assignment_ints": self.assignment_ints,
            "total_units": self.total_units,
            "total_bytes": self.total_bytes,
        }


def estimate_total_memory(n, k, f):
    if int(k) != k or k < 1:
        raise ContractViolation(f"k must be a positive integer, got {k}")
    p = estimate_index_memory(n, f)
    c = estimate_index_memory(k, f)
    return MemoryEstimate(p, c, int(n), p + c + int(n), int(f))


def simplified_total_memory(n, k, f):
    """``(2 + 28/f)(n + k) - 32 + n``; strictly decreasing in ``f``."""
    return (2.0 + 28.0 / f) * (n + k) - 32.0 + n


def _totals(n, k, fs):
    """Exact totals for an array of capacities (vectorized)."""
    fs = np.asarray(fs, dtype=np.int64)
    lp = np.maximum(1, (2 * n + fs - 1) // fs)
    lc = np.maximum(1, (2 * k + fs - 1) // fs)
    return lp * (6 + fs) + (lp - 1) * 8 + lc * (6 + fs) + (lc - 1) * 8 + n


def _search_limit(n, k, budget):
    # for 2k <= f <= n the centroid tree is one leaf of 6 + f units and the
    # point tree costs at least 2n + 20, so f > budget - 3n - 26 cannot fit
    return int(min(max(2, n), max(2 * k, budget - 3 * n - 25)))


def minimum_budget(n, k):
    """Smallest total any capacity in ``[2, n]`` achieves."""
    n, k = int(n), int(k)
    guess = min(max(2, n), max(2, int(round(math.sqrt(14.0 * (n + k))))))
    limit = _search_limit(n, k, estimate_total_memory(n, k, guess).total_units)
    return int(_totals(n, k, np.arange(2, limit + 1)).min())


def closed_form_capacity(n, k, budget):
    """``28(n+k) / (m' - 3n + 32 - 2k)``, or ``None`` when the denominator is not positive."""
    denom = budget - 3 * n + 32 - 2 * k
    if denom <= 0:
        return None
    return 28.0 * (n + k) / denom


def tune_leaf_capacity(n, k, budget):
    """Leaf capacity for a memory budget of ``budget`` units.

    The closed-form inversion, rounded and clamped to ``[2, n]``, gives a
    first guess.  The exact accounting jitters with the ceilings, so the
    answer is the capacity near that guess whose exact total is the largest
    one still within the budget (ties go to the smaller ``f``).  Feeding in
    the total of some ``f0`` therefore gives ``f0`` back.  Raises
    :class:`BudgetInfeasible` when nothing in ``[2, n]`` fits.
    """
    _check(n, 2)
    if int(k) != k or k < 1:
        raise ContractViolation(f"k must be a positive integer, got {k}")
    n, k = int(n), int(k)
    hi = max(2, n)
    f0 = closed_form_capacity(n, k, budget)
    g = hi if f0 is None else min(hi, max(2, int(math.floor(f0 + 0.5))))
    w = max(_WINDOW, g // 2)
    fs = np.arange(max(2, g - w), min(hi, g + w) + 1)
    tot = _totals(n, k, fs)
    if not (tot <= budget).any():
        fs = np.arange(2, max(2, _search_limit(n, k, budget)) + 1)
        tot = _totals(n, k, fs)
        if not (tot <= budget).any():
            raise BudgetInfeasible(budget, minimum_budget(n, k))
    tot = np.where(tot <= budget, tot, -1)
    return int(fs[np.argmax(tot)])
