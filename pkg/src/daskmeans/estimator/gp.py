"""Online correction of per-iteration runtime predictions.

After iteration ``i`` finishes we know the ratio ``g(i) = yhat_i / y_i``.
The ratios are treated as a Gaussian process with prior mean 1 and a
one-directional kernel: an observation informs later iterations (and,
through ``ln(delta + 1)``, fractional offsets just before it) but never
iterations one or more steps earlier.  The posterior mean ``ghat(j)`` then
rescales the remaining predictions, ``yhat'_j = yhat_j / ghat(j)``.

The kernel is not symmetric, so the Gram matrix is not a covariance matrix
in the usual sense.  It is used as is: with observations ordered by index
it is lower triangular with a unit diagonal, which keeps the solve stable.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractViolation, InvalidObservation

DEFAULT_SIGMA = 50.0
DEFAULT_JITTER = 1e-6
RATIO_FLOOR = 1e-6


def h(delta):
    if delta <= -1:
        raise ContractViolation("h is defined on (-1, inf)")
    if delta <= 0:
        return math.log1p(delta)
    return float(delta)


def kernel(i, ip, sigma=DEFAULT_SIGMA):
    """Covariance between the ratios at iterations ``i`` and ``ip``."""
    if not sigma > 0:
        raise ContractViolation("sigma must be positive")
    delta = ip - i
    if delta <= -1:
        return 0.0
    hd = h(delta)
    return math.exp(-hd * hd / (2.0 * sigma * sigma))


@dataclass
class GpAdjuster:
    sigma: float = DEFAULT_SIGMA
    jitter: float = DEFAULT_JITTER
    observed: list = field(default_factory=list)

    def observe(self, i, predicted, actual):
        """Record iteration ``i``.  Returns False (and records nothing) when
        ``predicted`` is not positive, since no ratio can be formed."""
        if not (actual > 0 and math.isfinite(actual)):
            raise InvalidObservation(f"runtime of iteration {i} must be positive, got {actual}")
        if self.observed and i <= self.observed[-1][0]:
            raise InvalidObservation("iteration indices must be strictly increasing")
        if not (predicted > 0 and math.isfinite(predicted)):
            return False
        self.observed.append((float(i), predicted / actual))
        return True

    def _weights(self):
        idx = np.array([o[0] for o in self.observed])
        g = np.array([o[1] for o in self.observed])
        m = len(idx)
        A = np.empty((m, m))
        for b in range(m):
            for a in range(m):
                A[b, a] = kernel(idx[a], idx[b], self.sigma)
        A += self.jitter * np.eye(m)
        return idx, np.linalg.solve(A, g - 1.0)

    def posterior_mean(self, js):
        """``ghat`` at each index in ``js``."""
        js = np.atleast_1d(np.asarray(js, dtype=np.float64))
        if not self.observed:
            return np.ones_like(js)
        idx, alpha = self._weights()
        out = np.ones_like(js)
        for t, j in enumerate(js):
            out[t] += sum(kernel(ia, j, self.sigma) * al for ia, al in zip(idx, alpha))
        return out

    def adjust(self, js, predicted):
        ghat = self.posterior_mean(js)
        return np.asarray(predicted, dtype=np.float64) / np.maximum(ghat, RATIO_FLOOR)


@dataclass(frozen=True)
class Adjustment:
    future_indices: list
    adjusted_future: list
    adjusted_total: float
    unadjusted_total: float


def adjust_predictions(adjuster, predicted, observed):
    """Rescale the not yet executed part of ``predicted``.

    ``predicted[j-1]`` is the forecast for iteration ``j``; ``observed`` holds
    the measured runtimes of iterations ``1..i``.  Both totals count the
    observed prefix as measured; they differ only in the future part.
    """
    if isinstance(adjuster, (int, float)):
        adjuster = GpAdjuster(sigma=float(adjuster))
    if len(observed) < 1:
        raise InvalidObservation("need at least one observed iteration")
    for i, y in enumerate(observed, start=1):
        if i <= len(predicted):
            adjuster.observe(i, float(predicted[i - 1]), float(y))
        elif not y > 0:
            raise InvalidObservation(f"runtime of iteration {i} must be positive")
    i = len(observed)
    future = list(range(i + 1, len(predicted) + 1))
    fut_pred = np.asarray(predicted[i:], dtype=np.float64)
    adj = adjuster.adjust(future, fut_pred) if future else np.zeros(0)
    seen = float(np.sum(observed))
    return Adjustment(
        future_indices=future,
        adjusted_future=adj.tolist(),
        adjusted_total=seen + float(adj.sum()),
        unadjusted_total=seen + float(fut_pred.sum()),
    )
