import math

import numpy as np
import pytest

from daskmeans.errors import ContractViolation, InvalidObservation
from daskmeans.estimator.gp import GpAdjuster, adjust_predictions, h, kernel


@pytest.mark.parametrize("i", [0, 1, 7.5, 100])
def test_kernel_diagonal(i):
    assert kernel(i, i) == 1.0


def test_kernel_dead_branch():
    assert kernel(5, 3) == 0.0
    assert kernel(5, 4) == 0.0
    for i in range(1, 30):
        for ip in range(0, i):
            assert kernel(i, ip) == 0.0


def test_kernel_forward():
    assert kernel(3, 5, 50) == pytest.approx(math.exp(-4 / 5000), abs=1e-12)
    assert kernel(3, 5, 50) == pytest.approx(0.99920, abs=1e-5)


def test_kernel_half_step_back():
    assert kernel(4, 3.5, 50) == pytest.approx(math.exp(-math.log(0.5) ** 2 / 5000))
    assert kernel(4, 3.5, 50) == pytest.approx(0.99990, abs=1e-5)


def test_kernel_continuous_at_zero():
    assert kernel(0, 1e-9) == pytest.approx(1.0) and kernel(0, -1e-9) == pytest.approx(1.0)


def test_h_matches_value_and_slope_at_zero():
    eps = 1e-6
    assert h(0.0) == 0.0
    left = (h(0.0) - h(-eps)) / eps
    right = (h(eps) - h(0.0)) / eps
    assert left == pytest.approx(1.0, abs=1e-5) and right == pytest.approx(1.0, abs=1e-5)
    with pytest.raises(ContractViolation):
        h(-1.0)


def test_kernel_sigma_must_be_positive():
    with pytest.raises(ContractViolation):
        kernel(1, 2, 0)


def test_accurate_predictions_are_left_alone():
    adj = adjust_predictions(GpAdjuster(), [3.0, 4.0, 5.0, 6.0], [3.0, 4.0])
    assert adj.adjusted_future == pytest.approx([5.0, 6.0], rel=1e-9)
    assert adj.adjusted_total == pytest.approx(adj.unadjusted_total)


def test_single_overestimate_shrinks_future():
    g = GpAdjuster(sigma=50)
    g.observe(1, 2.0, 1.0)
    js = np.arange(2, 21)
    gh = g.posterior_mean(js)
    want = 1 + np.array([kernel(1, j, 50) for j in js]) * (2 - 1) / (1 + g.jitter)
    np.testing.assert_allclose(gh, want, rtol=1e-12)
    assert np.all(gh > 1)
    assert np.all(g.adjust(js, np.ones(len(js))) < 1)


def test_posterior_interpolates_observations(rng):
    g = GpAdjuster(sigma=50)
    ratios = rng.uniform(0.3, 3.0, size=12)
    for i, r in enumerate(ratios, start=1):
        g.observe(i, r, 1.0)
    np.testing.assert_allclose(g.posterior_mean(np.arange(1, 13)), ratios, atol=1e-4)


def test_observation_errors():
    g = GpAdjuster()
    with pytest.raises(InvalidObservation):
        g.observe(1, 1.0, 0.0)
    g.observe(2, 1.0, 1.0)
    with pytest.raises(InvalidObservation):
        g.observe(2, 1.0, 1.0)
    assert g.observe(3, 0.0, 1.0) is False
    with pytest.raises(InvalidObservation):
        adjust_predictions(50.0, [1.0, 2.0], [])
    with pytest.raises(InvalidObservation):
        adjust_predictions(50.0, [1.0, 2.0], [1.0, -2.0])


def test_totals_include_observed_prefix():
    adj = adjust_predictions(50.0, [2.0, 2.0, 2.0], [1.0])
    assert adj.future_indices == [2, 3]
    assert adj.unadjusted_total == 5.0
    assert adj.adjusted_total < adj.unadjusted_total
