import functools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vardist import (
    FrequencyTable,
    ParametricModel,
    auxiliary_of,
    classical_mle,
    classical_truncated_mle,
    estimate,
    exp_rate_classical_two_point,
    exp_rate_two_point,
    min_dv,
    new_mle,
    new_moments,
    normal_mean_two_point,
    normal_sigma_two_point,
    perturbation_sweep,
    weighted_pairwise,
)
from vardist.errors import DegenerateError, ParameterError
from vardist.estimators import Status
from vardist.harness import NORMAL_TABLE

Y3, Y6, Y8 = NORMAL_TABLE["y3"], NORMAL_TABLE["y6"], NORMAL_TABLE["y8"]
N6 = NORMAL_TABLE["n6"]
REGION = NORMAL_TABLE["region"]


def exact_table(model, support, scale=1000.0):
    aux = auxiliary_of(model, support)
    return FrequencyTable(support, scale * aux.probs / aux.probs.max())


# -- closed forms -------------------------------------------------------------

def test_exp_rate_exact_ratio():
    r = exp_rate_two_point(0, 1, math.e, 1)
    assert r.status is Status.CONVERGED
    assert r["rate"] == pytest.approx(1.0, abs=1e-15)
    assert r.exact


def test_exp_rate_equal_counts_no_solution():
    r = exp_rate_two_point(0, 1, 5, 5)
    assert r.status is Status.NO_SOLUTION
    assert not r.ok
    assert "reason" in r.diagnostics


def test_exp_rate_published_formula():
    r = exp_rate_two_point(1, 3, 800, 200)
    assert r["rate"] == pytest.approx(math.log(4) / 2, rel=1e-14)
    assert r["rate"] == pytest.approx(0.6931, abs=1e-4)


def test_exp_rate_degenerate():
    with pytest.raises(DegenerateError):
        exp_rate_two_point(1, 1, 2, 1)


def test_classical_two_point():
    assert exp_rate_classical_two_point(1, 1, 7, 3)["rate"] == 1.0
    assert exp_rate_classical_two_point(0, 1, 4, 4)["rate"] == 2.0
    with pytest.raises(DegenerateError):
        exp_rate_classical_two_point(0, 0, 1, 1)


@pytest.mark.parametrize("n3, expected", list(zip(NORMAL_TABLE["n3_columns"], NORMAL_TABLE["published"]["m_dv"])))
def test_normal_mean_published(n3, expected):
    r = normal_mean_two_point(Y3, Y6, n3, N6, 1.0)
    assert r["mean"] == pytest.approx(expected, abs=5e-3)


def test_normal_mean_last_column_near_zero():
    assert abs(normal_mean_two_point(Y3, Y6, 27500, N6, 1.0)["mean"]) < 1e-3


def test_normal_mean_symmetric():
    assert normal_mean_two_point(-0.7, 0.7, 3, 3, 2.0)["mean"] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("n3, expected", list(zip(NORMAL_TABLE["n3_columns"], NORMAL_TABLE["published"]["sd_dv"])))
def test_normal_sigma_published(n3, expected):
    r = normal_sigma_two_point(Y3, Y6, n3, N6, 0.0)
    assert r["sd"] == pytest.approx(expected, abs=5e-3)


def test_normal_sigma_special_cases():
    r = normal_sigma_two_point(-1, 2, 5, 5, 0.0)
    assert r.status is Status.NO_SOLUTION
    r = normal_sigma_two_point(-1, 1, 5, 5, 0.0)
    assert r.status is Status.DEGENERATE
    assert math.isnan(r["sd"])


def test_normal_sigma_wrong_orientation():
    # the larger count sits farther from the mean
    r = normal_sigma_two_point(0.1, 3.0, 1, 10, 0.0)
    assert r.status is Status.NO_SOLUTION


# -- weighted pairwise ----------------------------------------------------------

def test_pairwise_exact_exponential():
    t = exact_table(ParametricModel("exponential", (1.0,)), [0, 1, 2])
    r = weighted_pairwise(t)
    assert r["rate"] == pytest.approx(1.0, abs=1e-12)


def test_pairwise_perturbed_middle_by_hand():
    n = [1.0, math.exp(-1) * 1.1, math.exp(-2)]
    y = [0.0, 1.0, 2.0]
    est = {
        (0, 1): (math.log(n[0]) - math.log(n[1])) / 1,
        (0, 2): (math.log(n[0]) - math.log(n[2])) / 2,
        (1, 2): (math.log(n[1]) - math.log(n[2])) / 1,
    }
    w = {p: n[p[0]] + n[p[1]] for p in est}
    oracle = sum(w[p] * est[p] for p in est) / sum(w.values())
    r = weighted_pairwise(FrequencyTable(y, n))
    assert r["rate"] == pytest.approx(oracle, rel=1e-14)
    assert r.diagnostics["skipped_pairs"] == []


def test_pairwise_skips_inadmissible_pairs():
    t = FrequencyTable([0, 1, 2], [10.0, 12.0, 2.0])
    r = weighted_pairwise(t)
    assert r.diagnostics["skipped_pairs"] == [[0, 1]]
    oracle = ((10 + 2) * math.log(5) / 2 + (12 + 2) * math.log(6)) / (12 + 14)
    assert r["rate"] == pytest.approx(oracle, rel=1e-14)


def test_pairwise_normal_mean_solver():
    t = exact_table(ParametricModel("normal", (0.3, 1.0)), [-1.0, 0.0, 1.5, 2.0])
    r = weighted_pairwise(t, functools.partial(normal_mean_two_point, sigma=1.0))
    assert r["mean"] == pytest.approx(0.3, abs=1e-12)


def test_pairwise_needs_three_points():
    with pytest.raises(ValueError):
        weighted_pairwise(FrequencyTable([0, 1], [2, 1]))


# -- numerical estimators -------------------------------------------------------

@pytest.mark.parametrize("x, y, n1, n2", [(0, 1, math.e, 1), (1, 3, 800, 200), (0.2, 2.5, 17, 3)])
def test_min_dv_matches_closed_form(x, y, n1, n2):
    t = FrequencyTable([x, y], [n1, n2])
    assert min_dv(t, "exponential")["rate"] == pytest.approx(exp_rate_two_point(x, y, n1, n2)["rate"], abs=1e-6)


def test_min_dv_normal_exact_three_points():
    t = exact_table(ParametricModel("normal", (0.0, 1.0)), [Y3, Y6, Y8])
    r = min_dv(t, "normal")
    np.testing.assert_allclose(r.params, [0, 1], atol=1e-4)
    assert r.exact


def test_min_dv_binomial_exact():
    t = exact_table(ParametricModel("binomial", (8, 0.1)), [0, 1, 2, 3])
    r = min_dv(t, "binomial", known={"n": 8})
    assert r["p"] == pytest.approx(0.1, abs=1e-6)
    assert r.exact
    assert r.free == ("p",)


def test_binomial_requires_trials():
    with pytest.raises(ParameterError):
        min_dv(FrequencyTable([0, 1, 2], [5, 3, 1]), "binomial")


def test_min_dv_inadmissible_ratio_hits_bound():
    # counts increase along the support: the infimum sits at the rate bound
    r = min_dv(FrequencyTable([0, 1], [1, 3]), "exponential")
    assert r.status is Status.TOLERANCE_SET
    assert not r.exact


def test_new_mle_two_point_identity():
    r = new_mle(FrequencyTable([0, 1], [2 * math.e, 2]), "exponential")
    assert r["rate"] == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("n3", NORMAL_TABLE["n3_columns"])
def test_new_mle_equals_closed_form_mean(n3):
    t = FrequencyTable([Y3, Y6], [n3, N6])
    r = new_mle(t, "normal", known={"sd": 1.0})
    assert r["mean"] == pytest.approx(normal_mean_two_point(Y3, Y6, n3, N6, 1.0)["mean"], abs=1e-6)


def test_new_moments_exact_recovery():
    t = exact_table(ParametricModel("gamma", (2.0, 0.7)), [0.5, 1.0, 2.5, 4.0])
    r = new_moments(t, "gamma", known={"shape": 2.0})
    assert r["rate"] == pytest.approx(0.7, abs=1e-6)
    assert r.diagnostics["residual_norm"] < 1e-8


def test_new_moments_normal_final_column():
    t = exact_table(ParametricModel("normal", (0.0, 1.0)), [Y3, Y6, Y8])
    r = new_moments(t, "normal")
    np.testing.assert_allclose(r.params, [0, 1], atol=1e-4)


# Three points, two free parameters: the moment equations are solved by the
# exact-ratio fit, so this returns the minimum-distance row (-0.02224, 0.91767).
@pytest.mark.xfail(strict=True, reason="published moment row not reproducible from the stated inputs")
def test_new_moments_lower_block_first_column():
    t = FrequencyTable([Y3, Y6, Y8], [23000.0, N6, 43000.0])
    r = new_moments(t, "normal")
    assert r["mean"] == pytest.approx(0.036763, abs=2e-2)
    assert r["sd"] == pytest.approx(1.0689, abs=2e-2)


def test_lower_block_paired_columns():
    for n3, n8, m, s in zip(NORMAL_TABLE["n3_columns"], NORMAL_TABLE["n8_columns"],
                            NORMAL_TABLE["published_lower"]["m_dv"], NORMAL_TABLE["published_lower"]["sd_dv"]):
        r = min_dv(FrequencyTable([Y3, Y6, Y8], [n3, N6, n8]), "normal")
        assert r["mean"] == pytest.approx(m, abs=5e-3)
        assert r["sd"] == pytest.approx(s, abs=5e-3)


def test_classical_truncated_published_mean():
    t = FrequencyTable([Y3, Y6], [23000, N6])
    r = classical_truncated_mle(t, "normal", REGION, known={"sd": 1.0})
    assert r["mean"] == pytest.approx(0.11075, abs=2e-2)


def test_classical_truncated_published_sigma():
    t = FrequencyTable([Y3, Y6], [27500, N6])
    r = classical_truncated_mle(t, "normal", REGION, known={"mean": 0.0})
    assert r["sd"] == pytest.approx(0.991165, abs=2e-2)


def test_full_region_equals_classical_mle():
    t = FrequencyTable([0.5, 1.0, 2.0, 3.5], [40, 30, 20, 10])
    full = classical_truncated_mle(t, "exponential", "[0,inf)")
    plain = classical_mle(t, "exponential")
    assert full["rate"] == pytest.approx(plain["rate"], abs=1e-6)
    # grouped complete-sample MLE has a closed form
    assert plain["rate"] == pytest.approx(t.total / (t.counts @ t.support), rel=1e-8)


def test_estimate_dispatch_fallback():
    r = estimate(FrequencyTable([0, 1], [1, 3]), "exponential", "dv")
    assert r.status is Status.NO_SOLUTION
    assert r.diagnostics["fallback"]["status"] == "tolerance-set"


def test_estimate_unknown_method():
    with pytest.raises(ValueError):
        estimate(FrequencyTable([0, 1], [3, 1]), "exponential", "bogus")


# -- perturbation ---------------------------------------------------------------

EPS = [10.0**-p for p in range(1, 7)]


def test_exponential_sweep():
    sw = perturbation_sweep(ParametricModel("exponential", (1.0,)), (0, 1), EPS)
    assert np.all(np.diff(sw.errors) < 0)
    assert sw.r_squared > 0.999
    assert sw.errors[-1] < 1e-5 * abs(sw.slope)
    assert sw.estimates[-1] == pytest.approx(1.0, abs=1e-6)


def test_sweep_at_zero_is_exact():
    sw = perturbation_sweep(ParametricModel("exponential", (1.0,)), (0, 1), [1e-3, 0.0])
    assert sw.estimates[-1] == pytest.approx(1.0, abs=1e-14)


def test_normal_mean_sweep():
    sw = perturbation_sweep(ParametricModel("normal", (0.4, 1.0)), (-1.0, 1.0), EPS, param="mean")
    assert np.all(np.diff(sw.errors) < 0)
    assert sw.errors[-1] < 1e-5 * abs(sw.slope)


def test_sweep_rejects_increasing_eps():
    with pytest.raises(ValueError):
        perturbation_sweep(ParametricModel("exponential", (1.0,)), (0, 1), [1e-3, 1e-2])


# -- invariances ----------------------------------------------------------------

@settings(max_examples=15, deadline=None)
@given(st.floats(1e-3, 1e4))
def test_count_scale_invariance(c):
    t = FrequencyTable([0.3, 1.0, 1.8, 2.9], [50.0, 31.0, 14.0, 6.0])
    for fn in (min_dv, new_mle, classical_mle):
        a = fn(t, "exponential")["rate"]
        b = fn(t.scaled(c), "exponential")["rate"]
        assert b == pytest.approx(a, rel=1e-9)
    a = weighted_pairwise(t)["rate"]
    assert weighted_pairwise(t.scaled(c))["rate"] == pytest.approx(a, rel=1e-12)
