import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vardist import (
    FrequencyTable,
    ParametricModel,
    Region,
    auxiliary_of,
    from_samples,
    sample,
    truncate,
)
from vardist.errors import InsufficientSupportError, ZeroDensityError

# 20 points spanning exactly [0, 10]
FIXTURE = np.array([0.0, 0.4, 1.1, 1.9, 2.0, 2.5, 3.3, 3.9, 4.0, 4.2,
                    5.5, 5.9, 6.0, 6.1, 7.7, 8.0, 8.8, 9.1, 9.9, 10.0])


def hand_bin(x, lo, hi, k):
    width = (hi - lo) / k
    counts = [0] * k
    for v in x:
        idx = min(int((v - lo) // width), k - 1)  # last class closed on the right
        counts[idx] += 1
    centers = [lo + (i + 0.5) * width for i in range(k)]
    return centers, counts


def test_discrete_identity_counts():
    t = from_samples([0, 0, 0, 1, 1], "discrete")
    assert t.support.tolist() == [0, 1]
    assert t.counts.tolist() == [3, 2]


def test_equal_width_binning_matches_hand_oracle():
    centers, counts = hand_bin(FIXTURE, 0.0, 10.0, 5)
    t = from_samples(FIXTURE, 5)
    assert centers == [1, 3, 5, 7, 9]
    np.testing.assert_allclose(t.support, centers)
    assert t.counts.tolist() == counts
    np.testing.assert_allclose(t.intervals[0], [0, 2])


def test_empty_bins_dropped():
    t = from_samples([0.0, 0.1, 9.9, 10.0], 5)
    assert t.support.tolist() == [1.0, 9.0]
    assert np.all(t.counts > 0)


def test_explicit_edges_discard_outside():
    t = from_samples(FIXTURE, [0, 5, 10])
    assert t.counts.sum() == 20
    t = from_samples(FIXTURE, [2, 4, 6])
    assert t.support.tolist() == [3, 5]
    assert t.counts.tolist() == [4, 5]  # last class closed: 6.0 included


def test_all_equal_samples_rejected():
    with pytest.raises(InsufficientSupportError):
        from_samples([2.0] * 10, "discrete")
    with pytest.raises(InsufficientSupportError):
        from_samples([2.0] * 10, 4)


def test_relative_frequencies_sum_to_one():
    t = FrequencyTable([1, 2, 3], [1e-3, 7.0, 1e9])
    assert t.probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_table_invariants():
    with pytest.raises(InsufficientSupportError):
        FrequencyTable([1.0], [3.0])
    with pytest.raises(ZeroDensityError):
        FrequencyTable([1.0, 2.0], [3.0, 0.0])
    with pytest.raises(ValueError):
        FrequencyTable([1.0, 1.0], [3.0, 2.0])


def test_truncate_binomial_table():
    t = from_samples(sample(ParametricModel("binomial", (8, 0.5)), 5000, 1), "discrete")
    kept = truncate(t, Region.of_values([0, 1, 2, 3]))
    assert kept.support.tolist() == [0, 1, 2, 3]
    np.testing.assert_array_equal(kept.counts, t.counts[:4])


def test_truncate_weibull_samples():
    x = sample(ParametricModel("weibull", (1.2, 1.5)), 1000, 2)
    kept = truncate(x, "[1.25,inf)")
    assert kept.min() >= 1.25
    assert len(kept) == np.sum(x >= 1.25)


def test_truncate_disjoint_region_rejected():
    t = FrequencyTable([0, 1, 2], [3, 2, 1])
    with pytest.raises(InsufficientSupportError):
        truncate(t, "[5,6)")


@given(st.lists(st.integers(0, 6), min_size=2, max_size=60), st.sets(st.integers(0, 6), min_size=2))
def test_truncate_commutes_with_discrete_grouping(xs, keep):
    region = Region.of_values(keep)
    try:
        a = truncate(from_samples(xs, "discrete"), region)
    except InsufficientSupportError:
        a = None
    try:
        b = from_samples(truncate(xs, region), "discrete")
    except InsufficientSupportError:
        b = None
    assert (a is None) == (b is None)
    if a is not None:
        assert a == b


def test_auxiliary_of_exponential():
    aux = auxiliary_of(ParametricModel("exponential", (math.log(2),)), [0, 1])
    np.testing.assert_allclose(aux.probs, [2 / 3, 1 / 3], rtol=1e-15)


@given(st.floats(-3, 3), st.floats(0.2, 4), st.lists(st.floats(-5, 5), min_size=2, max_size=8, unique=True))
def test_auxiliary_sums_to_one(m, s, ys):
    aux = auxiliary_of(ParametricModel("normal", (m, s)), ys)
    assert aux.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(aux.probs > 0)


def test_auxiliary_rejects_non_finite_and_zero_density():
    with pytest.raises(ValueError):
        auxiliary_of(ParametricModel("normal", (0, 1)), [-np.inf, 0, np.inf])
    with pytest.raises(ZeroDensityError):
        auxiliary_of(ParametricModel("binomial", (3, 0.5)), [0, 4])


def test_auxiliary_round_trip_with_exact_table():
    m = ParametricModel("gamma", (2.0, 0.7))
    ys = np.array([0.5, 1.0, 2.5, 4.0])
    aux = auxiliary_of(m, ys)
    table = FrequencyTable(ys, 12345.0 * aux.probs)
    np.testing.assert_allclose(table.probs, auxiliary_of(m, table.support).probs, rtol=0, atol=1e-12)


def test_region_parsing():
    r = Region.parse("[-1.7951,-1.2712[ ∪ [-0.22335,0.30055[".replace(" ∪ ", ","))
    assert len(r.intervals) == 2
    assert r.contains([-1.5331, 0.03869, -1.2712, 1.0]).tolist() == [True, True, False, False]
    r2 = Region.parse("[-1.7951,-1.2712),[-0.22335,0.30055)")
    assert r2 == r
    assert Region.parse("{0,1,2,3}").values == (0, 1, 2, 3)
    with pytest.raises(ValueError):
        Region.parse("[1,2) junk")


def test_region_probability_discrete_and_continuous():
    b = ParametricModel("binomial", (8, 0.1))
    from vardist import density
    assert Region.parse("[0,3]").probability(b) == pytest.approx(density(b, np.arange(4)).sum(), rel=1e-12)
    assert Region.parse("[0,3)").probability(b) == pytest.approx(density(b, np.arange(3)).sum(), rel=1e-12)
    assert Region.of_values([0, 1]).probability(b) == pytest.approx(density(b, [0, 1]).sum(), rel=1e-12)
    n = ParametricModel("normal", (0, 1))
    assert Region.parse("(-inf,inf)").probability(n) == pytest.approx(1.0)


def test_csv_round_trip(tmp_path):
    t = from_samples(FIXTURE, 5)
    path = tmp_path / "t.csv"
    t.to_csv(path)
    assert FrequencyTable.from_csv(path) == t
    plain = FrequencyTable([0.1, 0.2], [1 / 3, 2 / 3])
    assert FrequencyTable.from_csv(io.StringIO(plain.to_csv())) == plain


def test_csv_quoted_interval_column():
    text = 'y,count,lo_hi\n1,4,"0,2"\n3,5,"2,4"\n'
    t = FrequencyTable.from_csv(io.StringIO(text))
    np.testing.assert_array_equal(t.intervals, [[0, 2], [2, 4]])


def test_csv_rejects_malformed():
    with pytest.raises(ValueError):
        FrequencyTable.from_csv(io.StringIO("y,count\n1,abc\n2,3\n"))
    with pytest.raises(ValueError):
        FrequencyTable.from_csv(io.StringIO("x,n\n1,2\n2,3\n"))


def test_json_round_trip():
    t = from_samples(FIXTURE, 4)
    assert FrequencyTable.from_json(t.to_json()) == t
    assert set(t.to_dict()) == {"support", "counts", "intervals"}
