"""Unit and property tests for the improper-distribution algebra."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dcfsim.deltaq import (
    MASS_TOLERANCE,
    DeltaQ,
    convolve,
    from_samples,
    ks_distance,
    loss_only,
    mixture,
    point_mass,
    read_cdf_csv,
    write_cdf_csv,
)


def make(delays, masses, loss=0.0):
    return DeltaQ(np.asarray(delays, float), np.asarray(masses, float), loss)


# -- construction and validation -------------------------------------------


def test_rejects_unsorted_delays():
    with pytest.raises(ValueError, match="ascending"):
        make([20.0, 10.0], [0.5, 0.5])


def test_rejects_negative_delay():
    with pytest.raises(ValueError, match="non-negative"):
        make([-1.0], [1.0])


def test_rejects_bad_mass_total():
    with pytest.raises(ValueError, match="sum"):
        make([10.0], [0.5], loss=0.4)


def test_rejects_zero_mass_atom():
    with pytest.raises(ValueError, match="positive"):
        make([10.0, 20.0], [1.0, 0.0])


def test_rejects_loss_outside_unit_interval():
    with pytest.raises(ValueError, match="loss"):
        DeltaQ(np.empty(0), np.empty(0), 1.5)


def test_from_atoms_merges_duplicates():
    d = DeltaQ.from_atoms([30.0, 10.0, 10.0], [0.2, 0.3, 0.5])
    assert d.delays.tolist() == [10.0, 30.0]
    assert d.masses.tolist() == [0.8, 0.2]


def test_from_atoms_coalesce_preserves_mean():
    d = DeltaQ.from_atoms([0.0, 1.0, 100.0], [0.25, 0.25, 0.5], coalesce_us=2.0)
    # 0 and 1 merge at their mass-weighted centre 0.5; the mean is untouched.
    assert d.delays.tolist() == [0.5, 100.0]
    assert d.mean_delivered() == pytest.approx(0.25 * 0.0 + 0.25 * 1.0 + 0.5 * 100.0)


def test_point_mass_and_loss_only():
    p = point_mass(42.0)
    assert p.cdf(41.9) == 0.0 and p.cdf(42.0) == 1.0
    assert loss_only().delivered_mass == 0.0
    assert loss_only().loss_mass == 1.0
    with pytest.raises(ValueError):
        point_mass(-1.0)
    with pytest.raises(ValueError):
        point_mass(math.inf)


# -- queries ---------------------------------------------------------------


def test_cdf_step_values():
    d = make([10.0, 20.0, 30.0], [0.25, 0.25, 0.3], loss=0.2)
    assert d.cdf(9.99) == 0.0
    assert d.cdf(10.0) == 0.25
    assert d.cdf(25.0) == 0.5
    assert d.cdf(1e9) == pytest.approx(0.8)
    np.testing.assert_allclose(d.cdf(np.array([10.0, 30.0])), [0.25, 0.8])


def test_quantile_on_equal_weight_samples():
    # Ten equally likely delays 10..100: the 0.9 quantile is the smallest
    # delay whose cumulative mass reaches 0.9, which is the ninth one.
    d = from_samples(np.arange(10.0, 101.0, 10.0))
    assert d.quantile(0.9).value == 90.0
    assert d.quantile(0.95).value == 100.0
    assert d.quantile(0.05).value == 10.0


def test_quantile_undefined_beyond_delivered_mass():
    d = make([10.0], [0.7], loss=0.3)
    est = d.quantile(0.8)
    assert not est.defined
    assert est.value == math.inf
    # right at the delivered mass it still resolves
    assert d.quantile(0.7).defined
    assert d.quantile(0.7).value == 10.0


def test_quantile_domain_is_open():
    d = point_mass(1.0)
    for q in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(ValueError):
            d.quantile(q)


def test_mean_delivered_renormalizes():
    d = make([10.0, 30.0], [0.5, 0.25], loss=0.25)
    assert d.mean_delivered() == pytest.approx((10.0 * 0.5 + 30.0 * 0.25) / 0.75)
    with pytest.raises(ValueError):
        loss_only().mean_delivered()


# -- from_samples ----------------------------------------------------------


def test_from_samples_counts_duplicates():
    d = from_samples([5.0, 5.0, 7.0], losses=1)
    assert d.delays.tolist() == [5.0, 7.0]
    np.testing.assert_allclose(d.masses, [0.5, 0.25])
    assert d.loss_mass == pytest.approx(0.25)


def test_from_samples_all_lost():
    d = from_samples([], losses=3)
    assert d.loss_mass == 1.0
    assert d.atom_count == 0


def test_from_samples_empty_input_rejected():
    with pytest.raises(ValueError):
        from_samples([], losses=0)
    with pytest.raises(ValueError):
        from_samples([1.0], losses=-1)


def test_from_samples_mean_matches_numpy():
    rng = np.random.default_rng(7)
    samples = rng.integers(0, 50, size=200).astype(float)
    assert from_samples(samples).mean_delivered() == pytest.approx(
        float(samples.mean()), rel=1e-12
    )


# -- convolution and mixture -----------------------------------------------


def test_convolve_hand_example():
    a = make([0.0, 10.0], [0.4, 0.4], loss=0.2)
    b = make([5.0], [0.9], loss=0.1)
    c = convolve(a, b)
    assert c.delays.tolist() == [5.0, 15.0]
    np.testing.assert_allclose(c.masses, [0.36, 0.36])
    # delivered fractions multiply: 0.8 * 0.9
    assert c.delivered_mass == pytest.approx(0.72)
    assert c.loss_mass == pytest.approx(0.2 + 0.1 - 0.2 * 0.1)


def test_convolve_identity_is_exact():
    d = make([3.0, 8.0, 21.0], [0.3, 0.2, 0.4], loss=0.1)
    e = convolve(d, point_mass(0.0))
    np.testing.assert_array_equal(e.delays, d.delays)
    np.testing.assert_array_equal(e.masses, d.masses)
    assert e.loss_mass == d.loss_mass


def test_convolve_size_guard():
    big = from_samples(np.arange(5000.0))
    with pytest.raises(ValueError, match="coalesce"):
        convolve(big, big)


def test_mixture_hand_example():
    a = make([10.0], [0.8], loss=0.2)
    b = make([10.0, 20.0], [0.5, 0.5])
    m = mixture([(0.25, a), (0.75, b)])
    assert m.delays.tolist() == [10.0, 20.0]
    np.testing.assert_allclose(m.masses, [0.25 * 0.8 + 0.75 * 0.5, 0.75 * 0.5])
    assert m.loss_mass == pytest.approx(0.25 * 0.2)


def test_mixture_weight_validation():
    d = point_mass(1.0)
    with pytest.raises(ValueError):
        mixture([])
    with pytest.raises(ValueError):
        mixture([(0.5, d), (0.4, d)])
    with pytest.raises(ValueError):
        mixture([(1.2, d), (-0.2, d)])


def test_ks_distance_cases():
    assert ks_distance(point_mass(5.0), point_mass(5.0)) == 0.0
    assert ks_distance(point_mass(1.0), point_mass(2.0)) == 1.0
    # the delivered-mass gap shows up at the last atom
    assert ks_distance(point_mass(1.0), make([1.0], [0.6], loss=0.4)) == pytest.approx(0.4)
    assert ks_distance(loss_only(), loss_only()) == 0.0


# -- CSV round trip --------------------------------------------------------


def test_cdf_csv_round_trip(tmp_path):
    d = make([10.0, 20.5, 31.25], [0.25, 0.5, 0.125], loss=0.125)
    path = tmp_path / "cdf.csv"
    write_cdf_csv(d, path)
    back = read_cdf_csv(path)
    np.testing.assert_array_equal(back.delays, d.delays)
    np.testing.assert_allclose(back.masses, d.masses, atol=1e-15)
    assert back.loss_mass == pytest.approx(d.loss_mass, abs=1e-15)


def test_cdf_csv_header_check(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1,2\n")
    with pytest.raises(ValueError, match="not a CDF file"):
        read_cdf_csv(path)


# -- property tests --------------------------------------------------------

# Small empirical distributions: integer delays force atom merging, the
# loss count exercises the improper part.
deltaqs = st.tuples(
    st.lists(st.integers(0, 30), min_size=0, max_size=12),
    st.integers(0, 4),
).filter(lambda t: len(t[0]) + t[1] > 0).map(
    lambda t: from_samples(np.asarray(t[0], float), t[1])
)


def cdf_gap(a: DeltaQ, b: DeltaQ) -> float:
    grid = np.union1d(a.delays, b.delays)
    if grid.size == 0:
        return abs(a.loss_mass - b.loss_mass)
    return float(np.max(np.abs(a.cdf(grid) - b.cdf(grid))))


@given(deltaqs, deltaqs)
def test_convolution_commutes(a, b):
    assert cdf_gap(convolve(a, b), convolve(b, a)) <= 1e-9


@given(deltaqs, deltaqs, deltaqs)
def test_convolution_associates(a, b, c):
    left = convolve(convolve(a, b), c)
    right = convolve(a, convolve(b, c))
    assert cdf_gap(left, right) <= 1e-9
    assert abs(left.loss_mass - right.loss_mass) <= 1e-9


@given(deltaqs)
def test_convolution_identity(d):
    e = convolve(d, point_mass(0.0))
    np.testing.assert_array_equal(e.delays, d.delays)
    np.testing.assert_array_equal(e.masses, d.masses)
    assert e.loss_mass == d.loss_mass


@given(deltaqs, deltaqs)
def test_delivered_mass_multiplies(a, b):
    c = convolve(a, b)
    assert abs(c.delivered_mass - a.delivered_mass * b.delivered_mass) <= 1e-9


@given(deltaqs, deltaqs, st.floats(0.01, 0.99))
def test_mixture_loss_is_affine(a, b, w):
    m = mixture([(w, a), (1.0 - w, b)])
    assert abs(m.loss_mass - (w * a.loss_mass + (1.0 - w) * b.loss_mass)) <= 1e-9
    total = float(m.masses.sum()) + m.loss_mass
    assert abs(total - 1.0) <= MASS_TOLERANCE


@given(deltaqs, st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_quantile_monotone_in_q(d, q1, q2):
    lo, hi = sorted((q1, q2))
    a, b = d.quantile(lo), d.quantile(hi)
    if b.defined:
        assert a.defined
        assert a.value <= b.value


@given(deltaqs)
def test_cdf_is_monotone_and_bounded(d):
    grid = np.concatenate(([0.0], d.delays, d.delays + 0.5))
    grid.sort()
    values = d.cdf(grid)
    assert (np.diff(values) >= 0.0).all()
    assert values.min() >= 0.0
    assert values.max() <= d.delivered_mass + 1e-12
