import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from svreg.data import Dataset
from svreg.errors import InvalidInput, InvalidInterval, NoAdmissibleBins
from svreg.slicing import (DyadicPartition, admissible_bins, assign, bin_members, build_partition,
                           slice_stats)

from oracles import two_pass_cov


def test_partition_edges_unit_interval():
    p = build_partition([0.0, 0.3, 1.0], 2)
    np.testing.assert_array_equal(p.edges(), [0, 0.25, 0.5, 0.75, 1.0])
    assert p.bin_count == 4


def test_level_zero_single_bin():
    p = build_partition([2.0, 5.0], 0)
    assert p.bin_count == 1
    assert assign(p, 5.0) == 0 and assign(p, 2.0) == 0


def test_override_interval():
    p = build_partition([100.0], 3, s_override=(-2.0, 2.0))
    assert p.bin_count == 8 and p.width == 0.5


def test_degenerate_interval():
    with pytest.raises(InvalidInterval):
        build_partition([1.0, 1.0], 2)
    with pytest.raises(InvalidInterval):
        DyadicPartition(1.0, 0.0, 1)
    with pytest.raises(InvalidInput):
        DyadicPartition(0.0, 1.0, -1)


@pytest.mark.parametrize("y, h", [(0.3, 2), (1.0, 7), (0.0, 0), (1.5, None), (-1e-9, None)])
def test_assign(y, h):
    assert assign(DyadicPartition(0.0, 1.0, 3), y) == h


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), level=st.integers(0, 8))
def test_tiling_and_refinement(seed, level):
    y = np.random.default_rng(seed).normal(size=200)
    x = np.zeros((200, 1))
    p = build_partition(y, level)
    stats = slice_stats(Dataset(x, y), p)
    assert stats.counts.sum() == stats.total_in_s == 200
    fine = slice_stats(Dataset(x, y), DyadicPartition(p.a, p.b, level + 1))
    np.testing.assert_array_equal(fine.counts[0::2] + fine.counts[1::2], stats.counts)
    members = bin_members(Dataset(x, y), p)
    assert sorted(np.concatenate(members).tolist()) == list(range(200))


def test_samples_outside_s_are_ignored():
    y = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    stats = slice_stats(Dataset(np.zeros((5, 1)), y), DyadicPartition(0.0, 1.0, 1))
    assert stats.total_in_s == 3
    np.testing.assert_array_equal(stats.counts, [1, 2])
    assert stats.n == 5


def test_two_symmetric_points():
    ds = Dataset([[0.0, 1.0], [0.0, -1.0]], [0.5, 0.5])
    stats = slice_stats(ds, DyadicPartition(0.0, 1.0, 0))
    np.testing.assert_array_equal(stats.means[0], [0, 0])
    np.testing.assert_array_equal(stats.covariances[0], np.diag([0.0, 1.0]))
    np.testing.assert_array_equal(stats.second_moments[0], np.diag([0.0, 1.0]))


def test_single_sample_bin():
    ds = Dataset([[3.0, -2.0]], [0.2])
    stats = slice_stats(ds, DyadicPartition(0.0, 1.0, 1))
    np.testing.assert_array_equal(stats.means[0], [3.0, -2.0])
    np.testing.assert_array_equal(stats.covariances[0], np.zeros((2, 2)))
    assert stats.nonempty.tolist() == [True, False]


def test_covariance_matches_two_pass_oracle():
    rng = np.random.default_rng(12)
    x = rng.normal(size=(100, 3)) @ rng.normal(size=(3, 3)) + 4
    stats = slice_stats(Dataset(x, np.full(100, 0.5)), DyadicPartition(0.0, 1.0, 0))
    mean, cov = two_pass_cov(x)
    np.testing.assert_allclose(stats.means[0], mean, atol=1e-12)
    np.testing.assert_allclose(stats.covariances[0], cov, atol=1e-12)
    np.testing.assert_allclose(stats.second_moments[0], x.T @ x / 100, rtol=1e-12)
    assert np.linalg.eigvalsh(stats.covariances[0]).min() >= -1e-10


def test_response_affine_map_keeps_memberships():
    rng = np.random.default_rng(13)
    x = rng.normal(size=(500, 2))
    y = rng.uniform(-3, 3, 500)
    base = slice_stats(Dataset(x, y), build_partition(y, 5))
    for alpha, beta in [(2.0, 0.0), (0.25, 0.0), (4.0, 8.0)]:
        y2 = alpha * y + beta
        other = slice_stats(Dataset(x, y2), build_partition(y2, 5))
        np.testing.assert_array_equal(other.counts, base.counts)
        np.testing.assert_array_equal(other.means, base.means)
        np.testing.assert_array_equal(other.covariances, base.covariances)


# --- admissibility ----------------------------------------------------------------------

def test_level_zero_all_admissible():
    y = np.linspace(0, 1, 10)
    stats = slice_stats(Dataset(np.zeros((10, 1)), y), build_partition(y, 0))
    assert admissible_bins(stats).indices == (0,)


def test_uniform_two_bins_admissible():
    # threshold is 500; probability that a Binomial(1000, 1/2) falls below it
    assert binom.cdf(499, 1000, 0.5) < 0.5
    rng = np.random.default_rng(14)
    y = rng.uniform(0, 1, 1000)
    stats = slice_stats(Dataset(np.zeros((1000, 1)), y), DyadicPartition(0.0, 1.0, 1))
    adm = admissible_bins(stats, 1000)
    expected = tuple(h for h in (0, 1) if stats.counts[h] >= 500)
    assert adm.indices == expected and len(expected) >= 1


def test_threshold_exact_integer_comparison():
    y = np.array([0.1, 0.1, 0.1, 0.9])
    stats = slice_stats(Dataset(np.zeros((4, 1)), y), DyadicPartition(0.0, 1.0, 2))
    # threshold n / 4 = 1: bins with one sample qualify, empty bins do not
    assert admissible_bins(stats).indices == (0, 3)
    assert admissible_bins(stats, n=8).indices == (0,)


def test_no_admissible_bins():
    y = np.array([0.1, 0.9])
    stats = slice_stats(Dataset(np.zeros((2, 1)), y), DyadicPartition(0.0, 1.0, 1))
    with pytest.raises(NoAdmissibleBins):
        admissible_bins(stats, n=10)
