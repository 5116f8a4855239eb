import itertools
import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.integrate import quad

from app.distribution import (
    cluster_1d,
    combined_distribution,
    distribution_check,
    poisson_pdf,
    r_ratio,
    spacing_lab,
    wigner_surmise_pdf,
)
from app.melody import decompose
from app.models import Piece, SurmiseParams


def partition_cost(clusters):
    total = 0.0
    for part in clusters:
        mean = sum(part) / len(part)
        total += sum((v - mean) ** 2 for v in part)
    return total


def brute_force_partition(values, k):
    """Cheapest contiguous k-partition of the sorted values, leftmost splits first."""
    data = sorted(values)
    best, best_signature = math.inf, None
    for cuts in itertools.combinations(range(1, len(data)), k - 1):
        bounds = (0,) + cuts + (len(data),)
        total = partition_cost([data[lo:hi] for lo, hi in zip(bounds, bounds[1:])])
        if total < best:
            best, best_signature = total, [hi - lo for lo, hi in zip(bounds, bounds[1:])]
    return best, best_signature


def brute_force_wcss(values, k):
    return brute_force_partition(values, k)[0]


def test_combined_distribution(p1, p4):
    assert combined_distribution(decompose(p1)).values == [40, 10, -25, 30, -25, 75]
    assert combined_distribution(decompose(p4)).values == [15, 5, -5, 10, -5, 25]


def test_cluster_p1_values():
    partition = cluster_1d([40, 10, -25, 30, -25, 75], 3)
    assert partition.clusters == [[-25, -25], [10, 30, 40], [75]]
    assert partition.signature == [2, 3, 1]


def test_cluster_singletons():
    partition = cluster_1d([3, 1, 2], 3)
    assert partition.signature == [1, 1, 1]
    assert partition.wcss == 0


def test_cluster_permuted_p1_counterexample():
    assert cluster_1d([-30, -25, -25, 10, 40, 75], 3).signature == [3, 2, 1]


@pytest.mark.parametrize("offset", [0.0, 1e4])
@pytest.mark.parametrize("values,k", [
    ([40, 10, -25, 30, -25, 75], 3),
    ([5, -5, -15, 5, 10, 25], 3),
    ([1.5, 2.25, 9.0, -4.0, 7.75, 7.5, 0.0], 4),
    ([3, 1, 4, 1, 5, 9, 2, 6], 2),
])
def test_cluster_matches_exhaustive_search(values, k, offset):
    shifted = [v + offset for v in values]
    partition = cluster_1d(shifted, k)
    assert partition.wcss == pytest.approx(brute_force_wcss(shifted, k), abs=1e-6)
    assert partition.signature == cluster_1d(values, k).signature


def test_cluster_far_from_origin():
    partition = cluster_1d([1e4, 1e4 + 1, 1e4 + 2.1], 2)
    assert partition.signature == [2, 1]
    assert partition.wcss == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_cluster_matches_exhaustive_search_on_random_lists(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 11))
    k = int(rng.integers(1, n + 1))
    values = list(rng.normal(rng.uniform(-1e3, 1e3), 50.0, size=n))
    partition = cluster_1d(values, k)
    wcss, signature = brute_force_partition(values, k)
    assert partition.wcss == pytest.approx(wcss, rel=1e-9, abs=1e-9)
    assert partition.signature == signature
    # reported cost belongs to the returned clusters
    assert partition.wcss == pytest.approx(partition_cost(partition.clusters), rel=1e-9, abs=1e-9)


def test_cluster_prefers_leftmost_split_on_ties():
    # every split of identical values costs zero
    assert cluster_1d([0, 0, 0, 0, 0], 3).signature == [1, 1, 3]


@pytest.mark.parametrize("k", [0, 4])
def test_cluster_rejects_bad_k(k):
    with pytest.raises(ValueError):
        cluster_1d([1, 2, 3], k)


def test_distribution_check_p1_passes(p1):
    check = distribution_check(decompose(p1))
    assert check.passed
    assert check.expected_signature == [2, 3, 1]


def test_distribution_check_p3_clusters(p3):
    check = distribution_check(decompose(p3))
    assert check.passed
    assert check.partition.clusters == [[-35, -35], [0, 5, 5], [45]]


@pytest.mark.parametrize("label", ["P1", "P2", "P3", "P4", "P5"])
def test_distribution_check_reference_pieces_pass(label, reference_frequencies):
    check = distribution_check(decompose(Piece(label=label, frequencies=reference_frequencies[label])))
    assert check.passed
    assert check.partition.signature == [2, 3, 1]


def test_distribution_check_rejects_rearranged_p1():
    check = distribution_check(decompose(Piece(frequencies=[120, 130, 170, 145])))
    assert not check.passed
    assert check.partition.signature == [3, 2, 1]


def test_distribution_check_explicit_signature(p1):
    check = distribution_check(decompose(p1), [3, 2, 1])
    assert not check.passed
    assert check.expected_signature == [3, 2, 1]


def test_distribution_check_too_few_values(p1):
    with pytest.raises(ValueError):
        distribution_check(decompose(p1), [1] * 7)


def test_distribution_check_other_lengths_report_partition():
    check = distribution_check(decompose(Piece(frequencies=[120, 160, 170, 145, 150])))
    assert check.passed
    assert check.expected_signature is None
    assert len(check.partition.signature) == 3


def test_surmise_at_zero():
    assert wigner_surmise_pdf(0.0) == 0


def test_surmise_at_one():
    expected = 32 / math.pi ** 2 * math.exp(-4 / math.pi)
    assert wigner_surmise_pdf(1.0) == pytest.approx(expected, abs=1e-12)
    assert wigner_surmise_pdf(1.0) == pytest.approx(0.9077, abs=0.001)


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_surmise_is_normalised_with_unit_mean(beta):
    params = SurmiseParams(beta=beta)
    area, _ = quad(lambda s: wigner_surmise_pdf(s, params), 0, 10)
    mean, _ = quad(lambda s: s * wigner_surmise_pdf(s, params), 0, 10)
    assert area == pytest.approx(1, abs=1e-6)
    assert mean == pytest.approx(1, abs=1e-6)


def test_surmise_rejects_negative_spacing():
    with pytest.raises(ValueError):
        wigner_surmise_pdf(-0.1)


def test_surmise_params_only_accept_known_ensembles():
    with pytest.raises(ValidationError):
        SurmiseParams(beta=3)


def test_poisson_pdf():
    assert poisson_pdf(0) == 1
    assert poisson_pdf(2) == pytest.approx(math.exp(-2))


@pytest.mark.parametrize("values,expected", [
    ([5, 5, 5, 5, 5], math.log(25)),
    ([5, 5, 15], 5.0166),
    ([25], math.log(625)),
])
def test_r_ratio(values, expected):
    assert r_ratio(values) == pytest.approx(expected, abs=0.001)


def test_spacing_lab_three_spacings():
    report = spacing_lab(3, 25, 5)
    assert [c.values for c in report.candidates] == [[5, 5, 15], [5, 10, 10]]
    assert report.best.values == [5, 5, 15]
    assert report.candidates[0].r == pytest.approx(5.017, abs=0.001)
    assert report.candidates[1].r == pytest.approx(4.451, abs=0.001)


@pytest.mark.parametrize("count,expected", [(1, [25]), (5, [5, 5, 5, 5, 5])])
def test_spacing_lab_forced_multisets(count, expected):
    report = spacing_lab(count, 25, 5)
    assert len(report.candidates) == 1
    assert report.best.values == expected


def test_spacing_lab_infeasible_is_empty():
    report = spacing_lab(3, 10, 5)
    assert report.candidates == []
    assert report.best is None
    assert report.histogram == []


def test_spacing_lab_histogram():
    report = spacing_lab(4, 40, 5, max_value=40)
    assert [b.value for b in report.histogram] == [5 * m for m in range(1, 9)]
    assert sum(b.count for b in report.histogram) == 4
    assert all(b.reference >= 0 for b in report.histogram)


def test_spacing_lab_same_result_for_any_worker_count():
    assert spacing_lab(4, 40, 5, workers=1) == spacing_lab(4, 40, 5, workers=3)


@pytest.mark.parametrize("kwargs", [
    {"count": 0, "target_sum": 25},
    {"count": 3, "target_sum": 27},
    {"count": 3, "target_sum": 25, "step": 0},
    {"count": 3, "target_sum": 25, "max_value": 12},
])
def test_spacing_lab_rejects_bad_grid(kwargs):
    with pytest.raises(ValueError):
        spacing_lab(**kwargs)


@pytest.mark.parametrize("count", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("target_sum", range(5, 65, 5))
def test_spacing_lab_best_is_never_all_equal(count, target_sum):
    report = spacing_lab(count, target_sum, 5)
    if len(report.candidates) < 2:
        return
    assert len(set(report.best.values)) > 1
