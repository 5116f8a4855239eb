"""Combined level distribution, cluster-signature check and spacing lab."""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

from scipy.special import gamma

from .measure import ratio
from .models import (
    DEFAULT_SIGNATURE,
    ClusterPartition,
    CombinedDistribution,
    Decomposition,
    DistributionCheck,
    HistogramBin,
    SpacingCandidate,
    SpacingLabReport,
    SurmiseParams,
    is_multiple,
)

logger = logging.getLogger(__name__)

DEFAULT_CLUSTERS = 3
SIGNATURE_NOTE_COUNT = 4


def combined_distribution(dec: Decomposition) -> CombinedDistribution:
    return CombinedDistribution(values=list(dec.t) + list(dec.w) + [dec.d])


def _segment_costs(data: List[float]) -> List[List[float]]:
    """cost[i][j] = within-cluster sum of squares of data[i:j]."""
    n = len(data)
    cost = [[0.0] * (n + 1) for _ in range(n + 1)]
    for i in range(n):
        s1 = 0.0
        s2 = 0.0
        for j in range(i, n):
            val = data[j]
            s1 += val
            s2 += val * val
            w = j - i + 1
            cost[i][j + 1] = max(s2 - (s1 * s1) / w, 0.0)
    return cost


def cluster_1d(values: Sequence[float], k: int) -> ClusterPartition:
    """Exact minimum-WCSS contiguous partition of the sorted values.

    Among optimal partitions the one with the leftmost split points wins.
    """
    data = sorted(float(v) for v in values)
    n = len(data)
    if k < 1:
        raise ValueError(f"cluster count must be at least 1, got {k}")
    if k > n:
        raise ValueError(f"cannot form {k} clusters from {n} values")

    # costs are translation-invariant; centring keeps s2 - s1^2/w accurate
    mean = math.fsum(data) / n
    cost = _segment_costs([v - mean for v in data])

    # best[m][i]: optimal cost of splitting data[i:] into m clusters
    inf = float("inf")
    best = [[inf] * (n + 1) for _ in range(k + 1)]
    for i in range(n):
        best[1][i] = cost[i][n]
    for m in range(2, k + 1):
        for i in range(n - m + 1):
            best[m][i] = min(cost[i][j] + best[m - 1][j] for j in range(i + 1, n - m + 2))

    tol = 1e-9 * (1.0 + best[k][0])
    splits = []
    i = 0
    for m in range(k, 1, -1):
        for j in range(i + 1, n - m + 2):
            if cost[i][j] + best[m - 1][j] <= best[m][i] + tol:
                splits.append(j)
                i = j
                break

    bounds = [0] + splits + [n]
    clusters = [data[bounds[c]:bounds[c + 1]] for c in range(k)]
    return ClusterPartition(
        clusters=clusters,
        signature=[len(c) for c in clusters],
        wcss=sum(cost[bounds[c]][bounds[c + 1]] for c in range(k)),
    )


def default_signature(note_count: int) -> Optional[Tuple[int, ...]]:
    return DEFAULT_SIGNATURE if note_count == SIGNATURE_NOTE_COUNT else None


def distribution_check(dec: Decomposition, expected_signature: Optional[Sequence[int]] = None) -> DistributionCheck:
    """Check that the combined levels split into the expected cluster sizes.

    Without an expected signature a 4-note piece uses (2, 3, 1); other lengths
    have no reference signature, so the partition is reported and the check
    passes.
    """
    values = combined_distribution(dec).values
    signature = expected_signature if expected_signature is not None else default_signature(len(dec.l1))

    if signature is None:
        partition = cluster_1d(values, min(DEFAULT_CLUSTERS, len(values)))
        return DistributionCheck(passed=True, expected_signature=None, partition=partition)

    signature = [int(s) for s in signature]
    if len(values) < len(signature):
        raise ValueError(f"{len(values)} values cannot form the {len(signature)} clusters of signature {signature}")
    partition = cluster_1d(values, len(signature))
    return DistributionCheck(
        passed=partition.signature == signature,
        expected_signature=signature,
        partition=partition,
    )


def _surmise_constants(beta: int) -> Tuple[float, float]:
    g_num = gamma((beta + 2) / 2)
    g_den = gamma((beta + 1) / 2)
    a = 2 * g_num ** (beta + 1) / g_den ** (beta + 2)
    b = (g_num / g_den) ** 2
    return a, b


def wigner_surmise_pdf(s: float, params: SurmiseParams = SurmiseParams()) -> float:
    """Wigner surmise for the orthogonal (1), unitary (2) or symplectic (4) ensemble,
    normalised to unit mean spacing."""
    if s < 0:
        raise ValueError(f"spacing must be non-negative, got {s}")
    a, b = _surmise_constants(params.beta)
    return float(a * s ** params.beta * math.exp(-b * s * s))


def poisson_pdf(s: float) -> float:
    """Uncorrelated (fully random) spacing reference."""
    if s < 0:
        raise ValueError(f"spacing must be non-negative, got {s}")
    return math.exp(-s)


def r_ratio(spacings: Sequence[float]) -> float:
    return ratio(spacings)


def _feasible_multisets(count: int, units: int, max_units: int) -> List[Tuple[int, ...]]:
    return [
        combo
        for combo in itertools.combinations_with_replacement(range(1, max_units + 1), count)
        if sum(combo) == units
    ]


def spacing_lab(
    count: int,
    target_sum: float,
    step: float = 5,
    max_value: Optional[float] = None,
    params: SurmiseParams = SurmiseParams(),
    workers: int = 1,
) -> SpacingLabReport:
    """Rank every multiset of `count` grid spacings summing to `target_sum` by R."""
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if target_sum <= 0 or not is_multiple(target_sum, step):
        raise ValueError(f"target_sum {target_sum} is not a positive multiple of step {step}")
    max_value = target_sum if max_value is None else max_value
    if max_value <= 0 or not is_multiple(max_value, step):
        raise ValueError(f"max_value {max_value} is not a positive multiple of step {step}")

    units = int(round(target_sum / step))
    max_units = int(round(max_value / step))
    multisets = [[m * step for m in combo] for combo in _feasible_multisets(count, units, max_units)]
    logger.debug("spacing lab n=%d S=%s: %d feasible multisets", count, target_sum, len(multisets))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        ratios = list(executor.map(r_ratio, multisets))

    candidates = [SpacingCandidate(values=values, r=r) for values, r in zip(multisets, ratios)]
    candidates.sort(key=lambda c: (-c.r, c.values))

    report = SpacingLabReport(
        count=count,
        target_sum=target_sum,
        step=step,
        max_value=max_value,
        beta=params.beta,
        candidates=candidates,
    )
    if not candidates:
        return report

    best = candidates[0]
    mean = target_sum / count
    histogram = [
        HistogramBin(
            value=m * step,
            count=sum(1 for v in best.values if v == m * step),
            reference=count * wigner_surmise_pdf(m * step / mean, params) * step / mean,
        )
        for m in range(1, max_units + 1)
    ]
    return report.model_copy(update={"best": best, "histogram": histogram})
