"""Brute-force search over transition patterns.

Two engines: every distinct arrangement of one piece's transitions, and every
signed grid pattern at a fixed energy level. Candidates are evaluated
independently, so evaluation may run on a thread pool; reports are assembled
in enumeration order and ranked with explicit tie-breaking, which keeps them
identical for any worker count.

Cost: a level sweep evaluates pattern_count(config) candidates, i.e. the
number of magnitude compositions times 2**length; arrangements grow as the
multinomial coefficient of the delta multiset.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .distribution import distribution_check
from .measure import ratio, score_decomposition
from .melody import decompose, transitions
from .models import (
    CandidateReport,
    EntropyMode,
    Piece,
    PermutationReport,
    SearchConfig,
    SweepReport,
    TransitionPattern,
)
from .utils import DEFAULT_WORKERS, format_pattern

logger = logging.getLogger(__name__)

RATIO_TOLERANCE = 1e-12


class RealizationError(ValueError):
    def __init__(self, index: int, frequency: float):
        self.index = index
        self.frequency = frequency
        super().__init__(f"frequency at index {index} would be {frequency:g}, must stay positive")


def energy_level(t: TransitionPattern) -> float:
    """Sum of absolute transitions; pieces are compared only within one level."""
    return float(sum(abs(x) for x in t.deltas))


def arrangements(t: TransitionPattern) -> List[TransitionPattern]:
    """All distinct permutations of the deltas, in lexicographic order."""
    return [TransitionPattern(deltas=list(p)) for p in sorted(set(itertools.permutations(t.deltas)))]


def realize(pattern: TransitionPattern, start: float) -> List[float]:
    """Cumulative frequencies of a pattern played from `start`.

    An empty pattern realizes to the single start note.
    """
    if start <= 0:
        raise RealizationError(0, start)
    frequencies = [float(start)]
    for index, delta in enumerate(pattern.deltas, start=1):
        nxt = frequencies[-1] + delta
        if nxt <= 0:
            raise RealizationError(index, nxt)
        frequencies.append(nxt)
    return frequencies


def realize_piece(pattern: TransitionPattern, start: float, label: str = "") -> Piece:
    return Piece(label=label or format_pattern(pattern.deltas), frequencies=realize(pattern, start))


def _compositions(units: int, parts: int, max_part: int) -> Iterator[Tuple[int, ...]]:
    if parts == 0:
        if units == 0:
            yield ()
        return
    for first in range(1, min(max_part, units - (parts - 1)) + 1):
        for rest in _compositions(units - first, parts - 1, max_part):
            yield (first,) + rest


def _grid_units(config: SearchConfig) -> Tuple[int, int]:
    return int(round(config.target_level / config.step)), int(round(config.max_magnitude / config.step))


def pattern_count(config: SearchConfig) -> int:
    units, max_units = _grid_units(config)
    # ways[p][u]: compositions of u into p parts bounded by max_units
    ways = [[0] * (units + 1) for _ in range(config.length + 1)]
    ways[0][0] = 1
    for p in range(1, config.length + 1):
        for u in range(units + 1):
            ways[p][u] = sum(ways[p - 1][u - m] for m in range(1, min(max_units, u) + 1))
    return ways[config.length][units] * 2 ** config.length


def enumerate_patterns(config: SearchConfig) -> List[TransitionPattern]:
    units, max_units = _grid_units(config)
    patterns = [
        [sign * m * config.step for sign, m in zip(signs, magnitudes)]
        for magnitudes in _compositions(units, config.length, max_units)
        for signs in itertools.product((-1, 1), repeat=config.length)
    ]
    patterns.sort()
    return [TransitionPattern(deltas=p) for p in patterns]


def evaluate_candidate(
    pattern: TransitionPattern,
    start: float,
    signature: Optional[Sequence[int]] = None,
    mode: EntropyMode = EntropyMode.COIFMAN_WICKERHAUSER,
) -> CandidateReport:
    try:
        piece = realize_piece(pattern, start)
    except RealizationError as e:
        return CandidateReport(pattern=list(pattern.deltas), reason=str(e))

    dec = decompose(piece)
    check = distribution_check(dec, signature)
    score = score_decomposition(dec, mode, label=piece.label)
    reason = None
    if not check.passed:
        reason = f"cluster signature {check.partition.signature} differs from {check.expected_signature}"
    return CandidateReport(
        pattern=list(pattern.deltas),
        piece=piece,
        score=score,
        signature=check.partition.signature,
        passed_filter=check.passed,
        reason=reason,
    )


def _evaluate_all(
    patterns: List[TransitionPattern],
    start: float,
    signature: Optional[Sequence[int]],
    mode: EntropyMode,
    workers: int,
) -> List[CandidateReport]:
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        return list(executor.map(lambda p: evaluate_candidate(p, start, signature, mode), patterns))


def _assign_ranks(candidates: List[CandidateReport], key, group_key=None) -> List[CandidateReport]:
    groups: Dict[Tuple, List[int]] = {}
    for index, candidate in enumerate(candidates):
        if candidate.passed_filter:
            group = group_key(candidate) if group_key else ()
            groups.setdefault(group, []).append(index)

    ranks: Dict[int, int] = {}
    for indices in groups.values():
        ordered = sorted(indices, key=lambda i: key(candidates[i]))
        for rank, index in enumerate(ordered, start=1):
            ranks[index] = rank
    return [c.model_copy(update={"rank": ranks.get(i)}) for i, c in enumerate(candidates)]


def _is_max(value: float, best: Optional[float]) -> bool:
    return best is not None and value >= best - RATIO_TOLERANCE * max(1.0, abs(best))


def permutation_experiment(
    piece: Piece,
    signature: Optional[Sequence[int]] = None,
    mode: EntropyMode = EntropyMode.COIFMAN_WICKERHAUSER,
    workers: int = DEFAULT_WORKERS,
) -> PermutationReport:
    """Score every arrangement of the piece's transitions from its first note.

    Among arrangements that pass the distribution check, the original is
    expected to reach the highest ratio of the unshifted note frequencies.
    Arrangements are ranked by that ratio. The shifted L1 ratio is checked the
    same way and reported next to it; the two readings can disagree.
    """
    t = transitions(piece)
    candidates = _evaluate_all(arrangements(t), piece.frequencies[0], signature, mode, workers)
    candidates = [
        c.model_copy(update={"frequency_ratio": ratio(c.piece.frequencies, mode)}) if c.piece else c
        for c in candidates
    ]
    candidates = _assign_ranks(candidates, key=lambda c: (-c.frequency_ratio, c.pattern))

    original = next(c for c in candidates if c.pattern == list(t.deltas))
    passing = [c for c in candidates if c.passed_filter]
    best_frequency = max((c.frequency_ratio for c in passing), default=None)
    best_l1 = min(passing, key=lambda c: (-c.score.l1.ratio, c.pattern), default=None)

    if len(candidates) == 1:
        original_is_max = shifted_is_max = True
    else:
        original_is_max = original.passed_filter and _is_max(original.frequency_ratio, best_frequency)
        shifted_is_max = original.passed_filter and best_l1 is not None and _is_max(
            original.score.l1.ratio, best_l1.score.l1.ratio
        )
    logger.debug("permutations of %s: %d arrangements, %d passing", piece.label, len(candidates), len(passing))
    return PermutationReport(
        piece=piece,
        original=list(t.deltas),
        candidates=candidates,
        original_passes=original.passed_filter,
        original_is_max=original_is_max,
        best_frequency_ratio=best_frequency,
        shifted_original_is_max=shifted_is_max,
        best_l1_ratio=best_l1.score.l1.ratio if best_l1 else None,
        best_l1_pattern=best_l1.pattern if best_l1 else None,
    )


def energy_sweep(config: SearchConfig, workers: int = DEFAULT_WORKERS) -> SweepReport:
    """Evaluate every grid pattern at the configured energy level and rank by M."""
    patterns = enumerate_patterns(config)
    logger.info("sweep at level %g: %d patterns", config.target_level, len(patterns))

    candidates = _evaluate_all(patterns, config.start_frequency, config.signature, config.entropy_mode, workers)
    group_key = (lambda c: tuple(sorted(c.pattern))) if config.ranking == "per_multiset" else None
    candidates = _assign_ranks(candidates, key=lambda c: (-c.score.m, c.pattern), group_key=group_key)

    return SweepReport(
        config=config,
        pattern_count=len(patterns),
        passing_count=sum(1 for c in candidates if c.passed_filter),
        candidates=candidates,
    )
