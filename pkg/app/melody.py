"""Multilevel decomposition of a melodic piece.

A piece is split into three levels: the shifted frequencies (L1), the
transition pattern (L2) and the within-direction differences (L3). The
direction-sum difference is the scalar that joins the two directions.
"""

from typing import List, Sequence

from .models import Decomposition, DirectionGroups, Piece, TransitionPattern


def transitions(piece: Piece) -> TransitionPattern:
    """First differences of consecutive note frequencies."""
    f = piece.frequencies
    return TransitionPattern(deltas=[f[i + 1] - f[i] for i in range(len(f) - 1)])


def shift_to_min_one(values: Sequence[float]) -> List[float]:
    if not values:
        raise ValueError("cannot shift an empty list")
    offset = min(values) - 1
    return [v - offset for v in values]


def direction_split(t: TransitionPattern) -> DirectionGroups:
    """Group deltas globally by sign, keeping temporal order inside each group.

    Zero deltas (repeated notes) belong to neither direction.
    """
    return DirectionGroups(
        positive=[x for x in t.deltas if x > 0],
        negative=[x for x in t.deltas if x < 0],
        zeros=[x for x in t.deltas if x == 0],
    )


def _group_differences(group: List[float]) -> List[float]:
    if len(group) == 1:
        return list(group)
    return [group[i] - group[i + 1] for i in range(len(group) - 1)]


def within_direction_diffs(t: TransitionPattern) -> List[float]:
    groups = direction_split(t)
    result: List[float] = []
    for group in (groups.positive, groups.negative):
        if group:
            result.extend(_group_differences(group))
    result.extend(groups.zeros)
    return result


def direction_sum_diff(t: TransitionPattern) -> float:
    groups = direction_split(t)
    return sum(groups.positive) - sum(groups.negative)


def decompose(piece: Piece) -> Decomposition:
    t = transitions(piece)
    return Decomposition(
        l1=shift_to_min_one(piece.frequencies),
        t=list(t.deltas),
        w=within_direction_diffs(t),
        d=direction_sum_diff(t),
    )
