"""Entropy-energy aesthetic measure.

Each level contributes entropy / energy; M is the scaled sum over the three
levels. The default entropy is the unnormalised sum of v^2 ln(v^2), which
with natural logs and a 1/10 scale reproduces the reference M values.
"""

import logging
from typing import Sequence

import numpy as np

from .melody import decompose
from .models import AestheticScore, Decomposition, EntropyMode, LevelScore, Piece

logger = logging.getLogger(__name__)

SCALE_FACTOR = 0.1
MIN_NOTES = 3


def _squares(values: Sequence[float]) -> np.ndarray:
    # sorted so that permuted inputs sum identically
    return np.sort(np.square(np.asarray(values, dtype=float)))


def _xlogx(sq: np.ndarray) -> np.ndarray:
    # 0 * ln(0) := 0
    out = np.zeros_like(sq)
    np.log(sq, out=out, where=sq > 0)
    return sq * out


def energy(values: Sequence[float]) -> float:
    return float(np.sum(_squares(values)))


def entropy(values: Sequence[float], mode: EntropyMode = EntropyMode.COIFMAN_WICKERHAUSER) -> float:
    sq = _squares(values)
    if mode == EntropyMode.COIFMAN_WICKERHAUSER:
        return float(np.sum(_xlogx(sq)))

    total = float(np.sum(sq))
    if total == 0:
        return 0.0
    p = sq / total
    return float(-np.sum(_xlogx(p)))


def level_score(values: Sequence[float], mode: EntropyMode = EntropyMode.COIFMAN_WICKERHAUSER) -> LevelScore:
    e = energy(values)
    h = entropy(values, mode)
    return LevelScore(entropy=h, energy=e, ratio=h / e if e > 0 else 0.0)


def ratio(values: Sequence[float], mode: EntropyMode = EntropyMode.COIFMAN_WICKERHAUSER) -> float:
    return level_score(values, mode).ratio


def score_decomposition(
    dec: Decomposition,
    mode: EntropyMode = EntropyMode.COIFMAN_WICKERHAUSER,
    label: str = "",
) -> AestheticScore:
    """Score the three levels of a decomposition without any length check."""
    l1 = level_score(dec.l1, mode)
    l2 = level_score(dec.t, mode)
    l3 = level_score(dec.w, mode)
    m = SCALE_FACTOR * (l1.ratio + l2.ratio + l3.ratio)
    return AestheticScore(label=label, mode=mode, l1=l1, l2=l2, l3=l3, m=m)


def m_value(piece: Piece, mode: EntropyMode = EntropyMode.COIFMAN_WICKERHAUSER) -> AestheticScore:
    if len(piece.frequencies) < MIN_NOTES:
        raise ValueError(
            f"level L3 (within-direction differences) needs at least {MIN_NOTES} notes; "
            f"piece '{piece.label}' has {len(piece.frequencies)}"
        )
    score = score_decomposition(decompose(piece), mode, label=piece.label)
    logger.debug("scored %s: M=%.6f", piece.label or piece.frequencies, score.m)
    return score
