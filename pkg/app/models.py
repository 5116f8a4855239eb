from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DEFAULT_SIGNATURE: Tuple[int, ...] = (2, 3, 1)


def is_multiple(value: float, step: float) -> bool:
    quotient = value / step
    return abs(quotient - round(quotient)) < 1e-9


class EntropyMode(str, Enum):
    COIFMAN_WICKERHAUSER = "coifman_wickerhauser"
    SHANNON_NORMALIZED = "shannon_normalized"


ENTROPY_MODES = {"cw": EntropyMode.COIFMAN_WICKERHAUSER, "shannon": EntropyMode.SHANNON_NORMALIZED}


class Piece(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str = ""
    frequencies: List[float]

    @field_validator("frequencies")
    @classmethod
    def check_frequencies(cls, frequencies: List[float]) -> List[float]:
        if len(frequencies) < 2:
            raise ValueError(f"a piece needs at least 2 notes, got {len(frequencies)}")
        for index, frequency in enumerate(frequencies):
            if frequency <= 0:
                raise ValueError(f"frequency at index {index} must be positive, got {frequency}")
        return frequencies


class TransitionPattern(BaseModel):
    model_config = ConfigDict(frozen=True)

    deltas: List[float]


class DirectionGroups(BaseModel):
    model_config = ConfigDict(frozen=True)

    positive: List[float] = []
    negative: List[float] = []
    zeros: List[float] = []


class Decomposition(BaseModel):
    """The derived levels of a piece: shifted frequencies, transitions,
    within-direction differences and the direction-sum difference."""

    model_config = ConfigDict(frozen=True)

    l1: List[float]
    t: List[float]
    w: List[float]
    d: float


class LevelScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    entropy: float
    energy: float
    ratio: float


class AestheticScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str = ""
    mode: EntropyMode = EntropyMode.COIFMAN_WICKERHAUSER
    l1: LevelScore
    l2: LevelScore
    l3: LevelScore
    m: float


class CombinedDistribution(BaseModel):
    model_config = ConfigDict(frozen=True)

    values: List[float]


class ClusterPartition(BaseModel):
    model_config = ConfigDict(frozen=True)

    clusters: List[List[float]]
    signature: List[int]
    wcss: float


class DistributionCheck(BaseModel):
    passed: bool
    expected_signature: Optional[List[int]] = None
    partition: ClusterPartition


class SurmiseParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: int = 2

    @field_validator("beta")
    @classmethod
    def check_beta(cls, beta: int) -> int:
        if beta not in (1, 2, 4):
            raise ValueError(f"beta must be one of 1, 2, 4, got {beta}")
        return beta


class SpacingCandidate(BaseModel):
    values: List[float]
    r: float


class HistogramBin(BaseModel):
    value: float
    count: int
    reference: float


class SpacingLabReport(BaseModel):
    count: int
    target_sum: float
    step: float
    max_value: float
    beta: int = 2
    candidates: List[SpacingCandidate] = []
    best: Optional[SpacingCandidate] = None
    histogram: List[HistogramBin] = []


class SearchConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    length: int = 3
    step: float = 5
    max_magnitude: float = 40
    start_frequency: float = 120
    target_level: float
    signature: Optional[List[int]] = None
    ranking: Literal["global", "per_multiset"] = "global"
    entropy_mode: EntropyMode = EntropyMode.COIFMAN_WICKERHAUSER

    @model_validator(mode="after")
    def check_grid(self) -> "SearchConfig":
        if self.length < 1:
            raise ValueError(f"length must be at least 1, got {self.length}")
        if self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.start_frequency <= 0:
            raise ValueError(f"start_frequency must be positive, got {self.start_frequency}")
        if self.max_magnitude <= 0 or not is_multiple(self.max_magnitude, self.step):
            raise ValueError(f"max_magnitude {self.max_magnitude} is not a positive multiple of step {self.step}")
        if self.target_level < 0 or not is_multiple(self.target_level, self.step):
            raise ValueError(f"target_level {self.target_level} is not a multiple of step {self.step}")
        return self


class CandidateReport(BaseModel):
    pattern: List[float]
    piece: Optional[Piece] = None
    score: Optional[AestheticScore] = None
    signature: Optional[List[int]] = None
    passed_filter: bool = False
    rank: Optional[int] = None
    reason: Optional[str] = None
    # ratio of the unshifted note frequencies; set by the permutation experiment
    frequency_ratio: Optional[float] = None


class SweepReport(BaseModel):
    config: SearchConfig
    pattern_count: int
    passing_count: int
    candidates: List[CandidateReport]

    def ranked(self) -> List[CandidateReport]:
        passing = [c for c in self.candidates if c.rank is not None]
        return sorted(passing, key=lambda c: (c.rank, c.pattern))


class PermutationReport(BaseModel):
    """Arrangements of one piece's transitions.

    `original_is_max` judges the unshifted note frequencies; the shifted
    first level (L1) is reported alongside as `shifted_original_is_max`.
    """

    piece: Piece
    original: List[float]
    candidates: List[CandidateReport]
    original_passes: bool
    original_is_max: bool
    best_frequency_ratio: Optional[float] = None
    shifted_original_is_max: bool
    best_l1_ratio: Optional[float] = None
    best_l1_pattern: Optional[List[float]] = None


class ClaimVerdict(BaseModel):
    claim: str
    reference: str
    expected: Any = None
    computed: Any = None
    tolerance: Optional[float] = None
    verdict: Literal["pass", "divergence"]
    note: str = ""


class ExperimentReport(BaseModel):
    experiment_id: str
    inputs: Dict[str, Any]
    items: List[Dict[str, Any]] = []
    claims: List[ClaimVerdict] = []

    @property
    def divergences(self) -> List[ClaimVerdict]:
        return [c for c in self.claims if c.verdict == "divergence"]


class PieceFile(BaseModel):
    label: str = ""
    frequencies: Optional[List[float]] = None
    midi_notes: Optional[List[int]] = None

    @model_validator(mode="after")
    def check_exclusive(self) -> "PieceFile":
        if (self.frequencies is None) == (self.midi_notes is None):
            raise ValueError("exactly one of 'frequencies' or 'midi_notes' must be present")
        return self


class RegisterPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    low: float = 100.0
    high: float = 300.0
    enabled: bool = True

    @model_validator(mode="after")
    def check_band(self) -> "RegisterPolicy":
        if not 0 < self.low < self.high:
            raise ValueError(f"register band needs 0 < low < high, got [{self.low}, {self.high}]")
        return self


class CheckRequest(BaseModel):
    piece: Piece
    signature: Optional[List[int]] = None


class SpacingLabRequest(BaseModel):
    count: int = Field(ge=1)
    target_sum: float = Field(gt=0)
    step: float = Field(default=5, gt=0)
    max_value: Optional[float] = None
    beta: int = 2
