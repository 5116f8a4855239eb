"""Canned reproductions of the reference results.

Each experiment is a pure function of its inputs and returns an
ExperimentReport holding the inputs, per-item detail and one verdict per
claim. A claim that the reconstruction does not reproduce is recorded as a
divergence; it never aborts the run.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .distribution import spacing_lab
from .measure import SCALE_FACTOR, m_value
from .melody import transitions
from .models import (
    CandidateReport,
    ClaimVerdict,
    EntropyMode,
    ExperimentReport,
    Piece,
    SearchConfig,
    SurmiseParams,
    SweepReport,
)
from .search import energy_sweep, permutation_experiment
from .utils import DEFAULT_WORKERS, format_pattern

logger = logging.getLogger(__name__)

REFERENCE_PIECES: Dict[str, List[float]] = {
    "P1": [120, 160, 170, 145],
    "P2": [120, 155, 150, 130],
    "P3": [120, 125, 130, 95],
    "P4": [120, 135, 140, 135],
    "P5": [120, 125, 120, 105],
}
REFERENCE_M: Dict[str, float] = {"P1": 2.118, "P2": 2.055, "P3": 2.098, "P4": 1.513, "P5": 1.513}
M_TOLERANCE = 0.002
SYMMETRY_TOLERANCE = 1e-12

# energy level -> pieces reported as the best at that level
LEVEL_WINNERS: Dict[int, List[str]] = {25: ["P4", "P5"], 45: ["P3"], 60: ["P2"], 75: ["P1"]}

SPACING_COUNTS = (3, 4, 5)
SPACING_SUMS = (25, 40, 60)
SPACING_STEP = 5
SPACING_MAX = 40

TABLE_REF = "reference table: M values of the five test pieces"
PERMUTATION_REF = "results: original arrangement has the highest first-level ratio"
SWEEP_REF = "results: highest M per energy level"
SPACING_REF = "spacing comparison: the surmise-like shape has the highest R"


def reference_pieces() -> List[Piece]:
    return [Piece(label=label, frequencies=freqs) for label, freqs in REFERENCE_PIECES.items()]


def reproduce_table1(mode: EntropyMode = EntropyMode.COIFMAN_WICKERHAUSER) -> ExperimentReport:
    items = []
    claims = []
    scores = {}
    for piece in reference_pieces():
        score = m_value(piece, mode)
        scores[piece.label] = score
        expected = REFERENCE_M[piece.label]
        items.append({
            "label": piece.label,
            "frequencies": piece.frequencies,
            "expected_m": expected,
            "computed_m": score.m,
            "l1_ratio": score.l1.ratio,
            "l2_ratio": score.l2.ratio,
            "l3_ratio": score.l3.ratio,
        })
        claims.append(ClaimVerdict(
            claim=f"M({piece.label})",
            reference=TABLE_REF,
            expected=expected,
            computed=score.m,
            tolerance=M_TOLERANCE,
            verdict="pass" if abs(score.m - expected) <= M_TOLERANCE else "divergence",
        ))

    gap = abs(scores["P4"].m - scores["P5"].m)
    claims.append(ClaimVerdict(
        claim="M(P4) = M(P5)",
        reference=TABLE_REF,
        expected=0.0,
        computed=gap,
        tolerance=SYMMETRY_TOLERANCE,
        verdict="pass" if gap <= SYMMETRY_TOLERANCE else "divergence",
        note="identical squared-value multisets at every level",
    ))
    report = ExperimentReport(
        experiment_id="table1",
        inputs={"pieces": REFERENCE_PIECES, "tolerance": M_TOLERANCE, "scale_factor": SCALE_FACTOR, "entropy_mode": mode.value},
        items=items,
        claims=claims,
    )
    logger.info("table1: %d/%d claims pass", len(claims) - len(report.divergences), len(claims))
    return report


def _arrangement_row(candidate: CandidateReport) -> Dict[str, Any]:
    return {
        "pattern": candidate.pattern,
        "passed_filter": candidate.passed_filter,
        "signature": candidate.signature,
        "rank": candidate.rank,
        "frequency_ratio": candidate.frequency_ratio,
        "l1_ratio": candidate.score.l1.ratio if candidate.score else None,
        "l2_ratio": candidate.score.l2.ratio if candidate.score else None,
        "m": candidate.score.m if candidate.score else None,
        "reason": candidate.reason,
    }


def reproduce_permutation_claims(workers: int = DEFAULT_WORKERS) -> ExperimentReport:
    """The original arrangement against every rearrangement of its transitions.

    The claim is judged on the unshifted note frequencies. The shifted L1
    reading is kept in the items; where it disagrees (P3, whose [5 -35 5]
    has the higher shifted ratio) the claim carries a note.
    """
    items = []
    claims = []
    for piece in reference_pieces():
        report = permutation_experiment(piece, workers=workers)
        l2_ratios = [c.score.l2.ratio for c in report.candidates if c.score]
        spread = max(l2_ratios) - min(l2_ratios)
        items.append({
            "label": piece.label,
            "original": report.original,
            "original_passes": report.original_passes,
            "original_is_max": report.original_is_max,
            "best_frequency_ratio": report.best_frequency_ratio,
            "shifted_original_is_max": report.shifted_original_is_max,
            "best_l1_ratio": report.best_l1_ratio,
            "best_l1_pattern": report.best_l1_pattern,
            "l2_ratio_spread": spread,
            "arrangements": [_arrangement_row(c) for c in report.candidates],
        })
        note = ""
        if not report.shifted_original_is_max:
            note = f"shifted L1 reading diverges: [{format_pattern(report.best_l1_pattern or [])}] has the higher L1 ratio"
            logger.warning("%s: %s", piece.label, note)
        claims.append(ClaimVerdict(
            claim=f"{piece.label}: original arrangement has the highest frequency ratio among passing arrangements",
            reference=PERMUTATION_REF,
            expected=True,
            computed=report.original_is_max,
            verdict="pass" if report.original_is_max else "divergence",
            note=note,
        ))
        claims.append(ClaimVerdict(
            claim=f"{piece.label}: L2 ratio identical across arrangements",
            reference=PERMUTATION_REF,
            expected=0.0,
            computed=spread,
            tolerance=SYMMETRY_TOLERANCE,
            verdict="pass" if spread <= SYMMETRY_TOLERANCE else "divergence",
        ))
    return ExperimentReport(
        experiment_id="permutations",
        inputs={"pieces": REFERENCE_PIECES, "signature": [2, 3, 1], "judged_level": "unshifted frequencies"},
        items=items,
        claims=claims,
    )


def _breakdown(candidate: CandidateReport) -> Dict[str, Any]:
    return {
        "pattern": candidate.pattern,
        "rank": candidate.rank,
        "signature": candidate.signature,
        "score": candidate.score.model_dump(mode="json") if candidate.score else None,
    }


def _find_pattern(candidates: List[CandidateReport], pattern: List[float]) -> Optional[CandidateReport]:
    return next((c for c in candidates if c.pattern == pattern), None)


def compare_with_reference(global_sweep: SweepReport, class_sweep: Optional[SweepReport] = None) -> Dict[str, Any]:
    """Locate the reference winners of a sweep's level and list every candidate ranked above them."""
    pieces = {p.label: p for p in reference_pieces()}
    level = int(round(global_sweep.config.target_level))
    expected = []
    for label in LEVEL_WINNERS.get(level, []):
        pattern = list(transitions(pieces[label]).deltas)
        found = _find_pattern(global_sweep.candidates, pattern)
        in_class = _find_pattern(class_sweep.candidates, pattern) if class_sweep else None
        expected.append({
            "label": label,
            "pattern": pattern,
            "rank": found.rank if found else None,
            "rank_in_arrangement_class": in_class.rank if in_class else None,
            "m": found.score.m if found and found.score else None,
        })

    ranks = [e["rank"] for e in expected if e["rank"] is not None]
    present = len(ranks) == len(expected)
    cutoff = max(ranks) if present and ranks else len(expected) + 1
    expected_patterns = [e["pattern"] for e in expected]
    outranking = [
        _breakdown(c) for c in global_sweep.ranked()
        if c.rank < cutoff and c.pattern not in expected_patterns
    ]
    return {
        "level": level,
        "expected_winners": expected,
        "outranking": outranking,
        "reproduced": bool(expected) and present and not outranking,
    }


def level_sweeps(
    levels: Sequence[int] = tuple(LEVEL_WINNERS),
    workers: int = DEFAULT_WORKERS,
) -> List[Tuple[SweepReport, SweepReport]]:
    """Global and per-arrangement-class sweeps for each level."""
    return [
        (
            energy_sweep(SearchConfig(target_level=level), workers=workers),
            energy_sweep(SearchConfig(target_level=level, ranking="per_multiset"), workers=workers),
        )
        for level in levels
    ]


def reproduce_energy_sweeps(
    levels: Sequence[int] = tuple(LEVEL_WINNERS),
    workers: int = DEFAULT_WORKERS,
    sweeps: Optional[List[Tuple[SweepReport, SweepReport]]] = None,
) -> ExperimentReport:
    if sweeps is None:
        sweeps = level_sweeps(levels, workers)
    items = []
    claims = []
    for level, (global_sweep, class_sweep) in zip(levels, sweeps):
        comparison = compare_with_reference(global_sweep, class_sweep)
        expected = comparison["expected_winners"]
        outranking = comparison["outranking"]

        items.append({
            "level": level,
            "pattern_count": global_sweep.pattern_count,
            "passing_count": global_sweep.passing_count,
            "expected_winners": expected,
            "outranking": outranking,
            "top": [_breakdown(c) for c in global_sweep.ranked()[:5]],
        })
        if not expected:
            continue

        reproduced = comparison["reproduced"]
        names = " and ".join(e["label"] for e in expected)
        note = ""
        if not reproduced:
            missing = [e["label"] for e in expected if e["rank"] is None]
            parts = []
            if missing:
                parts.append("filtered out: " + ", ".join(missing))
            if outranking:
                parts.append("outranked by " + ", ".join(f"[{format_pattern(o['pattern'])}]" for o in outranking))
            note = "; ".join(parts)
            logger.warning("level %d diverges: %s", level, note)
        claims.append(ClaimVerdict(
            claim=f"level {level}: {names} rank first among passing candidates",
            reference=SWEEP_REF,
            expected=list(range(1, len(expected) + 1)),
            computed=[e["rank"] for e in expected],
            verdict="pass" if reproduced else "divergence",
            note=note,
        ))
        class_ranks = [e["rank_in_arrangement_class"] for e in expected]
        claims.append(ClaimVerdict(
            claim=f"level {level}: {names} rank first within their arrangement class",
            reference=SWEEP_REF,
            expected=[1] * len(expected),
            computed=class_ranks,
            verdict="pass" if all(r == 1 for r in class_ranks) else "divergence",
        ))

    return ExperimentReport(
        experiment_id="sweeps",
        inputs={
            "levels": list(levels),
            "config": SearchConfig(target_level=0).model_dump(mode="json", exclude={"target_level"}),
            "rankings": ["global", "per_multiset"],
        },
        items=items,
        claims=claims,
    )


def _is_skewed(values: List[float]) -> bool:
    """More spacings below the mean than above it."""
    mean = sum(values) / len(values)
    below = sum(1 for v in values if v < mean)
    above = sum(1 for v in values if v > mean)
    return below > above


def reproduce_fig3(
    counts: Sequence[int] = SPACING_COUNTS,
    sums: Sequence[float] = SPACING_SUMS,
    step: float = SPACING_STEP,
    max_value: float = SPACING_MAX,
    beta: int = 2,
    workers: int = DEFAULT_WORKERS,
) -> ExperimentReport:
    params = SurmiseParams(beta=beta)
    items = []
    claims = []
    for count in counts:
        for target in sums:
            lab = spacing_lab(count, target, step, max_value=max_value, params=params, workers=workers)
            feasible = len(lab.candidates)
            items.append({
                "count": count,
                "target_sum": target,
                "feasible": feasible,
                "best": lab.best.values if lab.best else None,
                "best_r": lab.best.r if lab.best else None,
                "runner_up": lab.candidates[1].model_dump(mode="json") if feasible > 1 else None,
                "histogram": [b.model_dump(mode="json") for b in lab.histogram],
            })
            if not lab.best:
                continue

            values = lab.best.values
            if feasible == 1:
                verdict, note = "pass", "only feasible multiset"
            else:
                all_equal = len(set(values)) == 1
                verdict = "pass" if not all_equal and _is_skewed(values) else "divergence"
                note = "" if verdict == "pass" else "argmax is not skewed toward small spacings"
            claims.append(ClaimVerdict(
                claim=f"n={count}, S={target:g}: argmax-R multiset has more low spacings than high",
                reference=SPACING_REF,
                expected="skewed",
                computed=values,
                verdict=verdict,
                note=note,
            ))

    return ExperimentReport(
        experiment_id="fig3",
        inputs={"counts": list(counts), "sums": list(sums), "step": step, "max_value": max_value, "beta": beta},
        items=items,
        claims=claims,
    )


EXPERIMENTS = {
    "table1": reproduce_table1,
    "permutations": reproduce_permutation_claims,
    "sweeps": reproduce_energy_sweeps,
    "fig3": reproduce_fig3,
}


def run_experiment(experiment_id: str) -> ExperimentReport:
    try:
        runner = EXPERIMENTS[experiment_id]
    except KeyError:
        raise ValueError(f"unknown experiment {experiment_id!r}, expected one of {sorted(EXPERIMENTS)}") from None
    return runner()
