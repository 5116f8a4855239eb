"""Command-line interface.

    python -m app.cli score pieces/p1.json
    python -m app.cli sweep --level 25 --json
    python -m app.cli table1 --strict

Exit codes: 0 success, 1 validation/parse/usage error, 2 divergence under --strict.
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO

from .distribution import combined_distribution, distribution_check
from .experiments import (
    SPACING_COUNTS,
    SPACING_MAX,
    SPACING_STEP,
    SPACING_SUMS,
    LEVEL_WINNERS,
    compare_with_reference,
    level_sweeps,
    reproduce_energy_sweeps,
    reproduce_fig3,
    reproduce_table1,
)
from .measure import m_value
from .melody import decompose
from .models import ENTROPY_MODES, ExperimentReport, Piece, RegisterPolicy, SearchConfig
from .piece_io import (
    FORMATS,
    detect_format,
    normalize_register,
    parse_pieces,
    write_sweep_csv,
    write_values_csv,
)
from .search import energy_sweep, pattern_count, permutation_experiment
from .utils import DEFAULT_WORKERS, REGISTER_HIGH_HZ, REGISTER_LOW_HZ, format_pattern, truncate3

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DIVERGENCE = 2


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this CLI reserves 2 for divergences."""

    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common_flags() -> argparse.ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    common.add_argument("--csv", metavar="PATH", help="write histogram / figure data as CSV")
    common.add_argument("--entropy", choices=sorted(ENTROPY_MODES), default="cw", help="entropy form (default cw)")
    common.add_argument("--midi", action="store_true", help="delimited piece files hold MIDI note numbers")
    common.add_argument("--no-register-normalize", action="store_true", help="keep frequencies as given")
    common.add_argument("--format", choices=FORMATS, help="piece file format (default: from extension)")
    common.add_argument("--strict", action="store_true", help="exit 2 when an experiment diverges")
    common.add_argument("--workers", type=int, default=DEFAULT_WORKERS, help="evaluation threads")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging on stderr")
    return common


def build_parser() -> ArgumentParser:
    common = _common_flags()
    parser = ArgumentParser(prog="melody-aesthetics", description="Entropy-energy aesthetic measure for short melodies.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=ArgumentParser)
    sub.required = True

    for name, help_text in (
        ("score", "per-level entropy, energy, ratio and M"),
        ("decompose", "levels L1, transitions, within-direction differences, direction-sum difference"),
        ("permute", "score every arrangement of the piece's transitions"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("file")

    check = sub.add_parser("check", parents=[common], help="cluster-signature distribution check")
    check.add_argument("file")
    check.add_argument("--signature", type=_int_list, help="expected cluster sizes, e.g. 2,3,1")

    sweep = sub.add_parser("sweep", parents=[common], help="rank every grid pattern at one energy level")
    sweep.add_argument("--level", type=float, required=True)
    sweep.add_argument("--length", type=int, default=3)
    sweep.add_argument("--step", type=float, default=5)
    sweep.add_argument("--max", dest="max_magnitude", type=float, default=40)
    sweep.add_argument("--start", type=float, default=120)
    sweep.add_argument("--signature", type=_int_list)
    sweep.add_argument("--ranking", choices=("global", "per_multiset"), default="global")
    sweep.add_argument("--top", type=int, default=10, help="rows shown in human mode")

    sub.add_parser("table1", parents=[common], help="reproduce the reference M values")

    sweeps = sub.add_parser("sweeps", parents=[common], help="reproduce the energy-level sweeps")
    sweeps.add_argument("--levels", type=_int_list, default=list(LEVEL_WINNERS))

    fig3 = sub.add_parser("fig3", parents=[common], help="entropy-energy ratio of spacing multisets")
    fig3.add_argument("--count", type=_int_list, default=list(SPACING_COUNTS))
    fig3.add_argument("--sum", dest="sums", type=_float_list, default=list(SPACING_SUMS))
    fig3.add_argument("--step", type=float, default=SPACING_STEP)
    fig3.add_argument("--max", dest="max_value", type=float, default=SPACING_MAX)
    fig3.add_argument("--beta", type=int, choices=(1, 2, 4), default=2)
    return parser


def _load_pieces(args) -> List[Piece]:
    with open(args.file, "rb") as handle:
        document = handle.read()
    pieces = parse_pieces(document, args.format or detect_format(args.file), midi=args.midi)
    if args.no_register_normalize:
        return pieces
    policy = RegisterPolicy(low=REGISTER_LOW_HZ, high=REGISTER_HIGH_HZ)
    return [normalize_register(p, policy) for p in pieces]


def _emit_json(out: TextIO, payload: Any) -> None:
    out.write(json.dumps(payload, indent=2))
    out.write("\n")


def _write_csv(path: Optional[str], writer: Callable[[TextIO], None]) -> None:
    if not path:
        return
    with open(path, "w", newline="") as stream:
        writer(stream)
    logger.info("wrote %s", path)


def _single_or_list(payloads: List[Any]) -> Any:
    return payloads[0] if len(payloads) == 1 else payloads


def _piece_header(piece: Piece) -> str:
    return f"piece {piece.label or '-'}  [{format_pattern(piece.frequencies)}]"


def cmd_score(args, out: TextIO) -> int:
    mode = ENTROPY_MODES[args.entropy]
    pieces = _load_pieces(args)
    scores = [m_value(p, mode) for p in pieces]
    _write_csv(args.csv, lambda s: write_values_csv(s, [score.m for score in scores]))
    if args.json:
        _emit_json(out, _single_or_list([s.model_dump(mode="json") for s in scores]))
        return EXIT_OK

    for piece, score in zip(pieces, scores):
        out.write(_piece_header(piece) + "\n")
        out.write(f"{'level':<6}{'entropy':>14}{'energy':>12}{'ratio':>10}\n")
        for name, level in (("L1", score.l1), ("L2", score.l2), ("L3", score.l3)):
            out.write(f"{name:<6}{truncate3(level.entropy):>14}{truncate3(level.energy):>12}{truncate3(level.ratio):>10}\n")
        out.write(f"M = {truncate3(score.m)}\n")
    return EXIT_OK


def cmd_decompose(args, out: TextIO) -> int:
    pieces = _load_pieces(args)
    decompositions = [decompose(p) for p in pieces]
    _write_csv(args.csv, lambda s: write_values_csv(s, [v for d in decompositions for v in combined_distribution(d).values]))
    if args.json:
        _emit_json(out, _single_or_list([d.model_dump(mode="json") for d in decompositions]))
        return EXIT_OK

    for piece, dec in zip(pieces, decompositions):
        out.write(_piece_header(piece) + "\n")
        out.write(f"l1: {format_pattern(dec.l1)}\n")
        out.write(f"t:  {format_pattern(dec.t)}\n")
        out.write(f"w:  {format_pattern(dec.w)}\n")
        out.write(f"d:  {format_pattern([dec.d])}\n")
    return EXIT_OK


def cmd_check(args, out: TextIO) -> int:
    pieces = _load_pieces(args)
    decompositions = [decompose(p) for p in pieces]
    checks = [distribution_check(d, args.signature) for d in decompositions]
    _write_csv(args.csv, lambda s: write_values_csv(s, [v for d in decompositions for v in combined_distribution(d).values]))
    if args.json:
        _emit_json(out, _single_or_list([c.model_dump(mode="json") for c in checks]))
        return EXIT_OK

    for piece, check in zip(pieces, checks):
        expected = ",".join(map(str, check.expected_signature)) if check.expected_signature else "none"
        got = ",".join(map(str, check.partition.signature))
        out.write(_piece_header(piece) + "\n")
        for cluster in check.partition.clusters:
            out.write(f"  {{{format_pattern(cluster)}}}\n")
        out.write(f"signature {got} (expected {expected}): {'pass' if check.passed else 'fail'}\n")
    return EXIT_OK


def cmd_permute(args, out: TextIO) -> int:
    mode = ENTROPY_MODES[args.entropy]
    reports = [permutation_experiment(p, mode=mode, workers=args.workers) for p in _load_pieces(args)]
    _write_csv(args.csv, lambda s: write_values_csv(s, [c.frequency_ratio for r in reports for c in r.candidates if c.score]))
    if args.json:
        _emit_json(out, _single_or_list([r.model_dump(mode="json") for r in reports]))
        return EXIT_OK

    for report in reports:
        out.write(_piece_header(report.piece) + "\n")
        out.write(f"{'pattern':<20}{'passed':>8}{'f ratio':>10}{'L1 ratio':>10}{'M':>8}{'rank':>6}\n")
        for c in report.candidates:
            f = truncate3(c.frequency_ratio) if c.frequency_ratio is not None else "-"
            l1 = truncate3(c.score.l1.ratio) if c.score else "-"
            m = truncate3(c.score.m) if c.score else "-"
            marker = " *" if c.pattern == report.original else ""
            out.write(f"{format_pattern(c.pattern):<20}{'yes' if c.passed_filter else 'no':>8}{f:>10}{l1:>10}{m:>8}{c.rank or '-':>6}{marker}\n")
        out.write(f"original is max: {'yes' if report.original_is_max else 'no'}\n")
        out.write(f"original is max on shifted L1: {'yes' if report.shifted_original_is_max else 'no'}\n")
    return EXIT_OK


def cmd_sweep(args, out: TextIO) -> int:
    config = SearchConfig(
        length=args.length,
        step=args.step,
        max_magnitude=args.max_magnitude,
        start_frequency=args.start,
        target_level=args.level,
        signature=args.signature,
        ranking=args.ranking,
        entropy_mode=ENTROPY_MODES[args.entropy],
    )
    logger.info("sweep will evaluate %d patterns", pattern_count(config))
    report = energy_sweep(config, workers=args.workers)
    comparison = compare_with_reference(report) if config.ranking == "global" else None
    _write_csv(args.csv, lambda s: write_sweep_csv(s, [report]))
    if args.json:
        payload = report.model_dump(mode="json")
        if comparison and comparison["expected_winners"]:
            payload["reference"] = comparison
        _emit_json(out, payload)
        return EXIT_OK

    out.write(f"level {format_pattern([config.target_level])}: {report.pattern_count} patterns, {report.passing_count} pass the filter\n")
    flagged = {tuple(o["pattern"]) for o in comparison["outranking"]} if comparison else set()
    expected = {tuple(e["pattern"]): e["label"] for e in comparison["expected_winners"]} if comparison else {}
    out.write(f"{'rank':>4}  {'pattern':<20}{'M':>8}\n")
    for c in report.ranked()[: args.top]:
        note = ""
        if tuple(c.pattern) in expected:
            note = f"  {expected[tuple(c.pattern)]}"
        elif tuple(c.pattern) in flagged:
            note = "  outranks reference"
        out.write(f"{c.rank:>4}  {format_pattern(c.pattern):<20}{truncate3(c.score.m):>8}{note}\n")
    return EXIT_OK


def _render_report(report: ExperimentReport, out: TextIO) -> None:
    passed = len(report.claims) - len(report.divergences)
    out.write(f"{report.experiment_id}: {passed}/{len(report.claims)} claims pass\n")
    for claim in report.claims:
        computed = truncate3(claim.computed) if isinstance(claim.computed, float) else claim.computed
        line = f"  [{claim.verdict}] {claim.claim}: computed {computed}, expected {claim.expected}"
        if claim.note:
            line += f" ({claim.note})"
        out.write(line + "\n")


def _finish_report(args, report: ExperimentReport, out: TextIO) -> int:
    if args.json:
        _emit_json(out, report.model_dump(mode="json"))
    else:
        _render_report(report, out)
    if args.strict and report.divergences:
        return EXIT_DIVERGENCE
    return EXIT_OK


def cmd_table1(args, out: TextIO) -> int:
    report = reproduce_table1(ENTROPY_MODES[args.entropy])
    _write_csv(args.csv, lambda s: write_values_csv(s, [item["computed_m"] for item in report.items]))
    return _finish_report(args, report, out)


def cmd_sweeps(args, out: TextIO) -> int:
    sweeps = level_sweeps(args.levels, workers=args.workers)
    report = reproduce_energy_sweeps(args.levels, sweeps=sweeps)
    _write_csv(args.csv, lambda s: write_sweep_csv(s, [global_sweep for global_sweep, _ in sweeps], with_level=True))
    return _finish_report(args, report, out)


def cmd_fig3(args, out: TextIO) -> int:
    report = reproduce_fig3(args.count, args.sums, args.step, args.max_value, args.beta, workers=args.workers)
    _write_csv(args.csv, lambda s: write_values_csv(s, [v for item in report.items if item["best"] for v in item["best"]]))
    return _finish_report(args, report, out)


COMMANDS: Dict[str, Callable] = {
    "score": cmd_score,
    "decompose": cmd_decompose,
    "check": cmd_check,
    "permute": cmd_permute,
    "sweep": cmd_sweep,
    "table1": cmd_table1,
    "sweeps": cmd_sweeps,
    "fig3": cmd_fig3,
}


def _log_level(args) -> int:
    if args.verbose:
        return logging.DEBUG
    name = os.getenv("LOG_LEVEL", "WARNING").upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        raise ValueError(f"unknown LOG_LEVEL {name!r}")
    return level


def main(argv: Optional[Sequence[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        err.write(f"{e}\n")
        return EXIT_ERROR

    try:
        logging.basicConfig(level=_log_level(args), stream=err, format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args, out)
    except (ValueError, OSError) as e:
        err.write(f"error: {e}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
