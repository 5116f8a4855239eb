"""Piece ingestion, serialization, register normalization and figure data."""

import csv
import json
import logging
import math
from typing import Iterable, List, Optional, Sequence, TextIO

import numpy as np
from pydantic import ValidationError

from .models import Piece, PieceFile, RegisterPolicy, SweepReport
from .utils import format_number, format_pattern

logger = logging.getLogger(__name__)

STRUCTURED = "structured"
DELIMITED = "delimited"
FORMATS = (STRUCTURED, DELIMITED)

MIDI_MIN = 0
MIDI_MAX = 127
A4_NOTE = 69
A4_HZ = 440.0


class PieceParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


def midi_to_frequency(note: int) -> float:
    """Equal-temperament frequency of a MIDI note number (A4 = 69 = 440 Hz)."""
    if isinstance(note, bool) or int(note) != note or not MIDI_MIN <= note <= MIDI_MAX:
        raise ValueError(f"MIDI note must be an integer in [{MIDI_MIN}, {MIDI_MAX}], got {note}")
    return A4_HZ * 2 ** ((int(note) - A4_NOTE) / 12)


def detect_format(filename: str) -> str:
    return STRUCTURED if filename.lower().endswith(".json") else DELIMITED


def _to_piece(entry: PieceFile, line: Optional[int] = None) -> Piece:
    if entry.midi_notes is not None:
        frequencies = []
        for index, note in enumerate(entry.midi_notes):
            try:
                frequencies.append(midi_to_frequency(note))
            except ValueError as e:
                raise PieceParseError(str(e), line=line, field=f"midi_notes[{index}]") from e
        field = "midi_notes"
    else:
        frequencies = entry.frequencies
        field = "frequencies"
    try:
        return Piece(label=entry.label, frequencies=frequencies)
    except ValidationError as e:
        raise PieceParseError(e.errors()[0]["msg"], line=line, field=field) from e


def _parse_structured(text: str) -> List[Piece]:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise PieceParseError(e.msg, line=e.lineno, field=f"column {e.colno}") from e

    entries = document if isinstance(document, list) else [document]
    pieces = []
    for position, raw in enumerate(entries):
        if not isinstance(raw, dict):
            raise PieceParseError("expected an object with 'label' and 'frequencies' or 'midi_notes'", field=f"[{position}]")
        try:
            entry = PieceFile(**raw)
        except ValidationError as e:
            error = e.errors()[0]
            location = ".".join(str(part) for part in error["loc"]) or "document"
            raise PieceParseError(error["msg"], field=location) from e
        pieces.append(_to_piece(entry))
    return pieces


def _parse_delimited(text: str, midi: bool) -> List[Piece]:
    pieces = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = [f.strip() for f in stripped.split(",")]
        label, raw_numbers = fields[0], fields[1:]
        numbers = []
        for field_no, raw in enumerate(raw_numbers, start=2):
            try:
                numbers.append(int(raw) if midi else float(raw))
            except ValueError as e:
                kind = "integer MIDI note" if midi else "number"
                raise PieceParseError(f"expected a {kind}, got {raw!r}", line=line_no, field=str(field_no)) from e
        if not numbers:
            raise PieceParseError("empty note list", line=line_no, field="2")
        entry = PieceFile(label=label, midi_notes=numbers) if midi else PieceFile(label=label, frequencies=numbers)
        pieces.append(_to_piece(entry, line=line_no))
    return pieces


def parse_pieces(document: bytes, format: str = STRUCTURED, midi: bool = False) -> List[Piece]:
    if format not in FORMATS:
        raise ValueError(f"unknown piece format {format!r}, expected one of {FORMATS}")
    try:
        text = document.decode("utf-8")
    except UnicodeDecodeError as e:
        raise PieceParseError(f"document is not UTF-8: {e.reason}") from e

    pieces = _parse_structured(text) if format == STRUCTURED else _parse_delimited(text, midi)
    if not pieces:
        raise PieceParseError("document contains no piece")
    logger.debug("parsed %d piece(s) from %s document", len(pieces), format)
    return pieces


def parse_piece(document: bytes, format: str = STRUCTURED, midi: bool = False) -> Piece:
    pieces = parse_pieces(document, format, midi)
    if len(pieces) != 1:
        raise PieceParseError(f"expected exactly one piece, found {len(pieces)}")
    return pieces[0]


def _json_number(value: float):
    return int(value) if float(value).is_integer() else value


def _delimited_label_error(label: str) -> Optional[str]:
    """Why the delimited reader would not give `label` back, or None."""
    if "," in label:
        return "contains the field delimiter"
    if "".join(label.splitlines()) != label:
        return "contains a line break"
    if label != label.strip():
        return "has surrounding whitespace"
    if label.startswith("#"):
        return "would be read as a comment"
    return None


def serialize_piece(piece: Piece, format: str = STRUCTURED) -> bytes:
    if format == STRUCTURED:
        document = {"label": piece.label, "frequencies": [_json_number(f) for f in piece.frequencies]}
        return (json.dumps(document) + "\n").encode("utf-8")
    if format == DELIMITED:
        problem = _delimited_label_error(piece.label)
        if problem:
            raise ValueError(f"label {piece.label!r} cannot be written to a delimited document: {problem}")
        return (",".join([piece.label] + [format_number(f) for f in piece.frequencies]) + "\n").encode("utf-8")
    raise ValueError(f"unknown piece format {format!r}, expected one of {FORMATS}")


def geometric_mean(values: Sequence[float]) -> float:
    return float(np.exp(np.mean(np.log(np.asarray(values, dtype=float)))))


def normalize_register(piece: Piece, policy: RegisterPolicy = RegisterPolicy()) -> Piece:
    """Shift a piece by whole octaves so its geometric mean sits inside the band."""
    if not policy.enabled:
        return piece

    mean = geometric_mean(piece.frequencies)
    if policy.low <= mean <= policy.high:
        return piece

    centre = math.sqrt(policy.low * policy.high)
    nearest = math.floor(math.log2(centre / mean) + 0.5)
    for k in (nearest, nearest - 1, nearest + 1):
        if policy.low <= mean * 2.0 ** k <= policy.high:
            logger.debug("register shift of %d octave(s) for %s", k, piece.label)
            return Piece(label=piece.label, frequencies=[f * 2.0 ** k for f in piece.frequencies])

    raise ValueError(
        f"piece '{piece.label}' cannot be moved into [{policy.low:g}, {policy.high:g}] Hz by octave shifts"
    )


def write_values_csv(stream: TextIO, values: Iterable[float]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["value"])
    for value in values:
        writer.writerow([format_number(value)])


def write_sweep_csv(stream: TextIO, sweeps: Sequence[SweepReport], with_level: bool = False) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    header = ["pattern", "M", "passed", "rank"]
    writer.writerow(["level"] + header if with_level else header)
    for sweep in sweeps:
        for c in sweep.candidates:
            row = [
                format_pattern(c.pattern),
                repr(c.score.m) if c.score else "",
                "true" if c.passed_filter else "false",
                "" if c.rank is None else c.rank,
            ]
            writer.writerow([format_number(sweep.config.target_level)] + row if with_level else row)
