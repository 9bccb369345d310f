"""Reading and writing evaluation-record CSV files.

Dialect: comma separated, one header row, ``#`` comment lines, and a first
comment line ``# scalekit-records: <version>``. Empty cells and ``-`` mean
"missing". Integer columns accept scientific notation when the value is
integral (``1.3e9``).
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path

from scalekit.accounting import ModelShape
from scalekit.errors import DuplicateLabel, InputError, LocatedError, MalformedNumber, SchemaMismatch
from scalekit.planner import EvalRecord

SCHEMA_VERSION = "1"
VERSION_PREFIX = "# scalekit-records:"

SHAPE_COLUMNS = ("d_model", "n_layers", "d_head", "d_ffn", "vocab_size", "seq_len")
DOWNSTREAM_COLUMNS = (
    "hellaswag",
    "piqa",
    "winogrande",
    "lambada",
    "arc_e",
    "arc_c",
    "openbookqa",
    "downstream_avg",
)
COLUMNS = (
    "family",
    "label",
    "params",
    "train_flops",
    "pile_xent",
    "tokens",
    "dedup",
    *SHAPE_COLUMNS,
    *DOWNSTREAM_COLUMNS,
)
BUNDLED_FILES = ("cerebras_gpt.csv", "pythia.csv", "others.csv")
DATA_ENV_VAR = "SCALEKIT_DATA"


@dataclass(frozen=True)
class RecordFile:
    version: str = SCHEMA_VERSION
    rows: list[EvalRecord] = field(default_factory=list)


def _missing(cell: str) -> bool:
    return cell == "" or cell == "-"


def _parse_int(cell: str, line: int, col: int) -> int:
    try:
        value = Decimal(cell)
    except InvalidOperation:
        raise MalformedNumber(f"expected an integer, got {cell!r}", line, col) from None
    if not value.is_finite() or value != value.to_integral_value():
        raise MalformedNumber(f"expected an integer, got {cell!r}", line, col)
    return int(value)


def _parse_float(cell: str, line: int, col: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise MalformedNumber(f"expected a number, got {cell!r}", line, col) from None
    if not math.isfinite(value):
        raise MalformedNumber(f"non-finite number {cell!r}", line, col)
    return value


def _row_to_record(cells: list[str], line: int) -> EvalRecord:
    if len(cells) != len(COLUMNS):
        raise SchemaMismatch(f"expected {len(COLUMNS)} fields, got {len(cells)}", line)
    row = dict(zip(COLUMNS, (c.strip() for c in cells)))
    col = {name: i + 1 for i, name in enumerate(COLUMNS)}

    def num(name, parse, required=False):
        cell = row[name]
        if _missing(cell):
            if required:
                raise SchemaMismatch(f"column {name!r} is required", line, col[name])
            return None
        return parse(cell, line, col[name])

    for name in ("family", "label"):
        if not row[name]:
            raise SchemaMismatch(f"column {name!r} is required", line, col[name])

    shape_cells = [num(name, _parse_int) for name in SHAPE_COLUMNS]
    shape = None
    if any(v is not None for v in shape_cells):
        if any(v is None for v in shape_cells):
            raise SchemaMismatch("shape columns must be all present or all missing", line, col["d_model"])
        shape = ModelShape(*shape_cells)
    dedup = num("dedup", _parse_int)
    if dedup not in (None, 0, 1):
        raise MalformedNumber("dedup must be 0 or 1", line, col["dedup"])
    downstream = {}
    for name in DOWNSTREAM_COLUMNS:
        value = num(name, _parse_float)
        if value is not None:
            downstream[name] = value
    try:
        return EvalRecord(
            family=row["family"],
            label=row["label"],
            params=num("params", _parse_int, required=True),
            train_flops=num("train_flops", _parse_float, required=True),
            pile_xent=num("pile_xent", _parse_float),
            tokens=num("tokens", _parse_int),
            downstream=downstream,
            shape=shape,
            dedup=bool(dedup),
        )
    except LocatedError:
        raise
    except InputError as exc:
        raise LocatedError(str(exc), line) from None


def parse_records(text: str) -> RecordFile:
    """Parse a record file, validating every row.

    Raises:
        SchemaMismatch: missing or unknown version line, wrong header or
            wrong field count.
        DuplicateLabel: a repeated (family, label) pair, reported at the
            second occurrence.
        MalformedNumber: a numeric cell that does not parse.
    """
    version = None
    header_seen = False
    rows: list[EvalRecord] = []
    seen: dict[tuple[str, str], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            if version is None and stripped.startswith(VERSION_PREFIX):
                version = stripped[len(VERSION_PREFIX):].strip()
                if version != SCHEMA_VERSION:
                    raise SchemaMismatch(f"unsupported schema version {version!r}", lineno)
            continue
        if version is None:
            raise SchemaMismatch(f"missing '{VERSION_PREFIX} {SCHEMA_VERSION}' line before data", lineno)
        cells = next(csv.reader([raw]))
        if not header_seen:
            if tuple(c.strip() for c in cells) != COLUMNS:
                raise SchemaMismatch("header does not match the expected columns", lineno)
            header_seen = True
            continue
        record = _row_to_record(cells, lineno)
        if record.key in seen:
            raise DuplicateLabel(f"{record.family} {record.label} already defined on line {seen[record.key]}", lineno)
        seen[record.key] = lineno
        rows.append(record)
    if version is None:
        raise SchemaMismatch(f"missing '{VERSION_PREFIX}' line", 1)
    if not header_seen:
        raise SchemaMismatch("missing header row", 1)
    return RecordFile(version, rows)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def dump_records(records: RecordFile) -> str:
    """Serialise records; floats use ``repr`` so parsing is lossless."""
    buf = io.StringIO()
    buf.write(f"{VERSION_PREFIX} {records.version}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in records.rows:
        shape = [getattr(r.shape, name) if r.shape else None for name in SHAPE_COLUMNS]
        downstream = [r.downstream.get(name) for name in DOWNSTREAM_COLUMNS]
        writer.writerow(
            [r.family, r.label]
            + [_cell(v) for v in (r.params, r.train_flops, r.pile_xent, r.tokens, r.dedup)]
            + [_cell(v) for v in shape + downstream]
        )
    return buf.getvalue()


def read_records(path: str | os.PathLike) -> RecordFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_records(text)


def _bundled_text(name: str) -> str:
    override = os.environ.get(DATA_ENV_VAR)
    if override:
        path = Path(override) / name
        try:
            return path.read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return resources.files("scalekit").joinpath("data").joinpath(name).read_text(encoding="utf-8")


def load_bundled(names: tuple[str, ...] = BUNDLED_FILES) -> list[EvalRecord]:
    """All records from the bundled data files, in file order.

    The ``SCALEKIT_DATA`` environment variable points at a replacement
    directory holding files with the same names.
    """
    out: list[EvalRecord] = []
    seen = set()
    for name in names:
        for rec in parse_records(_bundled_text(name)).rows:
            if rec.key in seen:
                raise InputError(f"{rec.family} {rec.label} appears in more than one bundled file")
            seen.add(rec.key)
            out.append(rec)
    return out
