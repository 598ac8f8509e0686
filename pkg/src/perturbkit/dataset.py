"""CSV dataset loading as ordered (input, output) pairs.

A dataset row is a :class:`DatasetRecord`: an ordered sequence of named input
columns plus an output that is either an integer class label or a reference
text string. The caller declares which header columns are inputs (and in what
order) and which one is the output via :class:`DatasetSchema`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from .attacked_text import AttackedText


class DatasetError(Exception):
    """Raised for unreadable files, missing columns, or malformed rows."""


@dataclass(frozen=True)
class ClassLabel:
    value: int

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValueError(f"class label must be >= 0, got {self.value}")


@dataclass(frozen=True)
class ReferenceText:
    value: str


Output = Union[ClassLabel, ReferenceText]


@dataclass(frozen=True)
class DatasetRecord:
    """One (input, output) pair; input column order is preserved."""

    input: tuple[tuple[str, str], ...]
    output: Output

    def __post_init__(self) -> None:
        names = [name for name, _ in self.input]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate input column names: {names}")


@dataclass(frozen=True)
class DatasetSchema:
    """Declares input column order and the output column of a CSV file.

    ``output_kind`` overrides the all-integers-means-label heuristic:
    ``"label"`` forces class labels, ``"text"`` forces reference texts,
    ``"auto"`` applies the heuristic.
    """

    input_columns: tuple[str, ...]
    output_column: str
    label_names: tuple[str, ...] | None = None
    output_kind: str = "auto"

    def __post_init__(self) -> None:
        if not self.input_columns:
            raise ValueError("schema needs at least one input column")
        if self.output_column in self.input_columns:
            raise ValueError(f"output column {self.output_column!r} is also an input column")
        if self.output_kind not in ("auto", "label", "text"):
            raise ValueError(f"output_kind must be auto|label|text, got {self.output_kind!r}")


def _is_integral(value: str) -> bool:
    text = value.strip()
    if text.startswith(("-", "+")):
        text = text[1:]
    return text.isdigit()


def load_csv(path: str | Path, schema: DatasetSchema) -> list[DatasetRecord]:
    """Load one record per data row, inputs taken in schema column order.

    The file must be UTF-8 CSV with a header row (RFC 4180 quoting). The
    output parses as an integer label when every output value is integral,
    unless the schema forces a kind.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise DatasetError(f"{path}: empty file, expected a header row") from None
            positions = {name: idx for idx, name in enumerate(header)}
            for column in (*schema.input_columns, schema.output_column):
                if column not in positions:
                    raise DatasetError(f"{path}: column {column!r} not in header {header}")
            rows = []
            for row_number, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise DatasetError(
                        f"{path}: row {row_number} has {len(row)} fields, expected {len(header)}"
                    )
                rows.append(row)
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc

    raw_outputs = [row[positions[schema.output_column]] for row in rows]
    if schema.output_kind == "label":
        as_labels = True
    elif schema.output_kind == "text":
        as_labels = False
    else:
        as_labels = bool(rows) and all(_is_integral(value) for value in raw_outputs)
    if as_labels:
        for row_number, value in enumerate(raw_outputs, start=2):
            if not _is_integral(value):
                raise DatasetError(
                    f"{path}: row {row_number} output {value!r} is not an integer label"
                )

    records = []
    for row, raw in zip(rows, raw_outputs):
        inputs = tuple((name, row[positions[name]]) for name in schema.input_columns)
        output: Output = ClassLabel(int(raw)) if as_labels else ReferenceText(raw)
        records.append(DatasetRecord(input=inputs, output=output))
    return records


def to_attacked_text(record: DatasetRecord) -> AttackedText:
    """Build the attackable text for a record, columns copied in order.

    ``attack_attrs["original_index"]`` is the caller's responsibility; use
    :meth:`AttackedText.with_attack_attrs`.
    """
    return AttackedText(record.input)
