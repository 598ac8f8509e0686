"""Serialization of attack results: human-readable text, jsonl, and csv."""

from __future__ import annotations

import csv
import io
import json
from typing import Optional

from .attacked_text import AttackedText
from .attack import AttackResult
from .model_bridge import Classification, Generation, ModelOutput
from .runner import ResultItem

FORMATS = ("text", "jsonl", "csv")

CSV_FIELDS = (
    "kind",
    "sample_index",
    "seed",
    "original_text",
    "perturbed_text",
    "score",
    "model_calls",
    "cache_hits",
    "words_changed",
    "error",
)


def encode_output(output: Optional[ModelOutput]) -> Optional[dict]:
    if output is None:
        return None
    if isinstance(output, Classification):
        return {"kind": "classification", "probs": list(output.probs)}
    if isinstance(output, Generation):
        return {"kind": "generation", "text": output.text}
    raise TypeError(f"cannot encode model output {output!r}")


def decode_output(data: Optional[dict]) -> Optional[ModelOutput]:
    if data is None:
        return None
    if data["kind"] == "classification":
        return Classification(tuple(data["probs"]))
    return Generation(data["text"])


def item_to_json_dict(item: ResultItem) -> dict:
    """jsonl record for one sample; errored samples get a reduced schema."""
    if item.result is None:
        return {
            "kind": "errored",
            "sample_index": item.sample_index,
            "seed": item.seed,
            "error": item.error,
        }
    r = item.result
    return {
        "kind": r.kind,
        "sample_index": r.sample_index,
        "original": {name: value for name, value in r.original.columns},
        "perturbed": {name: value for name, value in r.perturbed.columns} if r.perturbed else None,
        "original_output": encode_output(r.original_output),
        "perturbed_output": encode_output(r.perturbed_output),
        "score": r.score,
        "model_calls": r.model_calls,
        "cache_hits": r.cache_hits,
        "words_changed": r.words_changed,
        "elapsed_ms": r.elapsed_ms,
        "seed": r.seed,
    }


def result_from_json_dict(data: dict) -> AttackResult:
    """Rebuild an AttackResult from a jsonl record (used by round-trip checks)."""
    if data["kind"] == "errored":
        raise ValueError("errored records carry no AttackResult")
    return AttackResult(
        kind=data["kind"],
        sample_index=data["sample_index"],
        seed=data["seed"],
        original=AttackedText(tuple(data["original"].items())),
        perturbed=AttackedText(tuple(data["perturbed"].items())) if data["perturbed"] else None,
        original_output=decode_output(data["original_output"]),
        perturbed_output=decode_output(data["perturbed_output"]),
        score=data["score"],
        model_calls=data["model_calls"],
        cache_hits=data["cache_hits"],
        words_changed=data["words_changed"],
        elapsed_ms=data["elapsed_ms"],
    )


def _bracket_changes(original: AttackedText, perturbed: AttackedText) -> list[tuple[str, str]]:
    """Column values of ``perturbed`` with each changed word shown as [[old -> new]]."""
    modified = perturbed.modified_indices
    spans_by_column: dict[str, list] = {}
    for span in perturbed.word_spans:
        spans_by_column.setdefault(span.column_name, []).append(span)
    ranges = {name: (start, end) for name, start, end in perturbed.column_ranges()}
    rendered = []
    for name, value in perturbed.columns:
        column_start = ranges[name][0]
        text = value
        for span in reversed(spans_by_column.get(name, [])):
            if span.word_index not in modified:
                continue
            old = original.words[span.word_index]
            new = perturbed.words[span.word_index]
            start = span.char_start - column_start
            end = span.char_end - column_start
            text = text[:start] + f"[[{old} → {new}]]" + text[end:]
        rendered.append((name, text))
    return rendered


def render_text(item: ResultItem) -> str:
    """Multi-line human-readable record, columns labeled by name."""
    if item.result is None:
        return f"[{item.sample_index}] errored: {item.error}"
    r = item.result
    header = (
        f"[{r.sample_index}] {r.kind} | score {r.score:.4f} | "
        f"calls {r.model_calls} | hits {r.cache_hits} | words changed {r.words_changed}"
    )
    lines = [header]
    if r.perturbed is not None and r.perturbed.num_words == r.original.num_words:
        for name, value in _bracket_changes(r.original, r.perturbed):
            lines.append(f"  {name}: {value}")
    else:
        for name, value in r.original.columns:
            lines.append(f"  {name}: {value}")
    return "\n".join(lines)


def csv_row(item: ResultItem) -> list:
    if item.result is None:
        return [
            "errored", item.sample_index, item.seed, "", "", "", "", "", "", item.error or "",
        ]
    r = item.result
    return [
        r.kind,
        r.sample_index,
        r.seed,
        r.original.joined_text,
        r.perturbed.joined_text if r.perturbed else "",
        r.score,
        r.model_calls,
        r.cache_hits,
        r.words_changed,
        "",
    ]


class RecordWriter:
    """Streams result items to a file object in one of the three formats."""

    def __init__(self, stream: io.TextIOBase, log_format: str) -> None:
        if log_format not in FORMATS:
            raise ValueError(f"unknown format {log_format!r}; expected one of {FORMATS}")
        self.stream = stream
        self.format = log_format
        self._csv = None
        if log_format == "csv":
            self._csv = csv.writer(stream)
            self._csv.writerow(CSV_FIELDS)

    def write(self, item: ResultItem) -> None:
        if self.format == "jsonl":
            self.stream.write(json.dumps(item_to_json_dict(item), ensure_ascii=False) + "\n")
        elif self.format == "csv":
            self._csv.writerow(csv_row(item))
        else:
            self.stream.write(render_text(item) + "\n")
