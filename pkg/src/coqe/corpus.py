"""Data model and JSONL I/O for comparative-review corpora.

A corpus is a UTF-8 JSONL file with one review per line:

    {"id": "train-17",
     "text": "iPhone 14 Pro Max has a better battery life compared to its competitors",
     "quintuples": [{"subject": ["1&&iPhone", "2&&14", "3&&Pro", "4&&Max"],
                     "object": ["12&&its", "13&&competitors"],
                     "aspect": ["8&&battery", "9&&life"],
                     "predicate": ["7&&better"],
                     "label": "COM+"}]}

Element entries are "index&&token" strings: a 1-based position into the
whitespace tokenization of the normalized review text, joined to the token
by the first "&&" (so tokens that themselves contain "&&" survive).
Subject, object and aspect may be omitted or given as empty lists; the
predicate is mandatory.  A record with an empty "quintuples" list is a
non-comparative review.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .base import CoqeError

ELEMENT_NAMES = ("subject", "object", "aspect", "predicate")

_WHITESPACE_RE = re.compile(r"\s+")
_INDEX_RE = re.compile(r"^[0-9]+$")


class CorpusError(CoqeError):
    """Base class for corpus parsing/validation errors.

    ``record_id`` is attached by the parsing layer when known so errors can
    be traced back to the offending review.
    """

    def __init__(self, message: str, record_id: str | None = None):
        super().__init__(message)
        self.record_id = record_id

    def __str__(self) -> str:
        base = super().__str__()
        if self.record_id is not None:
            return f"[record {self.record_id}] {base}"
        return base


class RecordFormatError(CorpusError):
    """The JSON line does not have the expected shape."""


class MalformedIndexTokenError(CorpusError):
    """An element entry is not a valid "index&&token" string."""


class IndexOutOfBoundsError(CorpusError):
    """A span index points past the end of the tokenized sentence."""


class TokenMismatchError(CorpusError):
    """A span token disagrees with the sentence token at its index."""


class UnknownLabelError(CorpusError):
    """The comparison label is not one of the eight known values."""


class MissingPredicateError(CorpusError):
    """A quintuple lacks its mandatory predicate."""


class InvalidSpanError(CorpusError):
    """Span items are empty, unordered, or otherwise malformed."""


class ComparisonLabel(enum.Enum):
    """The eight comparison types a quintuple can carry."""

    EQL = "EQL"
    DIF = "DIF"
    COM = "COM"
    COM_POS = "COM+"
    COM_NEG = "COM-"
    SUP = "SUP"
    SUP_POS = "SUP+"
    SUP_NEG = "SUP-"

    @classmethod
    def from_string(cls, value: str) -> "ComparisonLabel":
        for member in cls:
            if member.value == value:
                return member
        raise UnknownLabelError(f"unknown comparison label {value!r}")


# Stable iteration order for per-class reporting.
LABEL_VALUES = tuple(label.value for label in ComparisonLabel)


def normalize_text(raw: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends.

    No other characters are altered; this is the only text preprocessing
    the toolkit applies.
    """
    return _WHITESPACE_RE.sub(" ", raw).strip()


def tokenize(text: str) -> list[str]:
    """Split normalized text on single spaces.

    Positions are 1-based throughout the package: token ``i`` of the
    sentence is ``tokenize(text)[i - 1]``.  Joining the result with single
    spaces reproduces the input exactly.
    """
    if not text:
        return []
    return text.split(" ")


@dataclass(frozen=True)
class ElementSpan:
    """An ordered run of (position, token) pairs naming one element.

    Indices are 1-based and strictly increasing.  The span is never empty;
    an absent element is represented by ``None`` at the quintuple level,
    not by an empty span.
    """

    items: tuple[tuple[int, str], ...]

    def __post_init__(self):
        items = tuple((int(i), t) for i, t in self.items)
        object.__setattr__(self, "items", items)
        if not items:
            raise InvalidSpanError("element span must contain at least one token")
        prev = 0
        for index, token in items:
            if index < 1:
                raise InvalidSpanError(f"span index {index} is not a positive integer")
            if index <= prev:
                raise InvalidSpanError(
                    f"span indices must be strictly increasing, got {index} after {prev}"
                )
            if not isinstance(token, str) or not token:
                raise InvalidSpanError(f"span token at index {index} is empty")
            prev = index

    @classmethod
    def from_phrase(cls, start: int, tokens: Iterable[str]) -> "ElementSpan":
        """Build a contiguous span starting at 1-based position ``start``."""
        return cls(tuple((start + k, tok) for k, tok in enumerate(tokens)))

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.items)

    @property
    def text(self) -> str:
        return " ".join(t for _, t in self.items)

    @property
    def start(self) -> int:
        return self.items[0][0]

    @property
    def end(self) -> int:
        return self.items[-1][0]

    @property
    def is_contiguous(self) -> bool:
        return self.end - self.start + 1 == len(self.items)


@dataclass(frozen=True, kw_only=True)
class BareQuintuple:
    """A quintuple as plain text, without token positions.

    This is what generation templates carry: element surface strings plus
    the comparison label.  Positions are recovered separately by alignment.
    """

    subject: str | None = None
    object: str | None = None
    aspect: str | None = None
    predicate: str | None = None
    label: ComparisonLabel

    def __post_init__(self):
        for name in ELEMENT_NAMES:
            value = getattr(self, name)
            if value is not None and not value.strip():
                raise InvalidSpanError(f"bare {name} is empty after trimming")
        if not isinstance(self.label, ComparisonLabel):
            raise UnknownLabelError(f"label must be a ComparisonLabel, got {self.label!r}")


@dataclass(frozen=True, kw_only=True)
class Quintuple:
    """One indexed comparative quintuple.

    Only the predicate is mandatory; subject, object and aspect may each
    be absent.
    """

    subject: ElementSpan | None = None
    object: ElementSpan | None = None
    aspect: ElementSpan | None = None
    predicate: ElementSpan
    label: ComparisonLabel

    def __post_init__(self):
        if self.predicate is None:
            raise MissingPredicateError("quintuple has no predicate")
        if not isinstance(self.label, ComparisonLabel):
            raise UnknownLabelError(f"label must be a ComparisonLabel, got {self.label!r}")

    def element(self, name: str) -> ElementSpan | None:
        if name not in ELEMENT_NAMES:
            raise ValueError(f"unknown element {name!r}")
        return getattr(self, name)

    def to_bare(self) -> BareQuintuple:
        """Drop positions, keeping element surface texts and the label."""
        return BareQuintuple(
            subject=self.subject.text if self.subject else None,
            object=self.object.text if self.object else None,
            aspect=self.aspect.text if self.aspect else None,
            predicate=self.predicate.text,
            label=self.label,
        )


@dataclass(frozen=True)
class CorpusRecord:
    """One review with its (possibly empty) list of gold quintuples.

    ``tokens`` is derived from the whitespace split of the normalized text
    and is what all span indices refer to.  Instances are immutable and
    safe to share across threads.
    """

    id: str
    text: str
    quintuples: tuple[Quintuple, ...] = ()
    tokens: tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "quintuples", tuple(self.quintuples))
        object.__setattr__(self, "tokens", tuple(tokenize(normalize_text(self.text))))

    @property
    def is_comparative(self) -> bool:
        return bool(self.quintuples)


def validate_record(record: CorpusRecord) -> None:
    """Check every span of every quintuple against the record's tokens.

    Raises IndexOutOfBoundsError or TokenMismatchError on the first
    disagreement; returns silently for a valid record.
    """
    n = len(record.tokens)
    for quintuple in record.quintuples:
        for name in ELEMENT_NAMES:
            span = getattr(quintuple, name)
            if span is None:
                continue
            for index, token in span.items:
                if index > n:
                    raise IndexOutOfBoundsError(
                        f"{name} index {index} exceeds sentence length {n}",
                        record_id=record.id,
                    )
                if record.tokens[index - 1] != token:
                    raise TokenMismatchError(
                        f"{name} token {token!r} at index {index} does not match "
                        f"sentence token {record.tokens[index - 1]!r}",
                        record_id=record.id,
                    )


def _parse_index_token(entry: object) -> tuple[int, str]:
    if not isinstance(entry, str):
        raise MalformedIndexTokenError(f"element entry {entry!r} is not a string")
    head, sep, token = entry.partition("&&")
    if not sep:
        raise MalformedIndexTokenError(f"element entry {entry!r} has no '&&' separator")
    if not _INDEX_RE.match(head) or int(head) < 1:
        raise MalformedIndexTokenError(
            f"element entry {entry!r} does not start with a positive integer index"
        )
    if not token:
        raise MalformedIndexTokenError(f"element entry {entry!r} has an empty token")
    return int(head), token


def _parse_span(value: object, element: str) -> ElementSpan | None:
    if value is None:
        return None
    if not isinstance(value, list):
        raise RecordFormatError(f"{element} must be a list of 'index&&token' strings")
    if not value:
        return None
    return ElementSpan(tuple(_parse_index_token(entry) for entry in value))


def _parse_quintuple(obj: object) -> Quintuple:
    if not isinstance(obj, dict):
        raise RecordFormatError(f"quintuple must be a JSON object, got {type(obj).__name__}")
    spans = {name: _parse_span(obj.get(name), name) for name in ELEMENT_NAMES}
    if spans["predicate"] is None:
        raise MissingPredicateError("quintuple has no predicate")
    label = obj.get("label")
    if not isinstance(label, str):
        raise UnknownLabelError(f"label must be a string, got {label!r}")
    return Quintuple(
        subject=spans["subject"],
        object=spans["object"],
        aspect=spans["aspect"],
        predicate=spans["predicate"],
        label=ComparisonLabel.from_string(label),
    )


def parse_record(json_line: str) -> CorpusRecord:
    """Parse and validate one JSONL corpus line.

    Raises a CorpusError subclass describing the first problem found:
    malformed JSON or fields, bad "index&&token" entries, out-of-bounds
    indices, token mismatches, unknown labels, or a missing predicate.
    """
    try:
        obj = json.loads(json_line)
    except json.JSONDecodeError as exc:
        raise RecordFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise RecordFormatError("corpus line must be a JSON object")
    record_id = obj.get("id")
    if not isinstance(record_id, str):
        raise RecordFormatError(f"'id' must be a string, got {record_id!r}")
    try:
        text = obj.get("text")
        if not isinstance(text, str):
            raise RecordFormatError(f"'text' must be a string, got {text!r}")
        if "quintuples" not in obj:
            raise RecordFormatError("missing 'quintuples' field")
        raw_quintuples = obj["quintuples"]
        if not isinstance(raw_quintuples, list):
            raise RecordFormatError("'quintuples' must be a list")
        record = CorpusRecord(
            id=record_id,
            text=text,
            quintuples=tuple(_parse_quintuple(q) for q in raw_quintuples),
        )
        validate_record(record)
    except CorpusError as exc:
        if exc.record_id is None:
            exc.record_id = record_id
        raise
    return record


def quintuple_to_json(quintuple: Quintuple) -> dict:
    obj: dict = {}
    for name in ELEMENT_NAMES:
        span = getattr(quintuple, name)
        if span is not None:
            obj[name] = [f"{i}&&{t}" for i, t in span.items]
    obj["label"] = quintuple.label.value
    return obj


def write_record(record: CorpusRecord) -> str:
    """Serialize a record to its canonical JSONL form.

    ``parse_record(write_record(r)) == r`` for every valid record, and
    writing back a canonically formatted line reproduces it byte for byte.
    Absent elements are omitted rather than written as empty lists.
    """
    obj = {
        "id": record.id,
        "text": record.text,
        "quintuples": [quintuple_to_json(q) for q in record.quintuples],
    }
    return json.dumps(obj, ensure_ascii=False)


@dataclass(frozen=True)
class LoadIssue:
    """One skipped line from a lenient corpus load."""

    line_no: int
    record_id: str | None
    error: str


def iter_corpus(path: str | Path) -> Iterator[CorpusRecord]:
    """Stream records from a JSONL file, raising on the first invalid line."""
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                yield parse_record(line)
            except CorpusError as exc:
                raise type(exc)(f"line {line_no}: {exc}", record_id=exc.record_id) from exc


def load_corpus(path: str | Path) -> list[CorpusRecord]:
    """Load a corpus strictly: any invalid record aborts the load."""
    return list(iter_corpus(path))


def load_corpus_lenient(path: str | Path) -> tuple[list[CorpusRecord], list[LoadIssue]]:
    """Load a corpus, skipping invalid records instead of failing.

    Returns the valid records in file order plus one LoadIssue per skipped
    line.  Useful for corpora with known mis-annotations.
    """
    records: list[CorpusRecord] = []
    issues: list[LoadIssue] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                records.append(parse_record(line))
            except CorpusError as exc:
                issues.append(LoadIssue(line_no, exc.record_id, str(exc)))
    return records, issues


def save_corpus(records: Iterable[CorpusRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(write_record(record))
            handle.write("\n")
