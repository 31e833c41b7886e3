"""Rendering and parsing of the two quintuple generation templates.

Tagged form::

    [s] iPhone 14 Pro Max [/s] [o] its competitors [/o] [a] battery life [/a] [p] better [/p] [l] COM+ [/l]

Delimited form::

    {iPhone 14 Pro Max; its competitors; battery life; better; COM+}

Absent elements render as the literal "None".  Multiple quintuples are
joined with "; ".  Parsing accepts arbitrary model output: groups that
cannot be interpreted are reported as issues and skipped, never aborting
the whole string.  Token positions are not part of either template; index
recovery belongs to the align module.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Sequence

from .corpus import BareQuintuple, ComparisonLabel, Quintuple, UnknownLabelError

NONE_TOKEN = "None"


class TemplateKind(enum.Enum):
    TAGGED = "tagged"
    DELIMITED = "delimited"


class IssueKind(enum.Enum):
    WRONG_FIELD_COUNT = "wrong-field-count"
    UNKNOWN_LABEL = "unknown-label"
    MISSING_PREDICATE = "missing-predicate"
    UNBALANCED = "unbalanced"


@dataclass(frozen=True)
class ParseIssue:
    """One recoverable problem found while parsing generated output."""

    kind: IssueKind
    message: str
    fragment: str


_TAGGED_GROUP_RE = re.compile(
    r"\[s\]\s*(.*?)\s*\[/s\]\s*"
    r"\[o\]\s*(.*?)\s*\[/o\]\s*"
    r"\[a\]\s*(.*?)\s*\[/a\]\s*"
    r"\[p\]\s*(.*?)\s*\[/p\]\s*"
    r"\[l\]\s*(.*?)\s*\[/l\]",
    re.DOTALL,
)


def _bare_fields(quintuple: Quintuple | BareQuintuple) -> tuple[str | None, ...]:
    if isinstance(quintuple, Quintuple):
        quintuple = quintuple.to_bare()
    return (quintuple.subject, quintuple.object, quintuple.aspect, quintuple.predicate)


def render(
    quintuples: Sequence[Quintuple | BareQuintuple],
    kind: TemplateKind = TemplateKind.DELIMITED,
) -> str:
    """Render quintuples (indexed or bare) into one generation target string."""
    groups = []
    for quintuple in quintuples:
        fields = [f if f is not None else NONE_TOKEN for f in _bare_fields(quintuple)]
        fields.append(quintuple.label.value)
        if kind is TemplateKind.DELIMITED:
            groups.append("{" + "; ".join(fields) + "}")
        else:
            s, o, a, p, l = fields
            groups.append(
                f"[s] {s} [/s] [o] {o} [/o] [a] {a} [/a] [p] {p} [/p] [l] {l} [/l]"
            )
    return "; ".join(groups)


def _field_value(field: str) -> str | None:
    field = field.strip()
    if not field or field.casefold() == "none":
        return None
    return field


def _build_bare(
    fields: Sequence[str], fragment: str
) -> tuple[BareQuintuple | None, ParseIssue | None]:
    subject, obj, aspect, predicate = (_field_value(f) for f in fields[:4])
    label_text = fields[4].strip()
    try:
        label = ComparisonLabel.from_string(label_text)
    except UnknownLabelError:
        return None, ParseIssue(
            IssueKind.UNKNOWN_LABEL, f"unknown label {label_text!r}", fragment
        )
    if predicate is None:
        return None, ParseIssue(
            IssueKind.MISSING_PREDICATE, "group has no predicate", fragment
        )
    return (
        BareQuintuple(
            subject=subject, object=obj, aspect=aspect, predicate=predicate, label=label
        ),
        None,
    )


def _split_delimited_groups(output: str) -> tuple[list[str], list[ParseIssue]]:
    groups: list[str] = []
    issues: list[ParseIssue] = []
    stray: list[str] = []
    depth = 0
    start = 0
    for i, ch in enumerate(output):
        if ch == "{":
            if depth == 0:
                start = i + 1
            depth += 1
        elif ch == "}":
            if depth == 0:
                stray.append(ch)
            else:
                depth -= 1
                if depth == 0:
                    groups.append(output[start:i])
        elif depth == 0:
            stray.append(ch)
    if depth > 0:
        issues.append(
            ParseIssue(
                IssueKind.UNBALANCED,
                "unclosed '{' before end of output",
                output[start - 1 :],
            )
        )
    residue = "".join(stray).replace(";", " ").strip()
    if residue and residue.casefold() != "none":
        issues.append(
            ParseIssue(IssueKind.UNBALANCED, "stray text outside braces", residue)
        )
    return groups, issues


def _split_group_fields(group: str) -> list[str]:
    # Field separators are ";" at brace depth zero, so balanced braces
    # inside an element text do not break the split.
    parts: list[str] = []
    buf: list[str] = []
    depth = 0
    for ch in group:
        if ch == "{":
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
        if ch == ";" and depth == 0:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    parts.append("".join(buf))
    return parts


def _parse_delimited(output: str) -> tuple[list[BareQuintuple], list[ParseIssue]]:
    groups, issues = _split_delimited_groups(output)
    quintuples: list[BareQuintuple] = []
    for group in groups:
        parts = _split_group_fields(group)
        if len(parts) < 5:
            issues.append(
                ParseIssue(
                    IssueKind.WRONG_FIELD_COUNT,
                    f"expected 5 fields, got {len(parts)}",
                    group,
                )
            )
            continue
        if len(parts) > 5:
            # Over-split: keep the last 4 separators as field boundaries and
            # fold the surplus back into the first field.
            parts = [";".join(parts[: len(parts) - 4])] + parts[-4:]
        quintuple, issue = _build_bare(parts, group)
        if issue is not None:
            issues.append(issue)
        else:
            quintuples.append(quintuple)
    return quintuples, issues


def _parse_tagged(output: str) -> tuple[list[BareQuintuple], list[ParseIssue]]:
    quintuples: list[BareQuintuple] = []
    issues: list[ParseIssue] = []
    consumed: list[str] = []
    last_end = 0
    for match in _TAGGED_GROUP_RE.finditer(output):
        consumed.append(output[last_end : match.start()])
        last_end = match.end()
        quintuple, issue = _build_bare(list(match.groups()), match.group(0))
        if issue is not None:
            issues.append(issue)
        else:
            quintuples.append(quintuple)
    consumed.append(output[last_end:])
    residue = "".join(consumed).replace(";", " ").strip()
    if residue and residue.casefold() != "none":
        issues.append(
            ParseIssue(IssueKind.UNBALANCED, "text outside tag groups", residue)
        )
    return quintuples, issues


def parse_generation(
    output: str, kind: TemplateKind = TemplateKind.DELIMITED
) -> tuple[list[BareQuintuple], list[ParseIssue]]:
    """Parse model-generated text back into bare quintuples.

    Never raises on untrusted input: malformed groups become ParseIssue
    entries and are skipped.  An empty or "None" output yields no
    quintuples and no issues.
    """
    if kind is TemplateKind.DELIMITED:
        return _parse_delimited(output)
    return _parse_tagged(output)
