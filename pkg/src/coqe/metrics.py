"""Exact-match evaluation grids for predicted vs gold quintuples.

A predicted quintuple counts only when every compared element matches the
gold value exactly, token positions included.  Scores are computed for all
31 non-empty element combinations, in two regimes:

* micro: precision/recall/F1 from corpus-wide summed TP/predicted/gold
  counts;
* macro: the unweighted mean of per-comparison-label-class scores, the
  label being the task's only categorical axis.  Classes absent from both
  gold and predictions are excluded from the mean.  Per-class counts are
  part of the report so alternative aggregations can be recomputed.

The headline numbers are the macro-F1 (the ranking score) and micro-F1 of
the full five-element combination.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .base import CoqeError
from .corpus import LABEL_VALUES, CorpusRecord, Quintuple

ELEMENTS = ("subject", "object", "aspect", "predicate", "label")
_ELEMENT_LETTER = {"subject": "S", "object": "O", "aspect": "A", "predicate": "P", "label": "L"}

# One record's (predicted, gold) quintuple lists.
RecordPair = tuple[Sequence[Quintuple], Sequence[Quintuple]]


class UnmatchedIdsError(CoqeError):
    """Gold and prediction corpora do not cover the same record ids."""


def all_combinations() -> list[tuple[str, ...]]:
    """The 31 non-empty element subsets, in a fixed canonical order."""
    combos = []
    for mask in range(1, 32):
        combos.append(tuple(e for i, e in enumerate(ELEMENTS) if mask >> i & 1))
    return combos

FULL_COMBINATION = tuple(ELEMENTS)


def combination_name(combination: Sequence[str]) -> str:
    """Compact letter code, e.g. ("subject", "label") -> "SL"."""
    return "".join(_ELEMENT_LETTER[e] for e in ELEMENTS if e in combination)


def project_key(quintuple: Quintuple, combination: Sequence[str]) -> tuple:
    """Canonical match key for one quintuple under a combination.

    Span elements contribute their full (index, token) sequences, absent
    spans a distinguished marker (None), and the label its string value.
    """
    key = []
    for element in ELEMENTS:
        if element not in combination:
            continue
        if element == "label":
            key.append(quintuple.label.value)
        else:
            span = getattr(quintuple, element)
            key.append(span.items if span is not None else None)
    return tuple(key)


@dataclass(frozen=True)
class MatchCounts:
    tp: int
    n_pred: int
    n_gold: int

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(
            self.tp + other.tp, self.n_pred + other.n_pred, self.n_gold + other.n_gold
        )


def match_counts(
    predicted: Sequence[Quintuple],
    gold: Sequence[Quintuple],
    combination: Sequence[str],
) -> MatchCounts:
    """Multiset intersection of projected keys within one record.

    Each gold key is consumed at most once, so a quintuple predicted twice
    against a single gold occurrence scores one true positive.
    """
    pred_keys = Counter(project_key(q, combination) for q in predicted)
    gold_keys = Counter(project_key(q, combination) for q in gold)
    tp = sum(min(count, gold_keys[key]) for key, count in pred_keys.items())
    return MatchCounts(tp, len(predicted), len(gold))


@dataclass(frozen=True)
class Scores:
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict[str, float]:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def _prf(tp: float, n_pred: float, n_gold: float) -> Scores:
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Scores(precision, recall, f1)


def pair_by_id(
    gold: Sequence[CorpusRecord], predicted: Sequence[CorpusRecord]
) -> list[RecordPair]:
    """Align two corpora by record id, in gold order.

    Raises UnmatchedIdsError when ids are duplicated or the id sets differ.
    """
    gold_ids = [r.id for r in gold]
    pred_ids = [r.id for r in predicted]
    if len(set(gold_ids)) != len(gold_ids) or len(set(pred_ids)) != len(pred_ids):
        raise UnmatchedIdsError("duplicate record ids")
    missing = sorted(set(gold_ids) - set(pred_ids))
    extra = sorted(set(pred_ids) - set(gold_ids))
    if missing or extra:
        raise UnmatchedIdsError(
            f"corpora do not align: missing from predictions {missing[:5]}, "
            f"unknown ids {extra[:5]}"
        )
    by_id = {r.id: r for r in predicted}
    return [(tuple(by_id[r.id].quintuples), tuple(r.quintuples)) for r in gold]


def micro_counts(pairs: Iterable[RecordPair], combination: Sequence[str]) -> MatchCounts:
    total = MatchCounts(0, 0, 0)
    for predicted, gold in pairs:
        total = total + match_counts(predicted, gold, combination)
    return total


def micro_scores(pairs: Sequence[RecordPair], combination: Sequence[str]) -> Scores:
    """Corpus-level scores from summed counts; 0/0 conventions fixed to 0."""
    counts = micro_counts(pairs, combination)
    return _prf(counts.tp, counts.n_pred, counts.n_gold)


def per_class_counts(
    pairs: Sequence[RecordPair], combination: Sequence[str]
) -> dict[str, MatchCounts]:
    """TP/predicted/gold per comparison-label class under a combination.

    Both sides are partitioned by their own label before matching, so the
    breakdown is meaningful even for combinations that ignore the label.
    """
    totals = {value: MatchCounts(0, 0, 0) for value in LABEL_VALUES}
    for predicted, gold in pairs:
        for value in LABEL_VALUES:
            pred_c = [q for q in predicted if q.label.value == value]
            gold_c = [q for q in gold if q.label.value == value]
            if pred_c or gold_c:
                totals[value] = totals[value] + match_counts(pred_c, gold_c, combination)
    return totals


def macro_scores(pairs: Sequence[RecordPair], combination: Sequence[str]) -> Scores:
    """Unweighted mean of per-label-class scores.

    A class participates when it appears in gold or in the predictions;
    classes absent from both are excluded from the mean.
    """
    by_class = per_class_counts(pairs, combination)
    included = [
        counts for counts in by_class.values() if counts.n_pred > 0 or counts.n_gold > 0
    ]
    if not included:
        return Scores(0.0, 0.0, 0.0)
    scores = [_prf(c.tp, c.n_pred, c.n_gold) for c in included]
    k = len(scores)
    return Scores(
        sum(s.precision for s in scores) / k,
        sum(s.recall for s in scores) / k,
        sum(s.f1 for s in scores) / k,
    )


@dataclass(frozen=True)
class EvalReport:
    """The full metric grid plus the counts it was computed from.

    ``combinations`` maps the letter code of each element combination to
    its micro and macro scores; ``headline`` carries the full-combination
    macro-F1 (the ranking score) and micro-F1; ``counts`` holds per-
    combination totals and per-label-class breakdowns.
    """

    combinations: dict[str, dict[str, Scores]]
    headline: dict[str, float]
    counts: dict

    def to_dict(self) -> dict:
        return {
            "combinations": {
                name: {regime: scores.to_dict() for regime, scores in cell.items()}
                for name, cell in self.combinations.items()
            },
            "headline": dict(self.headline),
            "counts": self.counts,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(self.to_json())
            handle.write("\n")


def full_grid(pairs: Sequence[RecordPair]) -> EvalReport:
    """Micro and macro scores for every element combination."""
    combinations: dict[str, dict[str, Scores]] = {}
    combo_counts: dict[str, dict[str, int]] = {}
    label_counts: dict[str, dict[str, dict[str, int]]] = {}
    for combination in all_combinations():
        name = combination_name(combination)
        counts = micro_counts(pairs, combination)
        combinations[name] = {
            "micro": _prf(counts.tp, counts.n_pred, counts.n_gold),
            "macro": macro_scores(pairs, combination),
        }
        combo_counts[name] = {"tp": counts.tp, "n_pred": counts.n_pred, "n_gold": counts.n_gold}
        label_counts[name] = {
            value: {"tp": c.tp, "n_pred": c.n_pred, "n_gold": c.n_gold}
            for value, c in per_class_counts(pairs, combination).items()
        }
    full_name = combination_name(FULL_COMBINATION)
    return EvalReport(
        combinations=combinations,
        headline={
            "macro_f1": combinations[full_name]["macro"].f1,
            "micro_f1": combinations[full_name]["micro"].f1,
        },
        counts={"combinations": combo_counts, "labels": label_counts},
    )


def evaluate_corpora(
    gold: Sequence[CorpusRecord], predicted: Sequence[CorpusRecord]
) -> EvalReport:
    """Convenience wrapper: pair two corpora by id and compute the grid."""
    return full_grid(pair_by_id(gold, predicted))
