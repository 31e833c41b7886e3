"""Token-index recovery for bare quintuples.

Generated output carries element surface texts only; this module locates
them in the source sentence.  Candidate windows are scored by normalized
Levenshtein similarity, then one window per element is chosen jointly:
combinations whose spans do not overlap are preferred; among those the
total similarity is maximized; remaining ties (typically duplicate
occurrences of the same phrase) fall to the smallest sum of pairwise
distances between span centers, then to the leftmost span in subject,
object, aspect, predicate order.

``align_oracle`` applies the identical selection rule by exhaustive
enumeration with no pruning; it exists so the pruned search in
``align_quintuple`` can be checked against it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from .base import CoqeError
from .corpus import (
    BareQuintuple,
    ElementSpan,
    MissingPredicateError,
    Quintuple,
    normalize_text,
)


class NoCandidateError(CoqeError):
    """No sentence window reached the similarity threshold for an element."""

    def __init__(self, element: str, text: str):
        super().__init__(f"no candidate span for {element} {text!r}")
        self.element = element
        self.text = text


@dataclass(frozen=True)
class AlignmentConfig:
    """Knobs for candidate generation.

    fuzzy_threshold: minimum normalized similarity for a window to survive.
    max_span_slack: how many tokens a window may be longer or shorter than
        the element's own token count.
    case_fold: compare case-insensitively (generation output often drifts
        in casing).
    """

    fuzzy_threshold: float = 0.8
    max_span_slack: int = 1
    case_fold: bool = True

    def __post_init__(self):
        if not 0.0 < self.fuzzy_threshold <= 1.0:
            raise ValueError(f"fuzzy_threshold must be in (0, 1], got {self.fuzzy_threshold}")
        if self.max_span_slack < 0:
            raise ValueError(f"max_span_slack must be >= 0, got {self.max_span_slack}")


@dataclass(frozen=True)
class CandidateSpan:
    """A contiguous window that may house an element."""

    start: int  # 1-based token position
    length: int
    score: float

    @property
    def end(self) -> int:
        return self.start + self.length - 1

    @property
    def center(self) -> float:
        return self.start + (self.length - 1) / 2


def levenshtein(a: str, b: str) -> int:
    """Plain edit distance (insert/delete/substitute, unit costs)."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def similarity(a: str, b: str) -> float:
    """Normalized Levenshtein similarity: 1 - distance / max length."""
    if a == b:
        return 1.0
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def candidate_spans(
    tokens: Sequence[str], element_text: str, cfg: AlignmentConfig | None = None
) -> list[CandidateSpan]:
    """Enumerate sentence windows similar enough to an element text.

    Windows span the element's own token count give or take the configured
    slack.  Results are sorted by score descending, then start ascending,
    then length ascending; an empty list means the element is unalignable.
    """
    cfg = cfg or AlignmentConfig()
    element_tokens = normalize_text(element_text).split(" ")
    if element_tokens == [""]:
        return []
    target = " ".join(element_tokens)
    if cfg.case_fold:
        target = target.casefold()
    n = len(tokens)
    want = len(element_tokens)
    candidates: list[CandidateSpan] = []
    low = max(1, want - cfg.max_span_slack)
    high = min(n, want + cfg.max_span_slack)
    for length in range(low, high + 1):
        for start in range(1, n - length + 2):
            window = " ".join(tokens[start - 1 : start - 1 + length])
            if cfg.case_fold:
                window = window.casefold()
            # A length gap alone can rule a window out without running the DP.
            gap = abs(len(window) - len(target))
            longest = max(len(window), len(target))
            if longest and 1.0 - gap / longest < cfg.fuzzy_threshold:
                continue
            score = similarity(window, target)
            if score >= cfg.fuzzy_threshold:
                candidates.append(CandidateSpan(start, length, score))
    candidates.sort(key=lambda c: (-c.score, c.start, c.length))
    return candidates


def _overlaps(a: CandidateSpan, b: CandidateSpan) -> bool:
    return not (a.end < b.start or b.end < a.start)


def _combo_key(combo: Sequence[CandidateSpan]):
    """Total order on candidate combinations; smaller is better.

    Centers are multiples of one half, so the pairwise-distance sum is
    exact in floating point and safe to compare.
    """
    overlap = any(_overlaps(a, b) for a, b in itertools.combinations(combo, 2))
    distance = sum(
        abs(a.center - b.center) for a, b in itertools.combinations(combo, 2)
    )
    total_score = sum(c.score for c in combo)
    return (
        1 if overlap else 0,
        -total_score,
        distance,
        tuple(c.start for c in combo),
        tuple(c.length for c in combo),
    )


def _present_elements(bare: BareQuintuple) -> list[tuple[str, str]]:
    if bare.predicate is None:
        raise MissingPredicateError("cannot align a quintuple without a predicate")
    pairs = []
    for name in ("subject", "object", "aspect", "predicate"):
        text = getattr(bare, name)
        if text is not None:
            pairs.append((name, text))
    return pairs


def _candidate_lists(
    tokens: Sequence[str], elements: list[tuple[str, str]], cfg: AlignmentConfig
) -> list[list[CandidateSpan]]:
    lists = []
    for name, text in elements:
        candidates = candidate_spans(tokens, text, cfg)
        if not candidates:
            raise NoCandidateError(name, text)
        lists.append(candidates)
    return lists


_PRUNE_MARGIN = 1e-9


def _search_best(
    cand_lists: list[list[CandidateSpan]], require_disjoint: bool
) -> tuple[CandidateSpan, ...] | None:
    """Exact best combination under _combo_key, with sound pruning.

    Candidate lists arrive sorted by score, so the first entry of every
    remaining list bounds the achievable total score; branches that cannot
    come within a float-safety margin of the best are cut.  When the best
    so far is an all-exact combination, the score race is settled and the
    monotone pairwise-distance sum prunes as well.  The margins only ever
    drop strictly worse branches, so the result equals the oracle's.
    """
    n = len(cand_lists)
    suffix_max = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix_max[i] = suffix_max[i + 1] + cand_lists[i][0].score
    best_key = None
    best: tuple[CandidateSpan, ...] | None = None
    chosen: list[CandidateSpan] = []

    def recurse(partial_score: float, partial_distance: float) -> None:
        nonlocal best_key, best
        i = len(chosen)
        if i == n:
            key = _combo_key(chosen)
            if best_key is None or key < best_key:
                best_key = key
                best = tuple(chosen)
            return
        for candidate in cand_lists[i]:
            if require_disjoint and any(_overlaps(candidate, p) for p in chosen):
                continue
            score = partial_score + candidate.score
            distance = partial_distance + sum(
                abs(candidate.center - p.center) for p in chosen
            )
            if best_key is not None:
                best_score = -best_key[1]
                if score + suffix_max[i + 1] < best_score - _PRUNE_MARGIN:
                    continue
                if best_score >= n - _PRUNE_MARGIN:
                    # Every element of the best matched exactly; a partial
                    # falling short on score can never catch up, and among
                    # all-exact prefixes only the distance can still move.
                    if score < (i + 1) - _PRUNE_MARGIN:
                        continue
                    if distance > best_key[2]:
                        continue
            chosen.append(candidate)
            recurse(score, distance)
            chosen.pop()

    recurse(0.0, 0.0)
    return best


def _build_quintuple(
    tokens: Sequence[str],
    elements: list[tuple[str, str]],
    combo: Sequence[CandidateSpan],
    label,
) -> Quintuple:
    spans = {}
    for (name, _), candidate in zip(elements, combo):
        spans[name] = ElementSpan.from_phrase(
            candidate.start, tokens[candidate.start - 1 : candidate.end]
        )
    return Quintuple(
        subject=spans.get("subject"),
        object=spans.get("object"),
        aspect=spans.get("aspect"),
        predicate=spans["predicate"],
        label=label,
    )


def align_quintuple(
    tokens: Sequence[str], bare: BareQuintuple, cfg: AlignmentConfig | None = None
) -> Quintuple:
    """Recover token indices for a bare quintuple against a sentence.

    Raises NoCandidateError when any present element has no window above
    the threshold.  The returned spans copy their tokens from the sentence,
    not from the generated text, so the result always validates.
    """
    cfg = cfg or AlignmentConfig()
    elements = _present_elements(bare)
    cand_lists = _candidate_lists(tokens, elements, cfg)
    combo = _search_best(cand_lists, require_disjoint=True)
    if combo is None:
        combo = _search_best(cand_lists, require_disjoint=False)
    assert combo is not None  # every list is non-empty
    return _build_quintuple(tokens, elements, combo, bare.label)


def align_oracle(
    tokens: Sequence[str], bare: BareQuintuple, cfg: AlignmentConfig | None = None
) -> Quintuple:
    """Reference alignment by exhaustive enumeration, no pruning.

    Same contract as align_quintuple; intended for tests and small inputs
    only, since it visits every candidate combination.
    """
    cfg = cfg or AlignmentConfig()
    elements = _present_elements(bare)
    cand_lists = _candidate_lists(tokens, elements, cfg)
    best = min(itertools.product(*cand_lists), key=_combo_key)
    return _build_quintuple(tokens, elements, best, bare.label)


def measure_gold_recovery(records, cfg: AlignmentConfig | None = None) -> dict:
    """Corpus statistic: how often gold quintuples survive a text round trip.

    Each gold quintuple is stripped to its bare projection and re-aligned
    against its own sentence.  Reported are the fraction whose spans come
    back with the same surface text per element, and the fraction that come
    back at the exact gold positions.  Duplicate surface phrases in a
    sentence can legitimately move positions, so this is measured rather
    than asserted.
    """
    cfg = cfg or AlignmentConfig()
    total = 0
    surface = 0
    exact = 0
    unalignable = 0
    for record in records:
        for quintuple in record.quintuples:
            total += 1
            try:
                realigned = align_quintuple(record.tokens, quintuple.to_bare(), cfg)
            except NoCandidateError:
                unalignable += 1
                continue
            if realigned == quintuple:
                exact += 1
                surface += 1
                continue
            matches = all(
                (getattr(realigned, name) is None) == (getattr(quintuple, name) is None)
                and (
                    getattr(realigned, name) is None
                    or getattr(realigned, name).text == getattr(quintuple, name).text
                )
                for name in ("subject", "object", "aspect", "predicate")
            )
            if matches:
                surface += 1
    return {
        "total": total,
        "surface_match": surface,
        "position_exact": exact,
        "unalignable": unalignable,
        "surface_match_rate": surface / total if total else 0.0,
        "position_exact_rate": exact / total if total else 0.0,
    }
