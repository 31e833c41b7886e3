"""Corpus augmentation by gold-element replacement.

The generator collects every gold subject, object and aspect phrase into
per-element word sets, and every (predicate, label) pair jointly, since the
comparison label depends on the predicate wording.  New variants of a
review are then built by splicing randomly drawn replacements over the
original span positions and recomputing every token index in the record.
A final pass drops duplicates and corrupt variants and balances the kept
variants by how many elements their quintuples carry.

All randomness flows from named, per-record seeded streams, so the same
corpus and seed always produce byte-identical output.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .align import AlignmentConfig, NoCandidateError, align_quintuple
from .base import DEFAULT_SEED, CoqeError
from .corpus import (
    ComparisonLabel,
    CorpusError,
    CorpusRecord,
    ElementSpan,
    Quintuple,
    normalize_text,
    validate_record,
)

_BALANCE_RE = re.compile(r"^(min|off|cap:[1-9][0-9]*)$")


class OverlappingSpansError(CoqeError):
    """Two gold spans in one record occupy overlapping positions."""


class DiscontiguousSpanError(CoqeError):
    """A gold span has gaps; splice-based replacement cannot rebuild it."""


@dataclass(frozen=True)
class WordSets:
    """Replacement pools harvested from gold quintuples.

    Multisets, stored as tuples in collection order: frequent gold phrases
    are proportionally more likely to be drawn.  Predicates are never
    stored without their label.
    """

    subjects: tuple[str, ...] = ()
    objects: tuple[str, ...] = ()
    aspects: tuple[str, ...] = ()
    predicate_label_pairs: tuple[tuple[str, ComparisonLabel], ...] = ()

    def pool(self, element: str) -> tuple[str, ...]:
        return {"subject": self.subjects, "object": self.objects, "aspect": self.aspects}[
            element
        ]


@dataclass(frozen=True)
class AugmentConfig:
    seed: int = DEFAULT_SEED
    per_record_samples: int = 1
    replace_probability: float = 0.5
    balance: str = "min"  # "min", "off", or "cap:N"

    def __post_init__(self):
        if not 0.0 <= self.replace_probability <= 1.0:
            raise ValueError(
                f"replace_probability must be in [0, 1], got {self.replace_probability}"
            )
        if self.per_record_samples < 0:
            raise ValueError("per_record_samples must be non-negative")
        if not _BALANCE_RE.match(self.balance):
            raise ValueError(f"balance must be 'min', 'off' or 'cap:N', got {self.balance!r}")


@dataclass(frozen=True)
class AugmentNotice:
    """One non-fatal event from the augmentation pipeline."""

    record_id: str
    kind: str
    detail: str


def collect_word_sets(corpus: Iterable[CorpusRecord]) -> WordSets:
    """Harvest one entry per gold element occurrence, in corpus order."""
    subjects: list[str] = []
    objects: list[str] = []
    aspects: list[str] = []
    pairs: list[tuple[str, ComparisonLabel]] = []
    for record in corpus:
        for quintuple in record.quintuples:
            if quintuple.subject is not None:
                subjects.append(quintuple.subject.text)
            if quintuple.object is not None:
                objects.append(quintuple.object.text)
            if quintuple.aspect is not None:
                aspects.append(quintuple.aspect.text)
            pairs.append((quintuple.predicate.text, quintuple.label))
    return WordSets(tuple(subjects), tuple(objects), tuple(aspects), tuple(pairs))


@dataclass
class _Site:
    """One distinct (position interval, role) replacement site."""

    start: int
    end: int
    role: str
    members: list[tuple[int, str]] = field(default_factory=list)  # (quintuple idx, role)
    new_tokens: tuple[str, ...] | None = None
    new_label: ComparisonLabel | None = None

    @property
    def replaced(self) -> bool:
        return self.new_tokens is not None

    @property
    def old_length(self) -> int:
        return self.end - self.start + 1

    @property
    def delta(self) -> int:
        return len(self.new_tokens) - self.old_length if self.replaced else 0


def _replacement_sites(record: CorpusRecord) -> list[_Site]:
    sites: dict[tuple[int, int, str], _Site] = {}
    for qi, quintuple in enumerate(record.quintuples):
        for role in ("subject", "object", "aspect", "predicate"):
            span = getattr(quintuple, role)
            if span is None:
                continue
            if not span.is_contiguous:
                raise DiscontiguousSpanError(
                    f"record {record.id}: {role} span {span.indices} is discontiguous"
                )
            key = (span.start, span.end, role)
            site = sites.setdefault(key, _Site(span.start, span.end, role))
            site.members.append((qi, role))
    ordered = sorted(sites.values(), key=lambda s: (s.start, s.end, s.role))
    for a, b in zip(ordered, ordered[1:]):
        if b.start <= a.end:
            raise OverlappingSpansError(
                f"record {record.id}: spans {a.start}-{a.end} ({a.role}) and "
                f"{b.start}-{b.end} ({b.role}) overlap"
            )
    return ordered


def _draw_replacements(
    sites: list[_Site],
    word_sets: WordSets,
    cfg: AugmentConfig,
    rng: random.Random,
    notices: list[AugmentNotice] | None,
    record_id: str,
) -> None:
    for site in sites:
        site.new_tokens = None
        site.new_label = None
        if rng.random() >= cfg.replace_probability:
            continue
        if site.role == "predicate":
            pool = word_sets.predicate_label_pairs
            if not pool:
                if notices is not None:
                    notices.append(
                        AugmentNotice(record_id, "empty-word-set", "predicate pool is empty")
                    )
                continue
            phrase, label = pool[rng.randrange(len(pool))]
            site.new_tokens = tuple(phrase.split(" "))
            site.new_label = label
        else:
            pool = word_sets.pool(site.role)
            if not pool:
                if notices is not None:
                    notices.append(
                        AugmentNotice(
                            record_id, "empty-word-set", f"{site.role} pool is empty"
                        )
                    )
                continue
            phrase = pool[rng.randrange(len(pool))]
            site.new_tokens = tuple(phrase.split(" "))


def _rebuild_record(record: CorpusRecord, sites: list[_Site], variant_id: str) -> CorpusRecord:
    # Splice right to left so earlier positions stay valid while editing.
    tokens = list(record.tokens)
    for site in sorted(sites, key=lambda s: s.start, reverse=True):
        if site.replaced:
            tokens[site.start - 1 : site.end] = list(site.new_tokens)

    def shift(position: int) -> int:
        return sum(s.delta for s in sites if s.end < position)

    site_by_key = {(s.start, s.end, s.role): s for s in sites}
    new_quintuples = []
    for quintuple in record.quintuples:
        spans: dict[str, ElementSpan | None] = {}
        label = quintuple.label
        for role in ("subject", "object", "aspect", "predicate"):
            span = getattr(quintuple, role)
            if span is None:
                spans[role] = None
                continue
            site = site_by_key[(span.start, span.end, role)]
            if site.replaced:
                spans[role] = ElementSpan.from_phrase(
                    site.start + shift(site.start), site.new_tokens
                )
                if role == "predicate":
                    label = site.new_label
            else:
                offset = shift(span.start)
                spans[role] = ElementSpan(
                    tuple((i + offset, t) for i, t in span.items)
                )
        new_quintuples.append(
            Quintuple(
                subject=spans["subject"],
                object=spans["object"],
                aspect=spans["aspect"],
                predicate=spans["predicate"],
                label=label,
            )
        )
    rebuilt = CorpusRecord(id=variant_id, text=" ".join(tokens), quintuples=tuple(new_quintuples))
    validate_record(rebuilt)
    return rebuilt


def record_rng(seed: int, record_id: str) -> random.Random:
    """Named per-record random stream; independent of corpus order."""
    return random.Random(f"{seed}:aug:{record_id}")


def augment_record(
    record: CorpusRecord,
    word_sets: WordSets,
    cfg: AugmentConfig,
    rng: random.Random,
    notices: list[AugmentNotice] | None = None,
) -> list[CorpusRecord]:
    """Produce ``per_record_samples`` spliced variants of one record.

    Each present element span is replaced with probability
    ``replace_probability``; predicates swap together with their label.
    Raises DiscontiguousSpanError or OverlappingSpansError when the
    record's gold spans cannot be spliced (callers skip such records).
    """
    if not record.is_comparative:
        return []
    sites = _replacement_sites(record)
    variants = []
    for k in range(cfg.per_record_samples):
        _draw_replacements(sites, word_sets, cfg, rng, notices, record.id)
        variants.append(_rebuild_record(record, sites, f"{record.id}-aug{k + 1}"))
    return variants


def augment_corpus(
    corpus: Sequence[CorpusRecord], cfg: AugmentConfig
) -> tuple[list[CorpusRecord], list[AugmentNotice]]:
    """Run collection and per-record augmentation over a whole corpus.

    Returns the raw augmented records (before balancing/filtering) plus
    notices for skipped records and empty replacement pools.
    """
    word_sets = collect_word_sets(corpus)
    augmented: list[CorpusRecord] = []
    notices: list[AugmentNotice] = []
    for record in corpus:
        if not record.is_comparative:
            continue
        rng = record_rng(cfg.seed, record.id)
        try:
            augmented.extend(augment_record(record, word_sets, cfg, rng, notices))
        except DiscontiguousSpanError as exc:
            notices.append(AugmentNotice(record.id, "discontiguous-span", str(exc)))
        except OverlappingSpansError as exc:
            notices.append(AugmentNotice(record.id, "overlapping-spans", str(exc)))
    return augmented, notices


def _element_count(record: CorpusRecord) -> int:
    # Bucket key: present elements among subject/object/aspect/predicate in
    # the record's first quintuple (predicate is always present).
    quintuple = record.quintuples[0]
    return 1 + sum(
        getattr(quintuple, name) is not None for name in ("subject", "object", "aspect")
    )


def _realignable(record: CorpusRecord) -> bool:
    for quintuple in record.quintuples:
        try:
            align_quintuple(record.tokens, quintuple.to_bare(), AlignmentConfig())
        except NoCandidateError:
            return False
    return True


def balance_and_filter(
    original: Sequence[CorpusRecord],
    augmented: Sequence[CorpusRecord],
    cfg: AugmentConfig,
    notices: list[AugmentNotice] | None = None,
) -> list[CorpusRecord]:
    """Deduplicate, re-validate, re-align, balance, then merge.

    Augmented records are dropped when their normalized text duplicates an
    original or earlier-kept variant, when they fail validation, or when a
    quintuple can no longer be located in its own sentence.  Survivors are
    grouped by per-quintuple element count and, under the default "min"
    policy, every group is downsampled to the smallest non-empty group's
    size.  "cap:N" enforces a fixed per-group ceiling; "off" keeps all.
    Originals always pass through untouched, ahead of the variants.
    """
    seen = {normalize_text(record.text) for record in original}
    kept: list[CorpusRecord] = []
    for record in augmented:
        text = normalize_text(record.text)
        if text in seen:
            if notices is not None:
                notices.append(AugmentNotice(record.id, "duplicate", "text already present"))
            continue
        try:
            validate_record(record)
        except CorpusError as exc:
            if notices is not None:
                notices.append(AugmentNotice(record.id, "invalid", str(exc)))
            continue
        if not record.quintuples or not _realignable(record):
            if notices is not None:
                notices.append(
                    AugmentNotice(record.id, "missing-order", "element not found in sentence")
                )
            continue
        seen.add(text)
        kept.append(record)

    if cfg.balance != "off" and kept:
        groups: dict[int, list[CorpusRecord]] = {}
        for record in kept:
            groups.setdefault(_element_count(record), []).append(record)
        if cfg.balance == "min":
            target = min(len(g) for g in groups.values())
            caps = {key: target for key in groups}
        else:
            cap = int(cfg.balance.split(":", 1)[1])
            caps = {key: cap for key in groups}
        rng = random.Random(f"{cfg.seed}:balance")
        chosen: set[str] = set()
        for key in sorted(groups):
            group = groups[key]
            cap = caps[key]
            if len(group) <= cap:
                chosen.update(r.id for r in group)
            else:
                picks = sorted(rng.sample(range(len(group)), cap))
                chosen.update(group[i].id for i in picks)
        kept = [record for record in kept if record.id in chosen]

    return list(original) + kept
