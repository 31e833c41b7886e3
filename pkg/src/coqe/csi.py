"""Comparative sentence identification: stage 1 of the pipeline.

A linear-softmax head over pluggable feature vectors decides whether a
review contains a comparison.  The default representation hashes word
unigrams/bigrams and character 3-5 grams into 2^18 buckets with CRC-32 (a
stable hash, unlike Python's builtin) and L2-normalizes the counts.
Externally computed sentence embeddings can be substituted anywhere the
hashed features are used, via per-id vector files.

The module also houses the annotation filter that removes non-comparative
records whose text is suspiciously similar to a comparative one, a symptom
of missing gold annotations.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .base import DEFAULT_SEED, CoqeError
from .corpus import CorpusRecord, normalize_text, tokenize

DIMENSION = 2**18
_BUCKET_MASK = DIMENSION - 1

# Class order for every probability pair this module produces.
CLASSES = ("comparative", "non-comparative")
COMPARATIVE, NON_COMPARATIVE = 0, 1

MODEL_FORMAT_VERSION = 1


class DimensionMismatchError(CoqeError):
    """Feature vector and head dimensions disagree."""


class SingleClassCorpusError(CoqeError):
    """Training requires at least one record of each class."""


class MissingVectorError(CoqeError):
    """The external-vector file lacks an id the filter needs."""


def hash_bucket(key: str) -> int:
    """Stable feature bucket: CRC-32 of the UTF-8 key, masked to 2^18."""
    return zlib.crc32(key.encode("utf-8")) & _BUCKET_MASK


def feature_counts(text: str) -> dict[str, int]:
    """Raw (un-hashed, un-normalized) feature keys and counts for a text.

    Word unigrams ("w:"), word bigrams ("b:"), and character 3-5 grams
    ("c3:".."c5:") over the normalized string, spaces included.
    """
    text = normalize_text(text)
    counts: dict[str, int] = {}
    tokens = tokenize(text)
    for token in tokens:
        key = f"w:{token}"
        counts[key] = counts.get(key, 0) + 1
    for first, second in zip(tokens, tokens[1:]):
        key = f"b:{first} {second}"
        counts[key] = counts.get(key, 0) + 1
    for n in (3, 4, 5):
        for i in range(len(text) - n + 1):
            key = f"c{n}:{text[i : i + n]}"
            counts[key] = counts.get(key, 0) + 1
    return counts


@dataclass(frozen=True)
class FeatureVector:
    """Sparse feature representation: bucket index to finite weight."""

    weights: dict[int, float]
    dimension: int = DIMENSION

    def __post_init__(self):
        for index, value in self.weights.items():
            if not 0 <= index < self.dimension:
                raise DimensionMismatchError(
                    f"feature index {index} outside dimension {self.dimension}"
                )
            if not math.isfinite(value):
                raise ValueError(f"non-finite weight at index {index}")

    @classmethod
    def from_dense(cls, vector: Sequence[float]) -> "FeatureVector":
        return cls(
            {i: float(v) for i, v in enumerate(vector) if v != 0.0},
            dimension=len(vector),
        )

    @property
    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.weights.values()))

    def dot(self, other: "FeatureVector") -> float:
        if self.dimension != other.dimension:
            raise DimensionMismatchError(
                f"dimensions {self.dimension} and {other.dimension} disagree"
            )
        small, large = sorted((self.weights, other.weights), key=len)
        return sum(value * large.get(index, 0.0) for index, value in small.items())


def featurize(text: str) -> FeatureVector:
    """Hash the n-gram counts into 2^18 buckets and L2-normalize."""
    buckets: dict[int, float] = {}
    for key, count in feature_counts(text).items():
        index = hash_bucket(key)
        buckets[index] = buckets.get(index, 0.0) + count
    norm = math.sqrt(sum(v * v for v in buckets.values()))
    if norm > 0:
        buckets = {i: v / norm for i, v in buckets.items()}
    return FeatureVector(buckets)


@dataclass(frozen=True)
class LinearHead:
    """Two-class linear classifier: probabilities are softmax(W.x + b).

    Row 0 scores the comparative class, row 1 the non-comparative class.
    ``loss_history`` records the full-batch training loss per epoch.
    """

    weights: np.ndarray  # shape (2, dimension)
    bias: np.ndarray  # shape (2,)
    dimension: int = DIMENSION
    loss_history: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.weights.shape != (2, self.dimension) or self.bias.shape != (2,):
            raise DimensionMismatchError(
                f"head shapes {self.weights.shape}/{self.bias.shape} do not fit "
                f"dimension {self.dimension}"
            )
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise ValueError("head parameters must be finite")

    @classmethod
    def zeros(cls, dimension: int = DIMENSION) -> "LinearHead":
        return cls(np.zeros((2, dimension)), np.zeros(2), dimension)


def _logits(head: LinearHead, fv: FeatureVector) -> np.ndarray:
    if fv.dimension != head.dimension:
        raise DimensionMismatchError(
            f"vector dimension {fv.dimension} does not match head {head.dimension}"
        )
    z = head.bias.astype(float).copy()
    for index, value in fv.weights.items():
        z[0] += head.weights[0, index] * value
        z[1] += head.weights[1, index] * value
    return z


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def predict_proba(head: LinearHead, fv: FeatureVector) -> np.ndarray:
    """Class probability pair (comparative, non-comparative); sums to 1."""
    return _softmax(_logits(head, fv))


def predict_comparative(head: LinearHead, fv: FeatureVector, threshold: float = 0.5) -> bool:
    return predict_proba(head, fv)[COMPARATIVE] >= threshold


def loss_and_gradient(
    weights: np.ndarray,
    bias: np.ndarray,
    vectors: Sequence[FeatureVector],
    labels: Sequence[int],
    l2: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy with an L2 penalty, plus its exact gradient.

    The penalty covers the bias as well, so a very large ``l2`` drives the
    probabilities all the way to the uniform pair.  Exposed separately so
    the analytic gradient can be checked against finite differences.
    """
    n = len(vectors)
    grad_w = np.zeros_like(weights)
    grad_b = np.zeros_like(bias)
    loss = 0.0
    for fv, label in zip(vectors, labels):
        z = bias.astype(float).copy()
        for index, value in fv.weights.items():
            z[0] += weights[0, index] * value
            z[1] += weights[1, index] * value
        z -= z.max()
        log_norm = math.log(np.exp(z).sum())
        p = np.exp(z - log_norm)
        loss += log_norm - z[label]
        err = p.copy()
        err[label] -= 1.0
        grad_b += err
        for index, value in fv.weights.items():
            grad_w[0, index] += err[0] * value
            grad_w[1, index] += err[1] * value
    loss /= n
    grad_w /= n
    grad_b /= n
    loss += 0.5 * l2 * (float(np.sum(weights**2)) + float(np.sum(bias**2)))
    grad_w += l2 * weights
    grad_b += l2 * bias
    return loss, grad_w, grad_b


def record_vectors(
    records: Sequence[CorpusRecord], vectors: Mapping[str, np.ndarray] | None
) -> list[FeatureVector]:
    if vectors is None:
        return [featurize(record.text) for record in records]
    out = []
    for record in records:
        if record.id not in vectors:
            raise MissingVectorError(f"no vector for record {record.id!r}")
        out.append(FeatureVector.from_dense(vectors[record.id]))
    return out


def train(
    corpus: Sequence[CorpusRecord],
    *,
    epochs: int = 50,
    lr: float = 1.0,
    l2: float = 0.0,
    seed: int = DEFAULT_SEED,
    vectors: Mapping[str, np.ndarray] | None = None,
) -> LinearHead:
    """Fit the head by full-batch gradient descent on cross-entropy.

    The label of a record is whether it carries any gold quintuples.
    Training is deterministic for a fixed seed (the optimization itself is
    seed-free; the seed is recorded so saved models state their origin).
    At the default learning rate the loss is non-increasing across epochs.
    """
    labels = [COMPARATIVE if r.is_comparative else NON_COMPARATIVE for r in corpus]
    if len(set(labels)) < 2:
        raise SingleClassCorpusError(
            "training corpus must contain both comparative and non-comparative records"
        )
    fvs = record_vectors(corpus, vectors)
    dimension = fvs[0].dimension
    weights = np.zeros((2, dimension))
    bias = np.zeros(2)
    history = []
    for _ in range(epochs):
        loss, grad_w, grad_b = loss_and_gradient(weights, bias, fvs, labels, l2)
        history.append(loss)
        weights -= lr * grad_w
        bias -= lr * grad_b
    return LinearHead(weights, bias, dimension, loss_history=tuple(history))


def evaluate_csi(
    head: LinearHead,
    corpus: Sequence[CorpusRecord],
    threshold: float = 0.5,
    vectors: Mapping[str, np.ndarray] | None = None,
) -> dict[str, float]:
    """Precision/recall/F1 for the comparative class; 0/0 counts as 0."""
    fvs = record_vectors(corpus, vectors)
    tp = fp = fn = 0
    for record, fv in zip(corpus, fvs):
        predicted = predict_proba(head, fv)[COMPARATIVE] >= threshold
        actual = record.is_comparative
        if predicted and actual:
            tp += 1
        elif predicted and not actual:
            fp += 1
        elif actual:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


@dataclass(frozen=True)
class SimilarityConfig:
    """Annotation-filter settings.

    backend "lexical" compares hashed n-gram vectors; "external-vectors"
    compares vectors supplied per record id (e.g. sentence embeddings).
    """

    threshold: float = 0.8
    backend: str = "lexical"

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.backend not in ("lexical", "external-vectors"):
            raise ValueError(f"backend must be 'lexical' or 'external-vectors', got {self.backend!r}")


def _cosine_dense(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v)) / (nu * nv)


def filter_unannotated(
    corpus: Sequence[CorpusRecord],
    sim_cfg: SimilarityConfig | None = None,
    vectors: Mapping[str, np.ndarray] | None = None,
) -> tuple[list[CorpusRecord], list[str]]:
    """Drop non-comparative records too similar to a comparative one.

    A record with no quintuples is removed when its maximum similarity to
    any comparative record's text reaches the threshold; such records
    usually show a comparative structure that simply was not annotated.
    Comparative records are never removed.  Returns the kept corpus in
    order plus the removed ids.
    """
    sim_cfg = sim_cfg or SimilarityConfig()
    comparative = [r for r in corpus if r.is_comparative]
    if sim_cfg.backend == "external-vectors":
        if vectors is None:
            raise MissingVectorError("external-vectors backend requires a vector table")
        reps = {}
        for record in corpus:
            if record.id not in vectors:
                raise MissingVectorError(f"no vector for record {record.id!r}")
            reps[record.id] = np.asarray(vectors[record.id], dtype=float)
        comp_reps = [reps[r.id] for r in comparative]

        def best(record: CorpusRecord) -> float:
            return max((_cosine_dense(reps[record.id], c) for c in comp_reps), default=0.0)

    else:
        reps_lex = {r.id: featurize(r.text) for r in corpus}
        comp_lex = [reps_lex[r.id] for r in comparative]

        # featurize L2-normalizes, so the dot product already is the cosine.
        def best(record: CorpusRecord) -> float:
            return max((reps_lex[record.id].dot(c) for c in comp_lex), default=0.0)

    kept: list[CorpusRecord] = []
    removed: list[str] = []
    for record in corpus:
        if not record.is_comparative and best(record) >= sim_cfg.threshold:
            removed.append(record.id)
        else:
            kept.append(record)
    return kept, removed


def save_model(
    head: LinearHead,
    path: str | Path,
    hyperparams: Mapping[str, float] | None = None,
    seed: int | None = None,
) -> None:
    """Write the head to a versioned .npz bundle."""
    meta = {
        "format_version": MODEL_FORMAT_VERSION,
        "dimension": head.dimension,
        "classes": list(CLASSES),
        "hyperparams": dict(hyperparams or {}),
        "seed": seed if seed is not None else DEFAULT_SEED,
    }
    with open(path, "wb") as handle:
        np.savez_compressed(
            handle,
            weights=head.weights,
            bias=head.bias,
            meta=np.array(json.dumps(meta)),
        )


def load_model(path: str | Path) -> tuple[LinearHead, dict]:
    with np.load(path, allow_pickle=False) as bundle:
        meta = json.loads(str(bundle["meta"][()]))
        if meta.get("format_version") != MODEL_FORMAT_VERSION:
            raise CoqeError(
                f"unsupported model format version {meta.get('format_version')!r}"
            )
        head = LinearHead(bundle["weights"], bundle["bias"], meta["dimension"])
    return head, meta


def load_vectors(path: str | Path) -> dict[str, np.ndarray]:
    """Read a per-id embedding file: JSONL of {"id": ..., "vector": [...]}."""
    table: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                record_id = obj["id"]
                vector = np.asarray(obj["vector"], dtype=float)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CoqeError(f"bad vector file line {line_no}: {exc}") from exc
            table[record_id] = vector
    return table
