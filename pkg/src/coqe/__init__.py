"""Comparative opinion quintuple extraction toolkit.

Models reviews annotated with indexed comparative quintuples, renders and
parses generation templates, recovers token indices from bare generated
text, builds multi-task instruction datasets, augments training corpora,
classifies comparative sentences, and scores predictions with exact-match
micro/macro metric grids.
"""

from .base import DEFAULT_SEED, CoqeError
from .corpus import (
    BareQuintuple,
    ComparisonLabel,
    CorpusRecord,
    ElementSpan,
    Quintuple,
    load_corpus,
    load_corpus_lenient,
    normalize_text,
    parse_record,
    save_corpus,
    tokenize,
    validate_record,
    write_record,
)

__version__ = "0.1.0"

__all__ = [
    "BareQuintuple",
    "ComparisonLabel",
    "CoqeError",
    "CorpusRecord",
    "DEFAULT_SEED",
    "ElementSpan",
    "Quintuple",
    "load_corpus",
    "load_corpus_lenient",
    "normalize_text",
    "parse_record",
    "save_corpus",
    "tokenize",
    "validate_record",
    "write_record",
    "__version__",
]
