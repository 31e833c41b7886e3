import json

import pytest

from coqe.corpus import parse_record

# The running example used throughout the suite: one review with a fully
# populated quintuple, including the gold token indices.
SAMPLE_TEXT = "iPhone 14 Pro Max has a better battery life compared to its competitors"
SAMPLE_LINE = json.dumps(
    {
        "id": "r1",
        "text": SAMPLE_TEXT,
        "quintuples": [
            {
                "subject": ["1&&iPhone", "2&&14", "3&&Pro", "4&&Max"],
                "object": ["12&&its", "13&&competitors"],
                "aspect": ["8&&battery", "9&&life"],
                "predicate": ["7&&better"],
                "label": "COM+",
            }
        ],
    },
    ensure_ascii=False,
)

SAMPLE_DELIMITED = "{iPhone 14 Pro Max; its competitors; battery life; better; COM+}"


@pytest.fixture
def sample_record():
    return parse_record(SAMPLE_LINE)


@pytest.fixture
def sample_corpus_file(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(SAMPLE_LINE + "\n", encoding="utf-8")
    return path
