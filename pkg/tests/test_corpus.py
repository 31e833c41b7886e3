import json
import random

import pytest

from coqe.corpus import (
    BareQuintuple,
    ComparisonLabel,
    CorpusRecord,
    ElementSpan,
    IndexOutOfBoundsError,
    InvalidSpanError,
    MalformedIndexTokenError,
    MissingPredicateError,
    Quintuple,
    RecordFormatError,
    TokenMismatchError,
    UnknownLabelError,
    load_corpus,
    load_corpus_lenient,
    normalize_text,
    parse_record,
    save_corpus,
    tokenize,
    validate_record,
    write_record,
)

from conftest import SAMPLE_LINE, SAMPLE_TEXT


class TestNormalizeText:
    def test_collapses_multiple_spaces(self):
        assert normalize_text("iPhone  14   Pro") == "iPhone 14 Pro"

    def test_already_normalized(self):
        assert normalize_text("abc") == "abc"

    def test_mixed_whitespace_and_ends(self):
        assert normalize_text("  a\t b \n") == "a b"

    def test_empty(self):
        assert normalize_text("") == ""
        assert normalize_text("   \t\n") == ""


class TestTokenize:
    def test_sample_sentence(self):
        tokens = tokenize(SAMPLE_TEXT)
        assert len(tokens) == 13
        assert tokens[7 - 1] == "better"
        assert tokens[13 - 1] == "competitors"

    def test_empty(self):
        assert tokenize("") == []

    def test_two_tokens(self):
        assert tokenize("a b") == ["a", "b"]

    def test_join_round_trip_on_random_whitespace(self):
        rng = random.Random(7)
        whitespace = " \t\n  "
        words = ["ab", "c", "điện", "x&&y", "14"]
        for _ in range(200):
            raw = "".join(
                rng.choice(words) + rng.choice(whitespace) * rng.randint(0, 3)
                for _ in range(rng.randint(0, 8))
            )
            normalized = normalize_text(raw)
            assert " ".join(tokenize(normalized)) == normalized


class TestElementSpan:
    def test_text_and_indices(self):
        span = ElementSpan(((8, "battery"), (9, "life")))
        assert span.text == "battery life"
        assert span.indices == (8, 9)
        assert span.is_contiguous

    def test_discontiguous_allowed(self):
        span = ElementSpan(((1, "a"), (5, "b")))
        assert not span.is_contiguous

    def test_empty_rejected(self):
        with pytest.raises(InvalidSpanError):
            ElementSpan(())

    def test_non_increasing_rejected(self):
        with pytest.raises(InvalidSpanError):
            ElementSpan(((3, "a"), (3, "b")))
        with pytest.raises(InvalidSpanError):
            ElementSpan(((3, "a"), (2, "b")))

    def test_nonpositive_index_rejected(self):
        with pytest.raises(InvalidSpanError):
            ElementSpan(((0, "a"),))


class TestParseRecord:
    def test_sample_record(self):
        record = parse_record(SAMPLE_LINE)
        assert record.id == "r1"
        assert len(record.quintuples) == 1
        q = record.quintuples[0]
        assert q.subject.items == ((1, "iPhone"), (2, "14"), (3, "Pro"), (4, "Max"))
        assert q.object.items == ((12, "its"), (13, "competitors"))
        assert q.aspect.items == ((8, "battery"), (9, "life"))
        assert q.predicate.items == ((7, "better"),)
        assert q.label is ComparisonLabel.COM_POS

    def test_empty_quintuples(self):
        record = parse_record('{"id": "x", "text": "nothing here", "quintuples": []}')
        assert record.quintuples == ()
        assert not record.is_comparative

    def test_missing_predicate(self):
        line = json.dumps(
            {"id": "x", "text": "a b", "quintuples": [{"subject": ["1&&a"], "label": "EQL"}]}
        )
        with pytest.raises(MissingPredicateError):
            parse_record(line)

    def test_empty_predicate_list_is_missing(self):
        line = json.dumps(
            {"id": "x", "text": "a b", "quintuples": [{"predicate": [], "label": "EQL"}]}
        )
        with pytest.raises(MissingPredicateError):
            parse_record(line)

    def test_empty_element_list_is_absent(self):
        line = json.dumps(
            {
                "id": "x",
                "text": "a b",
                "quintuples": [{"subject": [], "predicate": ["1&&a"], "label": "EQL"}],
            }
        )
        record = parse_record(line)
        assert record.quintuples[0].subject is None

    def test_separator_splits_on_first_occurrence(self):
        line = json.dumps(
            {
                "id": "x",
                "text": "x A&&B y",
                "quintuples": [{"predicate": ["2&&A&&B"], "label": "DIF"}],
            }
        )
        record = parse_record(line)
        assert record.quintuples[0].predicate.items == ((2, "A&&B"),)

    @pytest.mark.parametrize("entry", ["7better", "x&&better", "0&&x", "-1&&x", "7&&", "3.5&&x"])
    def test_malformed_index_token(self, entry):
        line = json.dumps(
            {"id": "x", "text": "a b c d e f g h", "quintuples": [{"predicate": [entry], "label": "EQL"}]}
        )
        with pytest.raises(MalformedIndexTokenError):
            parse_record(line)

    def test_index_out_of_bounds(self):
        line = json.dumps(
            {"id": "x", "text": "a b", "quintuples": [{"predicate": ["3&&b"], "label": "EQL"}]}
        )
        with pytest.raises(IndexOutOfBoundsError):
            parse_record(line)

    def test_token_mismatch(self):
        line = json.dumps(
            {"id": "x", "text": "a b", "quintuples": [{"predicate": ["2&&a"], "label": "EQL"}]}
        )
        with pytest.raises(TokenMismatchError) as exc_info:
            parse_record(line)
        assert exc_info.value.record_id == "x"

    def test_unknown_label(self):
        line = json.dumps(
            {"id": "x", "text": "a b", "quintuples": [{"predicate": ["1&&a"], "label": "GOOD"}]}
        )
        with pytest.raises(UnknownLabelError):
            parse_record(line)

    def test_bad_json(self):
        with pytest.raises(RecordFormatError):
            parse_record("{nope")

    def test_non_string_id_rejected(self):
        with pytest.raises(RecordFormatError):
            parse_record('{"id": 5, "text": "a", "quintuples": []}')

    def test_missing_quintuples_field(self):
        with pytest.raises(RecordFormatError):
            parse_record('{"id": "x", "text": "a"}')


class TestWriteRecord:
    def test_sample_round_trips_byte_for_byte(self):
        record = parse_record(SAMPLE_LINE)
        assert write_record(record) == SAMPLE_LINE

    def test_empty_quintuple_record_round_trips(self):
        line = '{"id": "x", "text": "nothing here", "quintuples": []}'
        assert write_record(parse_record(line)) == line

    def test_separator_token_round_trips(self):
        record = CorpusRecord(
            id="x",
            text="x A&&B y",
            quintuples=(
                Quintuple(
                    predicate=ElementSpan(((2, "A&&B"),)), label=ComparisonLabel.DIF
                ),
            ),
        )
        assert parse_record(write_record(record)) == record

    def test_random_records_round_trip(self):
        rng = random.Random(11)
        vocab = ["máy", "pin", "tốt", "hơn", "rẻ", "a&&b", "x", "14"]
        labels = list(ComparisonLabel)
        for _ in range(100):
            tokens = [rng.choice(vocab) for _ in range(rng.randint(2, 10))]
            n = len(tokens)
            start = rng.randint(1, n)
            length = rng.randint(1, n - start + 1)
            predicate = ElementSpan.from_phrase(start, tokens[start - 1 : start - 1 + length])
            record = CorpusRecord(
                id=f"r{rng.randint(0, 999)}",
                text=" ".join(tokens),
                quintuples=(Quintuple(predicate=predicate, label=rng.choice(labels)),),
            )
            validate_record(record)
            again = parse_record(write_record(record))
            assert again == record
            assert write_record(again) == write_record(record)


class TestQuintupleModel:
    def test_predicate_required(self):
        with pytest.raises(MissingPredicateError):
            Quintuple(predicate=None, label=ComparisonLabel.EQL)

    def test_bare_projection(self, sample_record):
        bare = sample_record.quintuples[0].to_bare()
        assert bare == BareQuintuple(
            subject="iPhone 14 Pro Max",
            object="its competitors",
            aspect="battery life",
            predicate="better",
            label=ComparisonLabel.COM_POS,
        )

    def test_bare_rejects_blank_fields(self):
        with pytest.raises(InvalidSpanError):
            BareQuintuple(subject="  ", predicate="x", label=ComparisonLabel.EQL)

    def test_label_from_string(self):
        assert ComparisonLabel.from_string("SUP-") is ComparisonLabel.SUP_NEG
        with pytest.raises(UnknownLabelError):
            ComparisonLabel.from_string("sup-")

    def test_validation_agreement_invariant(self, sample_record):
        for q in sample_record.quintuples:
            for name in ("subject", "object", "aspect", "predicate"):
                span = getattr(q, name)
                if span is None:
                    continue
                for index, token in span.items:
                    assert sample_record.tokens[index - 1] == token


class TestCorpusIO:
    def test_load_strict(self, sample_corpus_file):
        records = load_corpus(sample_corpus_file)
        assert len(records) == 1
        assert records[0].id == "r1"

    def test_load_strict_raises_with_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        bad = '{"id": "x", "text": "a b", "quintuples": [{"predicate": ["9&&a"], "label": "EQL"}]}'
        path.write_text(SAMPLE_LINE + "\n" + bad + "\n", encoding="utf-8")
        with pytest.raises(IndexOutOfBoundsError) as exc_info:
            load_corpus(path)
        assert "line 2" in str(exc_info.value)

    def test_load_lenient_collects_issues(self, tmp_path):
        path = tmp_path / "mixed.jsonl"
        bad = '{"id": "bad", "text": "a b", "quintuples": [{"predicate": ["2&&zzz"], "label": "EQL"}]}'
        path.write_text(SAMPLE_LINE + "\n\n" + bad + "\n", encoding="utf-8")
        records, issues = load_corpus_lenient(path)
        assert [r.id for r in records] == ["r1"]
        assert len(issues) == 1
        assert issues[0].line_no == 3
        assert issues[0].record_id == "bad"

    def test_save_load_identity(self, tmp_path, sample_record):
        path = tmp_path / "out.jsonl"
        save_corpus([sample_record], path)
        assert load_corpus(path) == [sample_record]
