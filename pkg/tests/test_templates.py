import random

import pytest

from coqe.corpus import BareQuintuple, ComparisonLabel
from coqe.templates import (
    IssueKind,
    TemplateKind,
    parse_generation,
    render,
)

from conftest import SAMPLE_DELIMITED

LABELS = list(ComparisonLabel)


def bare(s=None, o=None, a=None, p="better", label=ComparisonLabel.COM_POS):
    return BareQuintuple(subject=s, object=o, aspect=a, predicate=p, label=label)


class TestRender:
    def test_delimited_sample(self, sample_record):
        assert render(sample_record.quintuples) == SAMPLE_DELIMITED

    def test_tagged_sample(self, sample_record):
        assert render(sample_record.quintuples, TemplateKind.TAGGED) == (
            "[s] iPhone 14 Pro Max [/s] [o] its competitors [/o] "
            "[a] battery life [/a] [p] better [/p] [l] COM+ [/l]"
        )

    def test_absent_elements_render_as_none(self):
        assert render([bare()]) == "{None; None; None; better; COM+}"

    def test_two_quintuples_joined_once(self):
        text = render([bare(s="a"), bare(s="b")])
        assert text == "{a; None; None; better; COM+}; {b; None; None; better; COM+}"
        assert text.count("}; {") == 1

    def test_delimited_semicolons_per_group(self):
        for k in (1, 2, 3):
            text = render([bare(s="a", o="b", a="c")] * k)
            # 4 separators inside each group plus one per group boundary
            assert text.count(";") == 4 * k + (k - 1)


class TestParseDelimited:
    def test_single_group(self):
        quintuples, issues = parse_generation(SAMPLE_DELIMITED)
        assert issues == []
        assert quintuples == [
            bare(s="iPhone 14 Pro Max", o="its competitors", a="battery life")
        ]

    def test_none_fields(self):
        quintuples, issues = parse_generation("{None; None; None; better; COM+}")
        assert issues == []
        assert quintuples == [bare()]

    def test_none_is_case_insensitive(self):
        quintuples, _ = parse_generation("{NONE; none; NoNe; better; COM+}")
        assert quintuples == [bare()]

    def test_wrong_field_count_recovers(self):
        quintuples, issues = parse_generation("{a; b; c; d; COM+}; {x; y}")
        assert len(quintuples) == 1
        assert quintuples[0].subject == "a"
        assert [i.kind for i in issues] == [IssueKind.WRONG_FIELD_COUNT]

    def test_unknown_label_issue(self):
        quintuples, issues = parse_generation("{a; b; c; d; GREAT}")
        assert quintuples == []
        assert [i.kind for i in issues] == [IssueKind.UNKNOWN_LABEL]

    def test_missing_predicate_issue(self):
        quintuples, issues = parse_generation("{a; b; c; None; COM}")
        assert quintuples == []
        assert [i.kind for i in issues] == [IssueKind.MISSING_PREDICATE]

    def test_unbalanced_braces_issue(self):
        quintuples, issues = parse_generation("{a; b; c; d; COM+}; {e; f")
        assert len(quintuples) == 1
        assert IssueKind.UNBALANCED in [i.kind for i in issues]

    def test_stray_text_flagged(self):
        _, issues = parse_generation("a; b; c; d; COM+")
        assert [i.kind for i in issues] == [IssueKind.UNBALANCED]

    def test_empty_and_none_outputs(self):
        assert parse_generation("") == ([], [])
        assert parse_generation("None") == ([], [])
        assert parse_generation("  none ; ") == ([], [])

    def test_empty_field_means_absent(self):
        quintuples, issues = parse_generation("{; ; ; better; COM+}")
        assert issues == []
        assert quintuples == [bare()]

    def test_subject_containing_semicolon_recovered(self):
        # Over-split resolved by keeping the last four separators.
        quintuples, issues = parse_generation("{a; b; o; asp; pred; COM+}")
        assert issues == []
        assert quintuples[0].subject == "a; b"
        assert quintuples[0].object == "o"

    def test_balanced_braces_inside_field(self):
        quintuples, issues = parse_generation("{a {x; y} b; o; asp; pred; COM+}")
        assert issues == []
        assert quintuples[0].subject == "a {x; y} b"


class TestParseTagged:
    def test_single_group(self, sample_record):
        text = render(sample_record.quintuples, TemplateKind.TAGGED)
        quintuples, issues = parse_generation(text, TemplateKind.TAGGED)
        assert issues == []
        assert quintuples == [sample_record.quintuples[0].to_bare()]

    def test_none_fields(self):
        text = "[s] None [/s] [o] None [/o] [a] None [/a] [p] better [/p] [l] COM+ [/l]"
        quintuples, issues = parse_generation(text, TemplateKind.TAGGED)
        assert issues == []
        assert quintuples == [bare()]

    def test_broken_tags_flagged(self):
        quintuples, issues = parse_generation(
            "[s] a [/s] [o] b [/o] loose text", TemplateKind.TAGGED
        )
        assert quintuples == []
        assert [i.kind for i in issues] == [IssueKind.UNBALANCED]

    def test_unknown_label_issue(self):
        text = "[s] a [/s] [o] b [/o] [a] c [/a] [p] d [/p] [l] NOPE [/l]"
        _, issues = parse_generation(text, TemplateKind.TAGGED)
        assert [i.kind for i in issues] == [IssueKind.UNKNOWN_LABEL]


def random_bare(rng: random.Random) -> BareQuintuple:
    # Texts stay free of the structural characters and the literal "None",
    # which are unrepresentable in the templates by design.
    words = ["pin", "máy", "tốt", "hơn", "rẻ", "đẹp", "xịn", "bền", "14", "Pro"]

    def text():
        return " ".join(rng.choice(words) for _ in range(rng.randint(1, 3)))

    return BareQuintuple(
        subject=text() if rng.random() < 0.7 else None,
        object=text() if rng.random() < 0.7 else None,
        aspect=text() if rng.random() < 0.7 else None,
        predicate=text(),
        label=rng.choice(LABELS),
    )


class TestRoundTrip:
    @pytest.mark.parametrize("kind", [TemplateKind.DELIMITED, TemplateKind.TAGGED])
    def test_random_round_trips(self, kind):
        rng = random.Random(42)
        for _ in range(500):
            quintuples = [random_bare(rng) for _ in range(rng.randint(1, 3))]
            parsed, issues = parse_generation(render(quintuples, kind), kind)
            assert issues == []
            assert parsed == quintuples

    def test_indexed_quintuples_round_trip_to_bare(self, sample_record):
        for kind in TemplateKind:
            parsed, issues = parse_generation(render(sample_record.quintuples, kind), kind)
            assert issues == []
            assert parsed == [q.to_bare() for q in sample_record.quintuples]


class TestFuzzSafety:
    def test_never_raises_on_garbage(self):
        rng = random.Random(1234)
        alphabet = "{};[]()/spoal None COM+ \t\nbetter&&;"
        for _ in range(2000):
            text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
            for kind in TemplateKind:
                quintuples, issues = parse_generation(text, kind)
                assert isinstance(quintuples, list)
                assert isinstance(issues, list)
