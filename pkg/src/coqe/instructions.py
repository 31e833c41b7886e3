"""Multi-task instruction dataset construction.

Each comparative review is expanded into one training sample per sub-task.
A sub-task asks for a subset of the five quintuple elements; its target is
the delimited rendering of the gold quintuples restricted to that subset,
with absent elements written as "None" and multiple quintuples joined by
"; ".  Sub-task ids spell the requested elements with the letters
S(ubject), O(bject), A(spect), P(redicate), L(abel).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import BareQuintuple, CorpusRecord, Quintuple

_LETTER_TO_ELEMENT = {
    "S": "subject",
    "O": "object",
    "A": "aspect",
    "P": "predicate",
    "L": "label",
}


class SubTask(enum.Enum):
    """The ten element-subset extraction tasks."""

    SOAPL = "SOAPL"
    SOAP = "SOAP"
    SOAL = "SOAL"
    SOA = "SOA"
    SOL = "SOL"
    SOP = "SOP"
    APL = "APL"
    SO = "SO"
    AP = "AP"
    AL = "AL"

    @property
    def elements(self) -> tuple[str, ...]:
        return tuple(_LETTER_TO_ELEMENT[ch] for ch in self.value)


SUBTASK_ORDER = tuple(SubTask)

_ELEMENT_PHRASES = {
    "subject": "subject",
    "object": "object",
    "aspect": "aspect",
    "predicate": "predicate",
    "label": "comparison type",
}

_COUNT_WORDS = {2: "two", 3: "three", 4: "four", 5: "five"}


def _default_instruction(subtask: SubTask) -> str:
    phrases = [_ELEMENT_PHRASES[e] for e in subtask.elements]
    if len(phrases) == 2:
        listing = f"{phrases[0]} and {phrases[1]}"
    else:
        listing = ", ".join(phrases[:-1]) + f", and {phrases[-1]}"
    count = _COUNT_WORDS[len(phrases)]
    return f"Please extract {count} elements including {listing} in the sentence"


DEFAULT_INSTRUCTIONS: Mapping[SubTask, str] = {
    task: _default_instruction(task) for task in SubTask
}


@dataclass(frozen=True)
class InstructionSample:
    """One (instruction, input, target) row for generative training."""

    id: str
    task: SubTask
    instruction: str
    input: str
    target: str


def project(quintuple: Quintuple | BareQuintuple, subtask: SubTask) -> tuple[str, ...]:
    """Project a quintuple onto a sub-task's element subset.

    Fields come back in the canonical subject, object, aspect, predicate,
    label order restricted to the subset, with "None" for absent elements.
    """
    if isinstance(quintuple, Quintuple):
        quintuple = quintuple.to_bare()
    values = {
        "subject": quintuple.subject,
        "object": quintuple.object,
        "aspect": quintuple.aspect,
        "predicate": quintuple.predicate,
        "label": quintuple.label.value,
    }
    return tuple(values[e] if values[e] is not None else "None" for e in subtask.elements)


def render_target(quintuples: Sequence[Quintuple | BareQuintuple], subtask: SubTask) -> str:
    """Delimited target string for one record's quintuples under a sub-task."""
    return "; ".join("{" + "; ".join(project(q, subtask)) + "}" for q in quintuples)


def build_dataset(
    corpus: Iterable[CorpusRecord],
    subtasks: Sequence[SubTask] | None = None,
    include_noncomparative: bool = False,
    instruction_texts: Mapping[SubTask, str] | None = None,
) -> list[InstructionSample]:
    """Expand a corpus into instruction samples, one per record x sub-task.

    Sample order is record order crossed with the fixed sub-task order.
    Non-comparative records are skipped unless ``include_noncomparative``
    is set, in which case their target is the literal "None".  A custom
    ``instruction_texts`` table substitutes localized prompts.
    """
    selected = tuple(subtasks) if subtasks is not None else SUBTASK_ORDER
    texts = instruction_texts if instruction_texts is not None else DEFAULT_INSTRUCTIONS
    samples: list[InstructionSample] = []
    for record in corpus:
        if not record.is_comparative and not include_noncomparative:
            continue
        input_text = " ".join(record.tokens)
        for subtask in selected:
            target = render_target(record.quintuples, subtask) if record.is_comparative else "None"
            samples.append(
                InstructionSample(
                    id=f"{record.id}::{subtask.value}",
                    task=subtask,
                    instruction=texts[subtask],
                    input=input_text,
                    target=target,
                )
            )
    return samples


def sample_to_json(sample: InstructionSample) -> str:
    obj = {
        "id": sample.id,
        "task": sample.task.value,
        "instruction": sample.instruction,
        "input": sample.input,
        "target": sample.target,
    }
    return json.dumps(obj, ensure_ascii=False)


def save_dataset(samples: Iterable[InstructionSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for sample in samples:
            handle.write(sample_to_json(sample))
            handle.write("\n")
