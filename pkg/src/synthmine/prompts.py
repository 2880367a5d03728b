"""Prompt templates, placeholder binding, and iterative prompt refinement.

A refinement run asks the model for five candidate prompts, previews a
fixed number of samples per candidate, records a human selection, and
re-seeds the next round from the winner until the round budget (default
three) is exhausted. Every transition is appended to a JSONL event log
shared by the CLI and the review server.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import (
    CandidateCountMismatch,
    InvalidSelection,
    RoundNotReady,
    UnboundPlaceholder,
    UnknownPlaceholder,
    UnparseableReply,
)
from .gateway import GENERATION_TEMPERATURE, ChatRequest, user_request

NER_GEN = "NER-gen"
RE_GEN = "RE-gen"
NER_ZEROSHOT = "NER-zeroshot"
RE_ZEROSHOT = "RE-zeroshot"

TASKS = (NER_GEN, RE_GEN, NER_ZEROSHOT, RE_ZEROSHOT)

AWAITING_SAMPLES = "awaiting-samples"
AWAITING_SELECTION = "awaiting-selection"
CLOSED = "closed"

CANDIDATES_PER_ROUND = 5
DEFAULT_ROUND_BUDGET = 3
DEFAULT_SAMPLES_PER_CANDIDATE = 10

_BRACKET_PLACEHOLDERS = ("@TEXT", "[Seed Entities]", "[Seed Examples]", "[Task Descriptions]")
_N_RE = re.compile(r"\bN\b")

REQUIRED_PLACEHOLDERS = {
    NER_GEN: frozenset({"[Seed Entities]", "N"}),
    RE_GEN: frozenset({"[Seed Examples]"}),
    NER_ZEROSHOT: frozenset({"@TEXT"}),
    RE_ZEROSHOT: frozenset({"@TEXT"}),
}

META_PROMPT_BODY = (
    "Provide five concise prompts or templates that can be used to generate "
    "data samples of [Task Descriptions]."
)

AUGMENT_PROMPT_BODY = (
    "Augment five prompts based on the previous best prompt. Provide five "
    "concise prompts or templates, as a numbered list. Previous best prompt:\n\n{best}"
)


def placeholders_in(body: str) -> set[str]:
    found = {p for p in _BRACKET_PLACEHOLDERS if p in body}
    if _N_RE.search(body):
        found.add("N")
    return found


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    task: str
    body: str
    round: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown template task {self.task!r}")
        required = REQUIRED_PLACEHOLDERS[self.task]
        found = placeholders_in(self.body)
        if found != required:
            raise ValueError(
                f"{self.task} template must contain exactly {sorted(required)}, found {sorted(found)}"
            )
        if self.round < 0:
            raise ValueError("round must be >= 0")


def render(template: PromptTemplate, bindings: Mapping[str, str]) -> str:
    """Pure single-pass substitution; binding values are never rescanned."""
    present = placeholders_in(template.body)
    extraneous = set(bindings) - present
    if extraneous:
        raise UnknownPlaceholder(f"bindings not in template: {sorted(extraneous)}")
    missing = present - set(bindings)
    if missing:
        raise UnboundPlaceholder(f"unbound placeholders: {sorted(missing)}")
    if not present:
        return template.body
    pattern = re.compile(
        "|".join(re.escape(p) for p in _BRACKET_PLACEHOLDERS) + r"|\bN\b"
    )
    return pattern.sub(lambda m: str(bindings[m.group(0)]), template.body)


def meta_prompt(task_description: str, model: str) -> ChatRequest:
    """Request asking the model for five candidate generation prompts."""
    if not task_description.strip():
        raise ValueError("task description must be non-empty")
    body = META_PROMPT_BODY.replace("[Task Descriptions]", task_description)
    return user_request(body, model, GENERATION_TEMPERATURE)


def augment_prompt(best: PromptTemplate, model: str) -> ChatRequest:
    body = AUGMENT_PROMPT_BODY.format(best=best.body)
    return user_request(body, model, GENERATION_TEMPERATURE)


_ITEM_START_RE = re.compile(r"^\s*(?:\d+[.)]|-)\s+(.*)$")


def parse_candidates(reply: str, task: str, round_index: int) -> list[PromptTemplate]:
    """Parse a numbered / bulleted list reply into exactly five templates.

    Accepts ``1.``, ``1)`` and ``- `` item markers; continuation lines are
    folded into the preceding item.
    """
    items: list[str] = []
    for line in reply.splitlines():
        match = _ITEM_START_RE.match(line)
        if match:
            items.append(match.group(1).strip())
        elif items and line.strip():
            items[-1] += " " + line.strip()
    if not items:
        raise UnparseableReply("no list items found in candidate reply")
    if len(items) != CANDIDATES_PER_ROUND:
        raise CandidateCountMismatch(len(items))
    templates = []
    for i, body in enumerate(items, start=1):
        try:
            templates.append(
                PromptTemplate(id=f"r{round_index}c{i}", task=task, body=body, round=round_index)
            )
        except ValueError as exc:
            raise UnparseableReply(f"candidate {i}: {exc}") from None
    return templates


# -- built-in templates -----------------------------------------------------------

NER_ZEROSHOT_TEMPLATE = PromptTemplate(
    id="builtin-ner-zeroshot",
    task=NER_ZEROSHOT,
    body=(
        'Please do NER task for "@TEXT" (output IOB format, please output the '
        "results only without your explanation, use tab key to separate the word "
        "and label, the entity is disease name, please use the space key to "
        "separate the sentences)"
    ),
)

RE_ZEROSHOT_TEMPLATE = PromptTemplate(
    id="builtin-re-zeroshot",
    task=RE_ZEROSHOT,
    body=(
        'Given a sentence that introduces a gene (denoted as "@GENE$") and a '
        'disease (denoted as "@DISEASE$"), predict whether the gene and disease '
        "have a relation or not. The relation between the gene and disease can be "
        "any functional, causal, or associative connection. If there is a "
        'relation, then the label should be "Yes", otherwise "No".\n\n@TEXT'
    ),
)

NER_GEN_TEMPLATE = PromptTemplate(
    id="builtin-ner-gen",
    task=NER_GEN,
    body=(
        "Please act as a sentence generator for the biological domain and "
        "provide N sentences containing the words [Seed Entities]. These "
        "sentences should not include any additional information or explanation. "
        "Generated sentences should mimic the style of PubMed journal articles, "
        "using a variety of sentence structures:"
    ),
)

RE_GEN_TEMPLATE = PromptTemplate(
    id="builtin-re-gen",
    task=RE_GEN,
    body=(
        "Generate 3 positive and 3 negative examples for the gene-disease "
        'relation extraction task. The target gene is denoted as "@GENE$" and '
        'the target disease is denoted as "@DISEASE$". The label is whether '
        "there is a relation between the target gene and disease. The "
        "relationship can be any functional, causal, or associative connection. "
        'If there is a relation, then the label should be "Yes". If there is no '
        'relation, the label should be "No". Sentences mimic the style of PubMed '
        "journal articles with various sentence structures. [Seed Examples]"
    ),
)

BUILTIN_TEMPLATES = {
    NER_ZEROSHOT: NER_ZEROSHOT_TEMPLATE,
    RE_ZEROSHOT: RE_ZEROSHOT_TEMPLATE,
    NER_GEN: NER_GEN_TEMPLATE,
    RE_GEN: RE_GEN_TEMPLATE,
}


def zeroshot_template_for(task: str, entity_type: str | None = None) -> PromptTemplate:
    """Zero-shot task template, with the NER entity kind adapted per dataset."""
    if task == "NER":
        template = NER_ZEROSHOT_TEMPLATE
        if entity_type:
            body = template.body.replace(
                "the entity is disease name", f"the entity is {entity_type.lower()} name"
            )
            return PromptTemplate(id=template.id, task=template.task, body=body)
        return template
    return RE_ZEROSHOT_TEMPLATE


# -- round state machine --------------------------------------------------------

@dataclass
class RoundState:
    round_index: int
    candidates: list[PromptTemplate]
    samples_per_candidate: int = DEFAULT_SAMPLES_PER_CANDIDATE
    samples: dict[str, list[str]] = field(default_factory=dict)
    selection: str | None = None
    rationale: str = ""
    status: str = AWAITING_SAMPLES

    def __post_init__(self):
        if len(self.candidates) != CANDIDATES_PER_ROUND:
            raise ValueError(
                f"a round holds exactly {CANDIDATES_PER_ROUND} candidates, got {len(self.candidates)}"
            )

    def candidate_ids(self) -> list[str]:
        return [c.id for c in self.candidates]

    def selected_template(self) -> PromptTemplate:
        if self.selection is None:
            raise RoundNotReady(f"round {self.round_index} has no selection")
        return next(c for c in self.candidates if c.id == self.selection)


@dataclass
class RefinementLog:
    task: str
    budget: int = DEFAULT_ROUND_BUDGET
    samples_per_candidate: int = DEFAULT_SAMPLES_PER_CANDIDATE
    rounds: list[RoundState] = field(default_factory=list)
    final_prompt: PromptTemplate | None = None

    @property
    def current(self) -> RoundState | None:
        return self.rounds[-1] if self.rounds else None


def open_round(log: RefinementLog, candidates: list[PromptTemplate]) -> RoundState:
    if log.final_prompt is not None:
        raise RoundNotReady("refinement already produced a final prompt")
    if log.rounds and log.rounds[-1].status != CLOSED:
        raise RoundNotReady(f"round {log.rounds[-1].round_index} is still open")
    if len(log.rounds) >= log.budget:
        raise RoundNotReady(f"round budget of {log.budget} exhausted")
    state = RoundState(
        round_index=len(log.rounds) + 1,
        candidates=list(candidates),
        samples_per_candidate=log.samples_per_candidate,
    )
    log.rounds.append(state)
    return state


def attach_samples(log: RefinementLog, candidate_id: str, samples: list[str]) -> None:
    state = log.current
    if state is None or state.status != AWAITING_SAMPLES:
        raise RoundNotReady("no round awaiting samples")
    if candidate_id not in state.candidate_ids():
        raise InvalidSelection(f"unknown candidate {candidate_id!r}")
    state.samples[candidate_id] = list(samples)
    if set(state.samples) == set(state.candidate_ids()):
        state.status = AWAITING_SELECTION


def advance_round(
    log: RefinementLog,
    selection: str,
    rationale: str = "",
    next_candidates: list[PromptTemplate] | None = None,
) -> RefinementLog:
    """Close the current round with ``selection``.

    When rounds remain in the budget, ``next_candidates`` (from an
    augmentation request built on the winner) must be supplied and a new
    round opens; otherwise the winner becomes the final prompt.
    """
    state = log.current
    if state is None or state.status != AWAITING_SELECTION:
        raise RoundNotReady("current round is not awaiting a selection")
    if selection not in state.candidate_ids():
        raise InvalidSelection(f"candidate {selection!r} not in round {state.round_index}")
    state.selection = selection
    state.rationale = rationale
    state.status = CLOSED
    if state.round_index >= log.budget:
        log.final_prompt = state.selected_template()
    else:
        if next_candidates is None:
            raise ValueError("next_candidates required while budget remains")
        open_round(log, next_candidates)
    return log


# -- JSONL event persistence ------------------------------------------------------

def _template_record(t: PromptTemplate) -> dict:
    return {"id": t.id, "task": t.task, "body": t.body, "round": t.round}


def _template_from(record: dict) -> PromptTemplate:
    return PromptTemplate(
        id=record["id"], task=record["task"], body=record["body"], round=record["round"]
    )


def append_event(path: Path | str, event: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(event, ensure_ascii=False) + "\n")


def init_event(log: RefinementLog) -> dict:
    return {
        "event": "init",
        "task": log.task,
        "budget": log.budget,
        "samples_per_candidate": log.samples_per_candidate,
    }


def round_opened_event(state: RoundState) -> dict:
    return {
        "event": "round_opened",
        "round_index": state.round_index,
        "candidates": [_template_record(c) for c in state.candidates],
    }


def samples_event(round_index: int, candidate_id: str, samples: list[str]) -> dict:
    return {
        "event": "samples_attached",
        "round_index": round_index,
        "candidate_id": candidate_id,
        "samples": samples,
    }


def selection_event(round_index: int, candidate_id: str, rationale: str) -> dict:
    return {
        "event": "selection",
        "round_index": round_index,
        "candidate_id": candidate_id,
        "rationale": rationale,
    }


def final_prompt_event(template: PromptTemplate) -> dict:
    return {"event": "final_prompt", "template": _template_record(template)}


def replay_events(path: Path | str) -> RefinementLog:
    """Rebuild a RefinementLog from its event log.

    Events are applied in file order: a ``selection`` closes the current
    round (and sets the final prompt on the last one), and the following
    ``round_opened`` starts the next.
    """
    path = Path(path)
    log: RefinementLog | None = None
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        event = json.loads(line)
        kind = event["event"]
        if kind == "init":
            log = RefinementLog(
                task=event["task"],
                budget=event["budget"],
                samples_per_candidate=event["samples_per_candidate"],
            )
        elif log is None:
            raise UnparseableReply(f"{path}: event before init")
        elif kind == "round_opened":
            open_round(log, [_template_from(r) for r in event["candidates"]])
        elif kind == "samples_attached":
            attach_samples(log, event["candidate_id"], event["samples"])
        elif kind == "selection":
            state = log.current
            if state is None or state.status != AWAITING_SELECTION:
                raise RoundNotReady(f"{path}: selection event with no open round")
            state.selection = event["candidate_id"]
            state.rationale = event.get("rationale", "")
            state.status = CLOSED
            if state.round_index >= log.budget:
                log.final_prompt = state.selected_template()
        elif kind == "final_prompt":
            pass  # derived: set when the last round's selection replays
    if log is None:
        raise UnparseableReply(f"{path}: empty event log")
    return log
