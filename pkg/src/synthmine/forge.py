"""Drives prompt-refinement rounds against a gateway and persists them.

The session owns the side effects around the pure round state machine:
asking the model for candidates, generating preview samples for each
candidate, appending every transition to the JSONL event log, and
resuming from that log after a pause. Selection itself is always a human
input, arriving via the CLI flag or the review server.
"""

from __future__ import annotations

import random
from pathlib import Path
from typing import Sequence

from .corpus import REExample
from .errors import InvalidSelection, RoundNotReady
from .gateway import GENERATION_TEMPERATURE, Gateway
from .generate import SeedEntity, parse_generation_reply, seed_rows
from .prompts import (
    AWAITING_SELECTION,
    NER_GEN,
    RE_GEN,
    PromptTemplate,
    RefinementLog,
    advance_round,
    append_event,
    attach_samples,
    augment_prompt,
    final_prompt_event,
    init_event,
    meta_prompt,
    open_round,
    parse_candidates,
    render,
    replay_events,
    round_opened_event,
    samples_event,
    selection_event,
)


class RefinementSession:
    def __init__(
        self,
        gateway: Gateway,
        task: str,
        log_path: Path | str,
        budget: int = 3,
        samples_per_candidate: int = 10,
        ner_seeds: Sequence[SeedEntity] = (),
        re_seeds: Sequence[REExample] = (),
        rng_seed: int = 0,
    ):
        if task not in (NER_GEN, RE_GEN):
            raise ValueError(f"refinement task must be {NER_GEN} or {RE_GEN}")
        self.gateway = gateway
        self.task = task
        self.log_path = Path(log_path)
        self.ner_seeds = list(ner_seeds)
        self.re_seeds = list(re_seeds)
        self.rng = random.Random(rng_seed)
        if self.log_path.exists():
            self.log = replay_events(self.log_path)
        else:
            self.log = RefinementLog(
                task=task, budget=budget, samples_per_candidate=samples_per_candidate
            )

    # -- state ------------------------------------------------------------------

    @property
    def started(self) -> bool:
        return bool(self.log.rounds)

    @property
    def finished(self) -> bool:
        return self.log.final_prompt is not None

    def status(self) -> str:
        if self.finished:
            return "final"
        state = self.log.current
        return state.status if state is not None else "not-started"

    # -- transitions -----------------------------------------------------------------

    def start(self, task_description: str) -> None:
        if self.started:
            return
        append_event(self.log_path, init_event(self.log))
        reply = self.gateway.complete(
            meta_prompt(task_description, self.gateway.model)
        )
        candidates = parse_candidates(reply.content, self.task, round_index=1)
        state = open_round(self.log, candidates)
        append_event(self.log_path, round_opened_event(state))
        self._generate_samples(state)

    def select(self, candidate_id: str, rationale: str = "") -> None:
        state = self.log.current
        if state is None or state.status != AWAITING_SELECTION:
            raise RoundNotReady("no round is awaiting a selection")
        if candidate_id not in state.candidate_ids():
            raise InvalidSelection(
                f"candidate {candidate_id!r} not in round {state.round_index}"
            )
        round_index = state.round_index
        next_candidates = None
        if round_index < self.log.budget:
            winner = next(c for c in state.candidates if c.id == candidate_id)
            reply = self.gateway.complete(augment_prompt(winner, self.gateway.model))
            next_candidates = parse_candidates(
                reply.content, self.task, round_index=round_index + 1
            )
        advance_round(self.log, candidate_id, rationale, next_candidates)
        append_event(self.log_path, selection_event(round_index, candidate_id, rationale))
        if self.log.final_prompt is not None:
            append_event(self.log_path, final_prompt_event(self.log.final_prompt))
        else:
            new_state = self.log.current
            append_event(self.log_path, round_opened_event(new_state))
            self._generate_samples(new_state)

    # -- preview samples ---------------------------------------------------------------

    def _generate_samples(self, state) -> None:
        for i, candidate in enumerate(list(state.candidates)):
            samples = self._samples_for(candidate, i, state.samples_per_candidate)
            attach_samples(self.log, candidate.id, samples)
            append_event(
                self.log_path, samples_event(state.round_index, candidate.id, samples)
            )

    def _samples_for(self, candidate: PromptTemplate, index: int, count: int) -> list[str]:
        if self.task == NER_GEN:
            if not self.ner_seeds:
                raise ValueError("NER refinement needs preview seed entities")
            seed = self.ner_seeds[index % len(self.ner_seeds)]
            prompt = render(
                candidate, {"[Seed Entities]": seed.surface, "N": str(count)}
            )
        else:
            if not self.re_seeds:
                raise ValueError("RE refinement needs preview seed examples")
            picks = [self.re_seeds[(index + k) % len(self.re_seeds)] for k in range(6)]
            prompt = render(candidate, {"[Seed Examples]": seed_rows(picks)})
        reply = self.gateway.complete(self.gateway.chat(prompt, GENERATION_TEMPERATURE))
        lines, _ = parse_generation_reply(reply.content, self.task)
        return lines[:count]
