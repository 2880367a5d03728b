"""Candidate synthetic-sample production for NER and RE.

NER generation renders one prompt per seed entity, splits the reply into
candidate sentences, and synthesizes IOB annotations by locating the seed
entity's token sequence. RE generation samples seed examples from a
curated pool, renders them into the prompt, and parses the labelled rows
the model returns. Nothing the model says is silently dropped: every
parsed line ends up accepted or rejected with a reason.
"""

from __future__ import annotations

import json
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import (
    NER,
    RE,
    Dataset,
    EntitySpan,
    REExample,
    TaggedSentence,
    detokenize,
    normalize_label,
    parse_re_row,
    spans_from_tags,
    tags_from_spans,
    tokenize,
)
from .errors import EmptyReply, PoolTooSmall
from .gateway import GENERATION_TEMPERATURE, Gateway
from .prompts import NER_GEN, RE_GEN, PromptTemplate, render

DEFAULT_SEED_POOL_SIZE = 50  # positives and negatives each


@dataclass(frozen=True)
class SeedEntity:
    surface: str
    entity_type: str
    origin: str = ""

    def __post_init__(self):
        if not self.surface.strip():
            raise ValueError("seed entity surface must be non-empty")
        if not tokenize(self.surface):
            raise ValueError(f"seed surface yields no tokens: {self.surface!r}")


@dataclass
class SeedPool:
    task: str
    ner_entities: list[SeedEntity] = field(default_factory=list)
    re_positives: list[REExample] = field(default_factory=list)
    re_negatives: list[REExample] = field(default_factory=list)

    def __post_init__(self):
        if self.task not in (NER, RE):
            raise ValueError(f"task must be NER or RE, got {self.task!r}")
        if self.task == RE and (not self.re_positives or not self.re_negatives):
            raise PoolTooSmall("RE seed pool needs at least one positive and one negative example")


@dataclass
class GenerationConfig:
    n_per_entity: int = 30
    pos_per_round: int = 3
    neg_per_round: int = 3
    target_size: int = 100
    rng_seed: int = 0
    max_rounds: int = 0  # 0 = derived from target_size
    max_entities: int = 0  # 0 = use every extracted seed entity
    pool_per_label: int = 0  # 0 = whole pool; 50 matches the curated protocol

    def __post_init__(self):
        for name in ("n_per_entity", "pos_per_round", "neg_per_round", "target_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class CandidateSample:
    """One raw generated line plus its provenance and gate status."""

    payload: TaggedSentence | REExample | None
    prompt_id: str
    seed_ref: str
    round: int
    raw_line: str
    reject_reason: str | None = None
    sample_id: str = ""

    @property
    def accepted(self) -> bool:
        return self.reject_reason is None

    def text(self) -> str:
        if isinstance(self.payload, TaggedSentence):
            return self.payload.text()
        if isinstance(self.payload, REExample):
            return self.payload.sentence
        return self.raw_line


# -- seed extraction ------------------------------------------------------------

def extract_seed_entities(dataset: Dataset) -> list[SeedEntity]:
    """Unique gold mention surfaces, deduplicated case-insensitively.

    When several surface forms collide case-insensitively the longest one
    is kept (first seen wins among equals). Order follows first occurrence.
    """
    if dataset.task != NER:
        raise ValueError("seed entities come from an NER dataset")
    chosen: dict[tuple[str, str], str] = {}
    order: list[tuple[str, str]] = []
    for sentence in dataset.items:
        for span in spans_from_tags(sentence):
            surface = detokenize(sentence.tokens[span.start : span.end + 1])
            key = (surface.casefold(), span.entity_type)
            if key not in chosen:
                chosen[key] = surface
                order.append(key)
            elif len(surface) > len(chosen[key]):
                chosen[key] = surface
    return [
        SeedEntity(surface=chosen[key], entity_type=key[1], origin=dataset.name)
        for key in order
    ]


def seed_pool_from_dataset(dataset: Dataset) -> SeedPool:
    if dataset.task == NER:
        return SeedPool(task=NER, ner_entities=extract_seed_entities(dataset))
    positives = [ex for ex in dataset.items if ex.label == "Yes"]
    negatives = [ex for ex in dataset.items if ex.label == "No"]
    return SeedPool(task=RE, re_positives=positives, re_negatives=negatives)


def curated_seed_pool(dataset: Dataset, per_label: int = DEFAULT_SEED_POOL_SIZE) -> SeedPool:
    """Cap an RE pool at the curated size: first per_label of each label."""
    pool = seed_pool_from_dataset(dataset)
    if pool.task != RE:
        raise ValueError("curated_seed_pool applies to RE datasets")
    return SeedPool(
        task=RE,
        re_positives=pool.re_positives[:per_label],
        re_negatives=pool.re_negatives[:per_label],
    )


# -- reply parsing ----------------------------------------------------------------

@dataclass(frozen=True)
class RejectedLine:
    position: int
    text: str
    reason: str


_BULLET_RE = re.compile(r"^\s*(?:\d+[.)]\s*|[-*•]\s+)")
_PAIRED_QUOTES = {('"', '"'), ("'", "'"), ("“", "”")}


def _strip_outer_quotes(text: str) -> str:
    if len(text) >= 2 and (text[0], text[-1]) in _PAIRED_QUOTES:
        return text[1:-1].strip()
    return text


def parse_generation_reply(text: str, task: str) -> tuple[list[str], list[RejectedLine]]:
    """Split a generation reply into candidate lines plus rejects.

    NER: list numbering, bullets, and surrounding quotes are stripped,
    empty lines dropped. RE: rows must carry a sentence and a Yes/No
    label in either ``| sentence | label |`` or tab-separated form;
    accepted rows are canonicalized to ``sentence<TAB>label``.
    """
    if task not in (NER_GEN, RE_GEN):
        raise ValueError(f"task must be {NER_GEN} or {RE_GEN}")
    accepts: list[str] = []
    rejects: list[RejectedLine] = []
    for position, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("```"):
            continue
        line = _BULLET_RE.sub("", line).strip()
        if not line:
            continue
        if task == NER_GEN:
            cleaned = _strip_outer_quotes(line)
            if cleaned:
                accepts.append(cleaned)
            continue
        row = parse_re_row(line)
        if row is None:
            rejects.append(RejectedLine(position, raw, "MissingLabel"))
            continue
        sentence, raw_label = row
        label = normalize_label(raw_label)
        if label is None:
            rejects.append(RejectedLine(position, raw, "BadLabel"))
            continue
        if not sentence:
            rejects.append(RejectedLine(position, raw, "EmptySentence"))
            continue
        accepts.append(f"{sentence}\t{label}")
    return accepts, rejects


# -- annotation synthesis -----------------------------------------------------------

def annotate_entity(
    sentence_text: str, entity: SeedEntity
) -> tuple[TaggedSentence | None, str | None]:
    """Tag every case-insensitive occurrence of the seed's token sequence.

    Matching is over whole tokens, left to right and non-overlapping, so a
    seed like "AS" never fires inside another word. Returns (sentence,
    None) on success or (None, reason) when annotation is impossible.
    """
    tokens = tokenize(sentence_text)
    if not tokens:
        return None, "EmptySentence"
    needle = [t.text.casefold() for t in tokenize(entity.surface)]
    hay = [t.text.casefold() for t in tokens]
    spans = []
    i = 0
    while i + len(needle) <= len(hay):
        if hay[i : i + len(needle)] == needle:
            spans.append((i, i + len(needle) - 1))
            i += len(needle)
        else:
            i += 1
    if not spans:
        return None, "EntityNotFound"
    tags = tags_from_spans(
        tokens,
        [EntitySpan(start, end, entity.entity_type) for start, end in spans],
    )
    return TaggedSentence(tuple(tokens), tuple(tags)), None


# -- batch generation -----------------------------------------------------------------

def gen_ner_batch(
    entity: SeedEntity,
    template: PromptTemplate,
    cfg: GenerationConfig,
    gateway: Gateway,
    round_index: int = 0,
) -> list[CandidateSample]:
    """One model call for one seed entity; every reply line is accounted for."""
    if template.task != NER_GEN:
        raise ValueError(f"template task must be {NER_GEN}, got {template.task}")
    prompt = render(
        template, {"[Seed Entities]": entity.surface, "N": str(cfg.n_per_entity)}
    )
    response = gateway.complete(gateway.chat(prompt, GENERATION_TEMPERATURE))
    if not response.content.strip():
        raise EmptyReply(f"empty reply for seed entity {entity.surface!r}")
    lines, parse_rejects = parse_generation_reply(response.content, NER_GEN)
    samples: list[CandidateSample] = []
    accepted = 0
    for line in lines:
        payload, reason = annotate_entity(line, entity)
        if payload is not None and accepted >= cfg.n_per_entity:
            payload, reason = None, "Surplus"
        if payload is not None:
            accepted += 1
        samples.append(
            CandidateSample(
                payload=payload,
                prompt_id=template.id,
                seed_ref=entity.surface,
                round=round_index,
                raw_line=line,
                reject_reason=reason,
            )
        )
    for reject in parse_rejects:
        samples.append(
            CandidateSample(
                payload=None,
                prompt_id=template.id,
                seed_ref=entity.surface,
                round=round_index,
                raw_line=reject.text,
                reject_reason=reject.reason,
            )
        )
    return samples


def seed_rows(examples: Sequence[REExample]) -> str:
    return "\n".join(f"| {ex.sentence} | {ex.label} |" for ex in examples)


def gen_re_batch(
    pool: SeedPool,
    template: PromptTemplate,
    cfg: GenerationConfig,
    gateway: Gateway,
    rng: random.Random,
    round_index: int = 0,
) -> list[CandidateSample]:
    """One RE generation round: sample 3+3 seeds, request, parse the rows.

    Seed sampling is without replacement within the round and with
    replacement across rounds. At most pos_per_round Yes rows and
    neg_per_round No rows are accepted; extras become Surplus rejects.
    """
    if template.task != RE_GEN:
        raise ValueError(f"template task must be {RE_GEN}, got {template.task}")
    if pool.task != RE:
        raise ValueError("gen_re_batch needs an RE seed pool")
    if len(pool.re_positives) < cfg.pos_per_round:
        raise PoolTooSmall(
            f"need {cfg.pos_per_round} positive seeds, pool has {len(pool.re_positives)}"
        )
    if len(pool.re_negatives) < cfg.neg_per_round:
        raise PoolTooSmall(
            f"need {cfg.neg_per_round} negative seeds, pool has {len(pool.re_negatives)}"
        )
    pos_idx = rng.sample(range(len(pool.re_positives)), cfg.pos_per_round)
    neg_idx = rng.sample(range(len(pool.re_negatives)), cfg.neg_per_round)
    seeds = [pool.re_positives[i] for i in pos_idx] + [pool.re_negatives[i] for i in neg_idx]
    seed_ref = "pos:" + ",".join(map(str, pos_idx)) + ";neg:" + ",".join(map(str, neg_idx))
    prompt = render(template, {"[Seed Examples]": seed_rows(seeds)})
    response = gateway.complete(gateway.chat(prompt, GENERATION_TEMPERATURE))
    if not response.content.strip():
        raise EmptyReply("empty RE generation reply")
    rows, parse_rejects = parse_generation_reply(response.content, RE_GEN)
    samples: list[CandidateSample] = []
    taken = {"Yes": 0, "No": 0}
    caps = {"Yes": cfg.pos_per_round, "No": cfg.neg_per_round}
    for row in rows:
        sentence, label = row.split("\t", 1)
        if taken[label] >= caps[label]:
            payload, reason = None, "Surplus"
        else:
            payload = REExample(sentence=sentence, label=label, source="synthetic")
            reason = None
            taken[label] += 1
        samples.append(
            CandidateSample(
                payload=payload,
                prompt_id=template.id,
                seed_ref=seed_ref,
                round=round_index,
                raw_line=row,
                reject_reason=reason,
            )
        )
    for reject in parse_rejects:
        samples.append(
            CandidateSample(
                payload=None,
                prompt_id=template.id,
                seed_ref=seed_ref,
                round=round_index,
                raw_line=reject.text,
                reject_reason=reject.reason,
            )
        )
    return samples


def run_ner_generation(
    entities: Sequence[SeedEntity],
    template: PromptTemplate,
    cfg: GenerationConfig,
    gateway: Gateway,
    workers: int = 1,
) -> list[CandidateSample]:
    """Generate one batch per seed entity, order-stable by entity index."""
    if workers <= 1:
        batches = [gen_ner_batch(e, template, cfg, gateway) for e in entities]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(
                pool.map(lambda e: gen_ner_batch(e, template, cfg, gateway), entities)
            )
    return [sample for batch in batches for sample in batch]


@dataclass
class REGenerationResult:
    samples: list[CandidateSample]
    rounds_used: int
    accepted_count: int


def run_re_generation(
    pool: SeedPool,
    template: PromptTemplate,
    cfg: GenerationConfig,
    gateway: Gateway,
) -> REGenerationResult:
    """Repeat generation rounds until target_size candidates are accepted.

    Stops early (with whatever accumulated) after max_rounds to avoid
    spinning on a provider that never yields usable rows; accepted
    candidates beyond target_size become Surplus rejects.
    """
    rng = random.Random(cfg.rng_seed)
    per_round = cfg.pos_per_round + cfg.neg_per_round
    limit = cfg.max_rounds or max(1, -(-cfg.target_size // per_round)) * 5
    samples: list[CandidateSample] = []
    accepted = 0
    rounds = 0
    while accepted < cfg.target_size and rounds < limit:
        rounds += 1
        batch = gen_re_batch(pool, template, cfg, gateway, rng, round_index=rounds)
        for sample in batch:
            if sample.accepted and accepted >= cfg.target_size:
                sample.payload = None
                sample.reject_reason = "Surplus"
            if sample.accepted:
                accepted += 1
            samples.append(sample)
    return REGenerationResult(samples=samples, rounds_used=rounds, accepted_count=accepted)


def run_re_generation_unseeded(
    template: PromptTemplate,
    cfg: GenerationConfig,
    gateway: Gateway,
) -> REGenerationResult:
    """RE generation with an empty seed-example block.

    Every round renders the identical prompt, so a caching provider keeps
    returning the same rows and the downstream duplicate gate collapses
    the output: the zero-seed degradation observed in practice.
    """
    prompt = render(template, {"[Seed Examples]": ""})
    per_round = cfg.pos_per_round + cfg.neg_per_round
    limit = cfg.max_rounds or max(1, -(-cfg.target_size // per_round)) * 5
    samples: list[CandidateSample] = []
    accepted = 0
    rounds = 0
    while accepted < cfg.target_size and rounds < limit:
        rounds += 1
        response = gateway.complete(gateway.chat(prompt, GENERATION_TEMPERATURE))
        if not response.content.strip():
            raise EmptyReply("empty RE generation reply")
        rows, parse_rejects = parse_generation_reply(response.content, RE_GEN)
        taken = {"Yes": 0, "No": 0}
        caps = {"Yes": cfg.pos_per_round, "No": cfg.neg_per_round}
        for row in rows:
            sentence, label = row.split("\t", 1)
            if taken[label] >= caps[label] or accepted >= cfg.target_size:
                payload, reason = None, "Surplus"
            else:
                payload = REExample(sentence=sentence, label=label, source="synthetic")
                reason = None
                taken[label] += 1
                accepted += 1
            samples.append(
                CandidateSample(
                    payload=payload,
                    prompt_id=template.id,
                    seed_ref="unseeded",
                    round=rounds,
                    raw_line=row,
                    reject_reason=reason,
                )
            )
        for reject in parse_rejects:
            samples.append(
                CandidateSample(
                    payload=None,
                    prompt_id=template.id,
                    seed_ref="unseeded",
                    round=rounds,
                    raw_line=reject.text,
                    reject_reason=reject.reason,
                )
            )
    return REGenerationResult(samples=samples, rounds_used=rounds, accepted_count=accepted)


# -- provenance sidecar ----------------------------------------------------------------

def assign_sample_ids(samples: list[CandidateSample], prefix: str) -> None:
    for i, sample in enumerate(samples):
        sample.sample_id = f"{prefix}-{i:06d}"


def provenance_record(sample: CandidateSample) -> dict:
    record = {
        "sample_id": sample.sample_id,
        "prompt_id": sample.prompt_id,
        "seed_ref": sample.seed_ref,
        "round": sample.round,
        "raw_line": sample.raw_line,
        "status": "accepted" if sample.accepted else "rejected",
    }
    if sample.reject_reason:
        record["reason"] = sample.reject_reason
    if isinstance(sample.payload, TaggedSentence):
        record["tags"] = [str(t) for t in sample.payload.tags]
    elif isinstance(sample.payload, REExample):
        record["label"] = sample.payload.label
    return record


def write_provenance(samples: Sequence[CandidateSample], path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(provenance_record(sample), ensure_ascii=False) + "\n")
