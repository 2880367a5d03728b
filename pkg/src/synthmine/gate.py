"""Post-processing of generated candidates: validity, dedup, audit report.

Candidates flow through a validity filter (token-count bounds, span and
placeholder checks) and then order-dependent duplicate elimination:
exact matches on normalized text, then near-duplicates by Jaccard
similarity over word shingles against everything already kept. The
GateReport reconciles every input sample into exactly one bucket.
"""

from __future__ import annotations

import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import NER, RE, REExample, TaggedSentence, spans_from_tags, tokenize, validate_iob
from .errors import SynthmineError
from .generate import CandidateSample

EXACT_DUP = "ExactDuplicate"
NEAR_DUP = "NearDuplicate"


@dataclass
class GateConfig:
    jaccard_threshold: float = 0.8
    shingle_size: int = 3
    min_tokens: int = 5
    max_tokens: int = 128

    def __post_init__(self):
        if not 0.0 < self.jaccard_threshold <= 1.0:
            raise ValueError("jaccard_threshold must lie in (0, 1]")
        if self.shingle_size < 1:
            raise ValueError("shingle_size must be >= 1")
        if self.min_tokens < 1 or self.max_tokens < self.min_tokens:
            raise ValueError("need 1 <= min_tokens <= max_tokens")


@dataclass
class GateReport:
    input_count: int = 0
    kept_count: int = 0
    exact_dup_count: int = 0
    near_dup_count: int = 0
    invalid_count: int = 0
    reject_reasons: Counter = field(default_factory=Counter)

    def reconciles(self) -> bool:
        return self.input_count == (
            self.kept_count + self.exact_dup_count + self.near_dup_count + self.invalid_count
        )

    def as_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "kept_count": self.kept_count,
            "exact_dup_count": self.exact_dup_count,
            "near_dup_count": self.near_dup_count,
            "invalid_count": self.invalid_count,
            "reject_reasons": dict(sorted(self.reject_reasons.items())),
        }

    def table(self) -> str:
        lines = [
            f"{'input':<12}{self.input_count:>8}",
            f"{'kept':<12}{self.kept_count:>8}",
            f"{'exact-dup':<12}{self.exact_dup_count:>8}",
            f"{'near-dup':<12}{self.near_dup_count:>8}",
            f"{'invalid':<12}{self.invalid_count:>8}",
        ]
        for reason, count in sorted(self.reject_reasons.items()):
            lines.append(f"  {reason:<18}{count:>6}")
        return "\n".join(lines)


def normalize(text: str) -> str:
    """NFC, lowercase, whitespace runs collapsed to single spaces, trimmed."""
    return " ".join(unicodedata.normalize("NFC", text).lower().split())


def shingle_set(text: str, k: int) -> frozenset[tuple[str, ...]]:
    """Word k-shingles; texts shorter than k collapse to one whole-text shingle."""
    words = text.split()
    if not words:
        return frozenset()
    if len(words) < k:
        return frozenset({tuple(words)})
    return frozenset(tuple(words[i : i + k]) for i in range(len(words) - k + 1))


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def filter_valid(
    sample: CandidateSample,
    task: str,
    cfg: GateConfig,
    placeholders: Sequence[str] = ("@GENE$", "@DISEASE$"),
) -> str | None:
    """Return a reject reason, or None when the sample is acceptable."""
    if task == NER:
        payload = sample.payload
        if not isinstance(payload, TaggedSentence):
            return "NoPayload"
        count = len(payload.tokens)
        if count < cfg.min_tokens:
            return "TooShort"
        if count > cfg.max_tokens:
            return "TooLong"
        try:
            repaired = validate_iob(payload.tags, "lenient")
            validate_iob(repaired, "strict")
        except SynthmineError:
            return "BadIob"
        if not spans_from_tags(payload):
            return "NoEntitySpan"
        return None
    if task == RE:
        payload = sample.payload
        if not isinstance(payload, REExample):
            return "NoPayload"
        count = len(tokenize(payload.sentence))
        if count < cfg.min_tokens:
            return "TooShort"
        if count > cfg.max_tokens:
            return "TooLong"
        for ph in placeholders:
            if payload.sentence.count(ph) != 1:
                return "PlaceholderCount"
        if payload.label not in ("Yes", "No"):
            return "BadLabel"
        return None
    raise ValueError(f"task must be NER or RE, got {task!r}")


def dedup(
    samples: Sequence[CandidateSample], cfg: GateConfig
) -> tuple[list[CandidateSample], list[tuple[CandidateSample, str]]]:
    """First-seen-wins duplicate elimination in generation order."""
    kept: list[CandidateSample] = []
    rejected: list[tuple[CandidateSample, str]] = []
    kept_norms: set[str] = set()
    kept_shingles: list[frozenset] = []
    for sample in samples:
        norm = normalize(sample.text())
        if norm in kept_norms:
            rejected.append((sample, EXACT_DUP))
            continue
        shingles = shingle_set(norm, cfg.shingle_size)
        if any(jaccard(shingles, seen) >= cfg.jaccard_threshold for seen in kept_shingles):
            rejected.append((sample, NEAR_DUP))
            continue
        kept.append(sample)
        kept_norms.add(norm)
        kept_shingles.append(shingles)
    return kept, rejected


def run_gate(
    samples: Sequence[CandidateSample],
    task: str,
    cfg: GateConfig,
    placeholders: Sequence[str] = ("@GENE$", "@DISEASE$"),
) -> tuple[list[CandidateSample], list[tuple[CandidateSample, str]], GateReport]:
    """Validity filter, then dedup; returns (kept, quarantined, report)."""
    report = GateReport(input_count=len(samples))
    valid: list[CandidateSample] = []
    quarantined: list[tuple[CandidateSample, str]] = []
    for sample in samples:
        reason = filter_valid(sample, task, cfg, placeholders)
        if reason is not None:
            report.invalid_count += 1
            report.reject_reasons[reason] += 1
            quarantined.append((sample, reason))
        else:
            valid.append(sample)
    kept, dup_rejected = dedup(valid, cfg)
    for sample, reason in dup_rejected:
        if reason == EXACT_DUP:
            report.exact_dup_count += 1
        else:
            report.near_dup_count += 1
        report.reject_reasons[reason] += 1
        quarantined.append((sample, reason))
    report.kept_count = len(kept)
    return kept, quarantined, report


def write_quarantine(
    quarantined: Sequence[tuple[CandidateSample, str]], path: Path | str
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for sample, reason in quarantined:
            fh.write(
                json.dumps(
                    {
                        "sample_id": sample.sample_id,
                        "reason": reason,
                        "text": sample.text(),
                        "raw_line": sample.raw_line,
                        "prompt_id": sample.prompt_id,
                        "seed_ref": sample.seed_ref,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def write_report(report: GateReport, jsonl_path: Path | str) -> None:
    path = Path(jsonl_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(report.as_dict(), ensure_ascii=False) + "\n")
