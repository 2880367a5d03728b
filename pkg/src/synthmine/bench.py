"""Zero-shot benchmark harness: task prompts, noisy-reply parsing, realignment.

Chat models rarely echo tokenization faithfully, so NER replies are
parsed tolerantly (code fences, preamble chatter, space-for-tab drift)
and realigned onto the gold tokens with a longest-common-subsequence
match before scoring. RE replies reduce to a Yes/No/Invalid verdict;
Invalid scores as No and is surfaced separately as an invalid rate.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import (
    LENIENT,
    NER,
    RE,
    Dataset,
    O_TAG,
    REExample,
    Tag,
    TaggedSentence,
    Token,
    detokenize,
    validate_iob,
)
from .errors import UnboundPlaceholder
from .gateway import TASK_TEMPERATURE, ChatRequest, Gateway, user_request
from .prompts import NER_ZEROSHOT, RE_ZEROSHOT, PromptTemplate, render

YES = "Yes"
NO = "No"
INVALID = "Invalid"


def build_task_prompt(
    item: TaggedSentence | REExample,
    template: PromptTemplate,
    model: str,
    max_tokens: int = 2048,
) -> ChatRequest:
    """Bind @TEXT to the item's sentence with zero temperature."""
    if isinstance(item, TaggedSentence):
        if template.task != NER_ZEROSHOT:
            raise ValueError(f"NER item needs a {NER_ZEROSHOT} template, got {template.task}")
        text = detokenize(item.tokens)
    elif isinstance(item, REExample):
        if template.task != RE_ZEROSHOT:
            raise ValueError(f"RE item needs a {RE_ZEROSHOT} template, got {template.task}")
        text = item.sentence
    else:
        raise ValueError(f"unsupported item type {type(item).__name__}")
    if not text:
        raise UnboundPlaceholder("item has no text to bind to @TEXT")
    prompt = render(template, {"@TEXT": text})
    return user_request(prompt, model, TASK_TEMPERATURE, max_tokens)


# -- reply parsing -----------------------------------------------------------------

_TAG_SHAPE_RE = re.compile(r"^([BbIi])[-_](.+)$")


def _parse_pred_tag(text: str, known_types: Sequence[str] | None) -> Tag | None:
    cleaned = text.strip()
    if cleaned.upper() == "O":
        return O_TAG
    match = _TAG_SHAPE_RE.match(cleaned)
    if not match:
        return None
    kind = match.group(1).upper()
    etype = match.group(2).strip()
    if known_types:
        for candidate in known_types:
            if candidate.casefold() == etype.casefold():
                etype = candidate
                break
    if not etype:
        return None
    return Tag(kind, etype)


def parse_iob_reply(
    text: str, known_types: Sequence[str] | None = None
) -> tuple[list[tuple[str, Tag]], list[str]]:
    """Extract (token, tag) pairs from a noisy reply; never raises.

    Tab is the primary separator; whitespace runs are accepted when the
    trailing field parses as a tag. Entity types are case-normalized
    against ``known_types``. Unknown tag strings map to O, and skipped
    lines are reported as diagnostics.
    """
    pairs: list[tuple[str, Tag]] = []
    diagnostics: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("```"):
            diagnostics.append(f"line {lineno}: code fence skipped")
            continue
        if "\t" in line:
            fields = [f.strip() for f in line.split("\t") if f.strip()]
            if len(fields) < 2:
                diagnostics.append(f"line {lineno}: lone field {line!r}")
                continue
            if len(fields) > 2:
                diagnostics.append(f"line {lineno}: extra fields ignored")
            word, tag_text = fields[0], fields[-1]
            tag = _parse_pred_tag(tag_text, known_types)
            if tag is None:
                diagnostics.append(f"line {lineno}: unknown tag {tag_text!r} mapped to O")
                tag = O_TAG
            pairs.append((word, tag))
            continue
        fields = line.split()
        if len(fields) >= 2:
            tag = _parse_pred_tag(fields[-1], known_types)
            if tag is not None:
                pairs.append((" ".join(fields[:-1]), tag))
                continue
        diagnostics.append(f"line {lineno}: not a token/tag row: {line[:60]!r}")
    return pairs, diagnostics


def realign(pred: Sequence[tuple[str, Tag]], gold_tokens: Sequence[Token]) -> list[Tag]:
    """Carry predicted tags onto the gold tokenization via LCS matching.

    Token texts are compared lowercased; gold tokens without a match get
    O, and the result is leniently repaired so it always satisfies IOB.
    Output length equals len(gold_tokens).
    """
    a = [word.lower() for word, _ in pred]
    b = [tok.text.lower() for tok in gold_tokens]
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return [O_TAG] * m
    # dp[i][j] = LCS length of a[i:], b[j:]
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = dp[i], dp[i + 1]
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                row[j] = nxt[j + 1] + 1
            else:
                row[j] = nxt[j] if nxt[j] >= row[j + 1] else row[j + 1]
    tags: list[Tag] = [O_TAG] * m
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j] and dp[i][j] == dp[i + 1][j + 1] + 1:
            tags[j] = pred[i][1]
            i += 1
            j += 1
        elif dp[i + 1][j] >= dp[i][j + 1]:
            i += 1  # skip the extra predicted token first
        else:
            j += 1
    return validate_iob(tags, LENIENT)


_WORD_EDGE_RE = re.compile(r"^\W+|\W+$", re.UNICODE)


def parse_label_reply(text: str) -> str:
    """Reduce a reply to Yes/No/Invalid from its first non-empty line.

    A standalone yes or no token (case-insensitive, punctuation stripped)
    decides; a line containing both, or neither, is Invalid.
    """
    first = ""
    for line in text.splitlines():
        if line.strip():
            first = line
            break
    if not first:
        return INVALID
    words = {_WORD_EDGE_RE.sub("", w).lower() for w in first.split()}
    has_yes = "yes" in words
    has_no = "no" in words
    if has_yes and not has_no:
        return YES
    if has_no and not has_yes:
        return NO
    return INVALID


# -- benchmark runs -----------------------------------------------------------------

@dataclass
class BenchResult:
    index: int
    raw_reply: str
    tags: list[Tag] | None = None
    label: str | None = None
    diagnostics: list[str] = field(default_factory=list)


@dataclass
class BenchRun:
    dataset: str
    task: str
    results: list[BenchResult] = field(default_factory=list)

    @property
    def invalid_rate(self) -> float:
        if self.task != RE or not self.results:
            return 0.0
        invalid = sum(1 for r in self.results if r.label == INVALID)
        return invalid / len(self.results)

    def predicted_tags(self) -> list[list[Tag]]:
        return [r.tags or [] for r in self.results]

    def predicted_labels(self) -> list[str]:
        # Invalid scores as No so every item keeps a fixed denominator.
        return [NO if r.label == INVALID else (r.label or NO) for r in self.results]


def run_benchmark(
    dataset: Dataset,
    template: PromptTemplate,
    gateway: Gateway,
    subset: int | None = None,
    known_types: Sequence[str] | None = None,
) -> BenchRun:
    """Query the model once per item (subset = first k in file order)."""
    items = dataset.items if subset is None else dataset.items[: max(0, subset)]
    run = BenchRun(dataset=dataset.name, task=dataset.task)
    for index, item in enumerate(items):
        request = build_task_prompt(item, template, gateway.model)
        response = gateway.complete(request)
        result = BenchResult(index=index, raw_reply=response.content)
        if dataset.task == NER:
            pairs, diagnostics = parse_iob_reply(response.content, known_types)
            result.diagnostics = diagnostics
            if not pairs:
                result.diagnostics.append("no token/tag rows parsed; all-O fallback")
            result.tags = realign(pairs, item.tokens)
        else:
            result.label = parse_label_reply(response.content)
        run.results.append(result)
    return run


def write_benchrun(run: BenchRun, path: Path | str) -> None:
    """One JSONL row per item, loadable by the scorer's prediction reader."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for result in run.results:
            record: dict = {
                "id": result.index,
                "raw_reply": result.raw_reply,
                "diagnostics": result.diagnostics,
            }
            if run.task == NER:
                record["tags"] = [str(t) for t in (result.tags or [])]
            else:
                record["label"] = NO if result.label == INVALID else result.label
                record["invalid"] = result.label == INVALID
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
