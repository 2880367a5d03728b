"""Datasets, tokenization, and the IOB tag / entity-span bijection.

Holds the two task-level data models (token-tagged sentences for NER,
placeholder-marked sentences with Yes/No labels for RE) plus the file
formats they travel in: CoNLL-style ``token<TAB>tag`` files and
tab-separated ``sentence<TAB>label`` files.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

from .errors import (
    BadLabel,
    ConfigError,
    EmptyInput,
    MalformedLine,
    MissingPlaceholder,
    OrphanInsideTag,
    OverlappingSpans,
    SpanOutOfRange,
    UnknownTag,
)

NER = "NER"
RE = "RE"

STRICT = "strict"
LENIENT = "lenient"

LABEL_YES = "Yes"
LABEL_NO = "No"

DEFAULT_PLACEHOLDERS = ("@GENE$", "@DISEASE$")


# -- core value types ---------------------------------------------------------

@dataclass(frozen=True)
class Token:
    text: str
    index: int

    def __post_init__(self):
        if not self.text:
            raise ValueError("token text must be non-empty")
        if any(ch.isspace() for ch in self.text):
            raise ValueError(f"token text contains whitespace: {self.text!r}")
        if self.index < 0:
            raise ValueError("token index must be >= 0")


@dataclass(frozen=True)
class Tag:
    """One IOB tag: kind O/B/I, with an entity type for B and I."""

    kind: str
    entity_type: str | None = None

    def __post_init__(self):
        if self.kind not in ("O", "B", "I"):
            raise ValueError(f"tag kind must be O, B, or I, got {self.kind!r}")
        if self.kind == "O" and self.entity_type is not None:
            raise ValueError("O tags carry no entity type")
        if self.kind != "O" and not self.entity_type:
            raise ValueError(f"{self.kind} tags require an entity type")

    def __str__(self) -> str:
        return self.kind if self.kind == "O" else f"{self.kind}-{self.entity_type}"

    @classmethod
    def parse(cls, text: str) -> "Tag":
        """Parse ``O`` / ``B-Type`` / ``I-Type``; raises ValueError otherwise."""
        if text == "O":
            return cls("O")
        if len(text) > 2 and text[0] in ("B", "I") and text[1] == "-":
            return cls(text[0], text[2:])
        raise ValueError(f"not an IOB tag: {text!r}")


O_TAG = Tag("O")


@dataclass(frozen=True)
class EntitySpan:
    """Inclusive token interval [start, end] carrying an entity type."""

    start: int
    end: int
    entity_type: str

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"bad span bounds ({self.start}, {self.end})")
        if not self.entity_type:
            raise ValueError("span requires an entity type")


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple[Token, ...]
    tags: tuple[Tag, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.tags)} tags"
            )
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))

    def text(self) -> str:
        return detokenize(self.tokens)


@dataclass(frozen=True)
class REExample:
    """A sentence with entity-slot placeholders and a binary relation label."""

    sentence: str
    label: str
    source: str = "original"

    def __post_init__(self):
        if self.label not in (LABEL_YES, LABEL_NO):
            raise ValueError(f"label must be Yes or No, got {self.label!r}")
        if self.source not in ("original", "synthetic"):
            raise ValueError(f"source must be original or synthetic, got {self.source!r}")


Item = Union[TaggedSentence, REExample]


@dataclass
class Dataset:
    name: str
    task: str
    items: list[Item]
    split: str = "train"

    def __post_init__(self):
        if self.task not in (NER, RE):
            raise ValueError(f"task must be NER or RE, got {self.task!r}")
        if self.split not in ("train", "test", "seed-pool"):
            raise ValueError(f"unknown split {self.split!r}")
        want = TaggedSentence if self.task == NER else REExample
        for item in self.items:
            if not isinstance(item, want):
                raise ValueError(
                    f"{self.task} dataset contains a {type(item).__name__}"
                )

    def __len__(self) -> int:
        return len(self.items)


# -- tokenization -------------------------------------------------------------

def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _split_chunk(chunk: str) -> list[str]:
    # Peel leading and trailing punctuation characters into standalone
    # tokens; interior punctuation (hyphens, apostrophes) stays attached.
    left: list[str] = []
    right: list[str] = []
    i, j = 0, len(chunk)
    while i < j and _is_punct(chunk[i]):
        left.append(chunk[i])
        i += 1
    while j > i and _is_punct(chunk[j - 1]):
        right.append(chunk[j - 1])
        j -= 1
    core = chunk[i:j]
    parts = left
    if core:
        parts = left + [core]
    return parts + list(reversed(right))


def tokenize(text: str) -> list[Token]:
    """Deterministic whitespace tokenizer with punctuation detachment.

    Splitting on whitespace, then detaching leading/trailing punctuation
    of each chunk as standalone tokens. Joining the result with single
    spaces and re-tokenizing reproduces the same token texts.
    """
    texts: list[str] = []
    for chunk in text.split():
        texts.extend(_split_chunk(chunk))
    return [Token(t, i) for i, t in enumerate(texts)]


def detokenize(tokens: Iterable[Token]) -> str:
    return " ".join(t.text for t in tokens)


# -- IOB validation and the tag/span bijection --------------------------------

def validate_iob(tags: Sequence[Tag], mode: str = STRICT) -> list[Tag]:
    """Check (strict) or repair (lenient) I tags that lack a same-type head.

    Strict mode raises OrphanInsideTag at the first offending position;
    lenient mode rewrites each orphan I to a B of the same type. Repair is
    sequential, so an I following a repaired orphan is considered covered.
    """
    if mode not in (STRICT, LENIENT):
        raise ValueError(f"mode must be strict or lenient, got {mode!r}")
    out: list[Tag] = []
    for pos, tag in enumerate(tags):
        if tag.kind == "I":
            prev = out[pos - 1] if pos > 0 else None
            covered = (
                prev is not None
                and prev.kind in ("B", "I")
                and prev.entity_type == tag.entity_type
            )
            if not covered:
                if mode == STRICT:
                    raise OrphanInsideTag(pos)
                tag = Tag("B", tag.entity_type)
        out.append(tag)
    return out


def spans_from_tags(tagged: TaggedSentence | Sequence[Tag]) -> list[EntitySpan]:
    """Collect maximal B,I+ runs into entity spans, sorted by start."""
    tags = tagged.tags if isinstance(tagged, TaggedSentence) else tagged
    repaired = validate_iob(tags, LENIENT)
    spans: list[EntitySpan] = []
    start: int | None = None
    etype = ""
    for pos, tag in enumerate(repaired):
        if tag.kind == "B":
            if start is not None:
                spans.append(EntitySpan(start, pos - 1, etype))
            start, etype = pos, tag.entity_type or ""
        elif tag.kind == "O" and start is not None:
            spans.append(EntitySpan(start, pos - 1, etype))
            start = None
    if start is not None:
        spans.append(EntitySpan(start, len(repaired) - 1, etype))
    return spans


def tags_from_spans(tokens: Sequence[Token] | int, spans: Sequence[EntitySpan]) -> list[Tag]:
    """Exact inverse of spans_from_tags on valid input; gaps become O.

    ``tokens`` may be the token list or just the sentence length.
    """
    n = tokens if isinstance(tokens, int) else len(tokens)
    tags = [O_TAG] * n
    prev_end = -1
    for span in sorted(spans, key=lambda s: (s.start, s.end)):
        if span.end >= n:
            raise SpanOutOfRange(f"span ({span.start}, {span.end}) exceeds sentence length {n}")
        if span.start <= prev_end:
            raise OverlappingSpans(f"span starting at {span.start} overlaps a previous span")
        tags[span.start] = Tag("B", span.entity_type)
        for i in range(span.start + 1, span.end + 1):
            tags[i] = Tag("I", span.entity_type)
        prev_end = span.end
    return tags


# -- CoNLL-style NER files ----------------------------------------------------

def parse_conll(
    data: bytes | str,
    name: str = "custom",
    split: str = "train",
    mode: str = STRICT,
) -> Dataset:
    """Parse ``token<TAB>tag`` lines with blank-line sentence separators.

    ``mode`` controls orphan-I handling: strict for human-authored gold
    files, lenient to repair machine output on reload.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if not text.strip():
        raise EmptyInput("no records in NER input")

    sentences: list[TaggedSentence] = []
    words: list[str] = []
    tags: list[Tag] = []
    first_line = 0

    def flush() -> None:
        nonlocal words, tags
        if not words:
            return
        try:
            repaired = validate_iob(tags, mode)
        except OrphanInsideTag as exc:
            raise OrphanInsideTag(
                exc.position,
                f"line {first_line + exc.position}: orphan I tag",
            ) from None
        tokens = tuple(Token(w, i) for i, w in enumerate(words))
        sentences.append(TaggedSentence(tokens, tuple(repaired)))
        words, tags = [], []

    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            flush()
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise MalformedLine(lineno, f"expected 2 tab-separated fields, got {len(fields)}")
        word, tag_text = fields[0].strip(), fields[1].strip()
        if not word or any(ch.isspace() for ch in word):
            raise MalformedLine(lineno, f"bad token field {fields[0]!r}")
        try:
            tag = Tag.parse(tag_text)
        except ValueError:
            raise UnknownTag(lineno, tag_text) from None
        if not words:
            first_line = lineno
        words.append(word)
        tags.append(tag)
    flush()
    return Dataset(name=name, task=NER, items=sentences, split=split)


def serialize_conll(dataset: Dataset) -> str:
    if dataset.task != NER:
        raise ValueError("serialize_conll requires an NER dataset")
    blocks = []
    for sent in dataset.items:
        blocks.append(
            "\n".join(f"{tok.text}\t{tag}" for tok, tag in zip(sent.tokens, sent.tags))
        )
    return "\n\n".join(blocks) + "\n"


# -- RE files -----------------------------------------------------------------

def normalize_label(raw: str) -> str | None:
    """Map noisy label text (``"yes."``, ``" NO"``) to Yes/No, else None."""
    cleaned = raw.strip().strip(".,;:!?\"'()[]").strip().lower()
    if cleaned == "yes":
        return LABEL_YES
    if cleaned == "no":
        return LABEL_NO
    return None


def parse_re_row(line: str) -> tuple[str, str] | None:
    """Split one RE record into (sentence, raw label), or None if shapeless.

    Accepts the canonical ``sentence<TAB>label`` form and the
    ``| sentence | label |`` seed-pool form. Pipes inside the sentence are
    tolerated in the seed form by taking the last cell as the label.
    """
    stripped = line.strip()
    if stripped.startswith("|") and stripped.endswith("|") and len(stripped) > 2:
        inner = stripped[1:-1]
        if "|" not in inner:
            return None
        sentence, label = inner.rsplit("|", 1)
        return sentence.strip(), label.strip()
    if "\t" in stripped:
        sentence, label = stripped.split("\t", 1)
        return sentence.strip(), label.strip()
    return None


def parse_re_file(
    data: bytes | str,
    name: str = "custom",
    split: str = "train",
    placeholders: Sequence[str] = DEFAULT_PLACEHOLDERS,
    source: str = "original",
) -> Dataset:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if not text.strip():
        raise EmptyInput("no records in RE input")

    examples: list[REExample] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        row = parse_re_row(line)
        if row is None:
            raise MalformedLine(lineno, "expected 'sentence<TAB>label' or '| sentence | label |'")
        sentence, raw_label = row
        label = normalize_label(raw_label)
        if label is None:
            raise BadLabel(lineno, raw_label)
        for ph in placeholders:
            if ph not in sentence:
                raise MissingPlaceholder(lineno, ph)
        examples.append(REExample(sentence=sentence, label=label, source=source))
    if not examples:
        raise EmptyInput("no records in RE input")
    return Dataset(name=name, task=RE, items=examples, split=split)


def serialize_re(dataset: Dataset) -> str:
    if dataset.task != RE:
        raise ValueError("serialize_re requires an RE dataset")
    return "".join(f"{ex.sentence}\t{ex.label}\n" for ex in dataset.items)


# -- dataset manifests --------------------------------------------------------

@dataclass
class DatasetManifest:
    """Where a dataset lives on disk and how to validate it."""

    name: str
    task: str
    paths: dict[str, Path] = field(default_factory=dict)
    entity_types: list[str] = field(default_factory=list)
    placeholders: list[str] = field(default_factory=lambda: list(DEFAULT_PLACEHOLDERS))


_MANIFEST_SPLITS = ("train", "test", "seed-pool")


def parse_manifest(path: Path | str) -> DatasetManifest:
    """Read a line-oriented ``key: value`` manifest (``#`` starts a comment)."""
    path = Path(path)
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if ":" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key: value'")
        key, value = stripped.split(":", 1)
        pairs[key.strip().lower()] = value.strip()

    try:
        name = pairs["name"]
        task = pairs["task"].upper()
    except KeyError as exc:
        raise ConfigError(f"{path}: manifest missing required key {exc}") from None
    if task not in (NER, RE):
        raise ConfigError(f"{path}: task must be NER or RE, got {task!r}")

    manifest = DatasetManifest(name=name, task=task)
    for split in _MANIFEST_SPLITS:
        if split in pairs:
            manifest.paths[split] = (path.parent / pairs[split]).resolve()
    if "entity-types" in pairs:
        manifest.entity_types = [t.strip() for t in pairs["entity-types"].split(",") if t.strip()]
    if "placeholders" in pairs:
        manifest.placeholders = [p.strip() for p in pairs["placeholders"].split(",") if p.strip()]
    return manifest


def load_split(manifest: DatasetManifest, split: str, mode: str = STRICT) -> Dataset:
    if split not in manifest.paths:
        raise ConfigError(f"manifest for {manifest.name!r} declares no {split!r} path")
    path = manifest.paths[split]
    if not path.exists():
        raise ConfigError(f"dataset file not found: {path}")
    data = path.read_bytes()
    if manifest.task == NER:
        return parse_conll(data, name=manifest.name, split=split, mode=mode)
    return parse_re_file(
        data, name=manifest.name, split=split, placeholders=manifest.placeholders
    )
