"""File formats shared with the corpus pipeline, re-read independently.

The bridge deliberately reimplements these tiny readers instead of
importing the pipeline package: the contract between the two is the
files themselves.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass
class NerSentence:
    tokens: list[str]
    tags: list[str]


@dataclass
class ReExample:
    sentence: str
    label: str


def read_conll(path: Path | str) -> list[NerSentence]:
    sentences: list[NerSentence] = []
    tokens: list[str] = []
    tags: list[str] = []
    for line in Path(path).read_text(encoding="utf-8").split("\n"):
        if not line.strip():
            if tokens:
                sentences.append(NerSentence(tokens, tags))
                tokens, tags = [], []
            continue
        word, tag = line.split("\t")
        tokens.append(word)
        tags.append(tag)
    if tokens:
        sentences.append(NerSentence(tokens, tags))
    return sentences


def write_conll(sentences: list[NerSentence], path: Path | str) -> None:
    blocks = [
        "\n".join(f"{w}\t{t}" for w, t in zip(s.tokens, s.tags)) for s in sentences
    ]
    Path(path).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")


def read_re_tsv(path: Path | str) -> list[ReExample]:
    examples: list[ReExample] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        sentence, label = line.split("\t", 1)
        examples.append(ReExample(sentence.strip(), label.strip()))
    return examples


def write_re_tsv(examples: list[ReExample], path: Path | str) -> None:
    Path(path).write_text(
        "".join(f"{e.sentence}\t{e.label}\n" for e in examples), encoding="utf-8"
    )


def write_ner_predictions(tag_lists: list[list[str]], path: Path | str) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for i, tags in enumerate(tag_lists):
            fh.write(json.dumps({"id": i, "tags": tags}) + "\n")


def write_re_predictions(labels: list[str], path: Path | str) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for i, label in enumerate(labels):
            fh.write(json.dumps({"id": i, "label": label}) + "\n")


def write_embeddings(vectors: list[list[float]], path: Path | str, prefix: str = "s") -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for i, vec in enumerate(vectors):
            fh.write(f"{prefix}{i}\t" + ",".join(f"{v:.6g}" for v in vec) + "\n")


# -- job specs -------------------------------------------------------------------

@dataclass
class TrainJob:
    task: str
    train_path: Path
    eval_path: Path
    predictions_path: Path
    base_model: str = "tiny-random"
    epochs: int = 3
    learning_rate: float = 3e-5
    batch_size: int = 16
    seed: int = 0
    embeddings_path: Path | None = None
    hidden_dim: int = 64
    layers: int = 2

    def manifest(self) -> dict:
        return {
            "task": self.task,
            "train": str(self.train_path),
            "eval": str(self.eval_path),
            "base_model": self.base_model,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "hidden_dim": self.hidden_dim,
            "layers": self.layers,
        }


def load_job(path: Path | str) -> TrainJob:
    path = Path(path)
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if ":" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key: value'")
        key, value = stripped.split(":", 1)
        pairs[key.strip().lower()] = value.strip()

    def need(key: str) -> str:
        if key not in pairs:
            raise ValueError(f"{path}: job spec missing {key!r}")
        return pairs[key]

    task = need("task").upper()
    if task not in ("NER", "RE"):
        raise ValueError(f"{path}: task must be NER or RE")
    base = path.parent
    job = TrainJob(
        task=task,
        train_path=(base / need("train")).resolve(),
        eval_path=(base / need("eval")).resolve(),
        predictions_path=(base / need("predictions")).resolve(),
    )
    if "base-model" in pairs:
        job.base_model = pairs["base-model"]
    if "epochs" in pairs:
        job.epochs = int(pairs["epochs"])
    if "learning-rate" in pairs:
        job.learning_rate = float(pairs["learning-rate"])
    if "batch-size" in pairs:
        job.batch_size = int(pairs["batch-size"])
    if "seed" in pairs:
        job.seed = int(pairs["seed"])
    if "embeddings" in pairs:
        job.embeddings_path = (base / pairs["embeddings"]).resolve()
    if "hidden-dim" in pairs:
        job.hidden_dim = int(pairs["hidden-dim"])
    if "layers" in pairs:
        job.layers = int(pairs["layers"])
    for required in (job.train_path, job.eval_path):
        if not required.exists():
            raise FileNotFoundError(f"{path}: no such data file {required}")
    return job
