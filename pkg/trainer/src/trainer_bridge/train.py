"""Training loops and the file-contract entry point."""

from __future__ import annotations

import json
import random

import torch
from torch import nn

from .formats import (
    TrainJob,
    read_conll,
    read_re_tsv,
    write_embeddings,
    write_ner_predictions,
    write_re_predictions,
)
from .model import SentenceClassifier, TokenTagger, Vocab, pad_batch

PAD_TAG_ID = -100  # ignored by the loss


def _seed_everything(seed: int) -> None:
    random.seed(seed)
    torch.manual_seed(seed)


def _repair_orphans(tags: list[str]) -> list[str]:
    """Rewrite I tags without a same-type head to B, so files stay valid."""
    out: list[str] = []
    for i, tag in enumerate(tags):
        if tag.startswith("I-"):
            etype = tag[2:]
            prev = out[i - 1] if i else "O"
            if prev not in (f"B-{etype}", f"I-{etype}"):
                tag = f"B-{etype}"
        out.append(tag)
    return out


def _batches(count: int, size: int, rng: random.Random | None = None):
    order = list(range(count))
    if rng is not None:
        rng.shuffle(order)
    for start in range(0, count, size):
        yield order[start : start + size]


def train_ner(job: TrainJob) -> tuple[list[list[str]], list[list[float]]]:
    train = read_conll(job.train_path)
    eval_set = read_conll(job.eval_path)
    if not train:
        raise ValueError(f"empty training file {job.train_path}")
    _seed_everything(job.seed)

    vocab = Vocab([t for s in train for t in s.tokens])
    tag_names = sorted({t for s in train for t in s.tags})
    if "O" not in tag_names:
        tag_names.append("O")
        tag_names.sort()
    tag_index = {t: i for i, t in enumerate(tag_names)}

    device = torch.device("cpu")
    model = TokenTagger(len(vocab), len(tag_names), job.hidden_dim, job.layers).to(device)
    optimizer = torch.optim.Adam(model.parameters(), lr=job.learning_rate)
    loss_fn = nn.CrossEntropyLoss(ignore_index=PAD_TAG_ID)

    encoded = [vocab.encode(s.tokens) for s in train]
    labels = [[tag_index[t] for t in s.tags] for s in train]
    rng = random.Random(job.seed)
    model.train()
    for _ in range(job.epochs):
        for batch_idx in _batches(len(train), job.batch_size, rng):
            token_batch = pad_batch([encoded[i] for i in batch_idx], device)
            label_batch = torch.full(token_batch.shape, PAD_TAG_ID, dtype=torch.long)
            for row, i in enumerate(batch_idx):
                label_batch[row, : len(labels[i])] = torch.tensor(labels[i])
            optimizer.zero_grad()
            logits = model(token_batch)
            loss = loss_fn(logits.reshape(-1, len(tag_names)), label_batch.reshape(-1))
            loss.backward()
            optimizer.step()

    model.eval()
    predictions: list[list[str]] = []
    embeddings: list[list[float]] = []
    with torch.no_grad():
        for sentence in eval_set:
            token_batch = pad_batch([vocab.encode(sentence.tokens)], device)
            logits = model(token_batch)[0, : len(sentence.tokens)]
            tags = [tag_names[int(i)] for i in logits.argmax(dim=-1)]
            predictions.append(_repair_orphans(tags))
            if job.embeddings_path is not None:
                vector = model.sentence_embedding(token_batch)[0]
                embeddings.append([float(v) for v in vector])
    return predictions, embeddings


def train_re(job: TrainJob) -> tuple[list[str], list[list[float]]]:
    train = read_re_tsv(job.train_path)
    eval_set = read_re_tsv(job.eval_path)
    if not train:
        raise ValueError(f"empty training file {job.train_path}")
    _seed_everything(job.seed)

    vocab = Vocab([t for e in train for t in e.sentence.split()])
    labels = ("No", "Yes")
    label_index = {name: i for i, name in enumerate(labels)}

    device = torch.device("cpu")
    model = SentenceClassifier(len(vocab), 2, job.hidden_dim, job.layers).to(device)
    optimizer = torch.optim.Adam(model.parameters(), lr=job.learning_rate)
    loss_fn = nn.CrossEntropyLoss()

    encoded = [vocab.encode(e.sentence.split()) for e in train]
    targets = [label_index[e.label] for e in train]
    rng = random.Random(job.seed)
    model.train()
    for _ in range(job.epochs):
        for batch_idx in _batches(len(train), job.batch_size, rng):
            token_batch = pad_batch([encoded[i] for i in batch_idx], device)
            target_batch = torch.tensor([targets[i] for i in batch_idx], dtype=torch.long)
            optimizer.zero_grad()
            loss = loss_fn(model(token_batch), target_batch)
            loss.backward()
            optimizer.step()

    model.eval()
    predictions: list[str] = []
    embeddings: list[list[float]] = []
    with torch.no_grad():
        for example in eval_set:
            token_batch = pad_batch([vocab.encode(example.sentence.split())], device)
            predictions.append(labels[int(model(token_batch)[0].argmax())])
            if job.embeddings_path is not None:
                vector = model.pooled(token_batch)[0]
                embeddings.append([float(v) for v in vector])
    return predictions, embeddings


def _echo_accuracy(job: TrainJob, predictions) -> float:
    """Quick eval-set agreement for the console echo; the real scoring
    pass belongs to the pipeline's scorer."""
    if job.task == "NER":
        gold = read_conll(job.eval_path)
        total = sum(len(s.tags) for s in gold)
        if total == 0:
            return 0.0
        hits = sum(
            1
            for sentence, tags in zip(gold, predictions)
            for g, p in zip(sentence.tags, tags)
            if g == p
        )
        return hits / total
    gold = read_re_tsv(job.eval_path)
    if not gold:
        return 0.0
    hits = sum(1 for example, label in zip(gold, predictions) if example.label == label)
    return hits / len(gold)


def train_and_predict(job: TrainJob) -> dict:
    """Run the job and write outputs atomically; partials never survive."""
    outputs = [job.predictions_path]
    if job.embeddings_path is not None:
        outputs.append(job.embeddings_path)
    temp_paths = [p.with_suffix(p.suffix + ".part") for p in outputs]
    try:
        if job.task == "NER":
            predictions, embeddings = train_ner(job)
            write_ner_predictions(predictions, temp_paths[0])
        else:
            predictions, embeddings = train_re(job)
            write_re_predictions(predictions, temp_paths[0])
        if job.embeddings_path is not None:
            write_embeddings(embeddings, temp_paths[1])
        for temp, final in zip(temp_paths, outputs):
            temp.replace(final)
    except BaseException:
        for temp in temp_paths:
            temp.unlink(missing_ok=True)
        raise
    manifest = job.manifest()
    manifest["eval_items"] = len(predictions)
    manifest["eval_accuracy"] = round(_echo_accuracy(job, predictions), 6)
    manifest_path = job.predictions_path.with_suffix(".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest
