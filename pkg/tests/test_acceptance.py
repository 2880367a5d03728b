"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line
per criterion; every tolerance is pinned here.
"""

from __future__ import annotations

import hashlib
import json
import random
import time
from pathlib import Path

from synthmine.bench import parse_iob_reply, parse_label_reply, realign
from synthmine.cli import main as cli_main
from synthmine.corpus import (
    Tag,
    TaggedSentence,
    Token,
    spans_from_tags,
    tags_from_spans,
    validate_iob,
)
from synthmine.gate import GateConfig, GateReport, dedup, jaccard, run_gate, shingle_set
from synthmine.generate import CandidateSample, SeedEntity, annotate_entity
from synthmine.score import (
    Metrics,
    NER_SENTENCE_GRID,
    RE_SIZE_GRID,
    learning_curve,
    span_prf,
)
from synthmine.shift import ngram_js_divergence, pca_project

import numpy as np

from tests.conftest import make_ner_files, write_config

DATA = Path(__file__).parent / "data"

ENTITY_TYPES = ("Disease", "Chemical", "Gene")


def _passed(name: str) -> None:
    print(f"ACCEPTANCE PASS: {name}")


# -- 1. IOB round-trip property ------------------------------------------------------

def _random_valid_tags(rng: random.Random, length: int) -> list[Tag]:
    tags: list[Tag] = []
    while len(tags) < length:
        if rng.random() < 0.4:
            etype = rng.choice(ENTITY_TYPES)
            run = min(rng.randint(1, 4), length - len(tags))
            tags.append(Tag("B", etype))
            tags.extend(Tag("I", etype) for _ in range(run - 1))
        else:
            tags.append(Tag("O"))
    return tags


def test_iob_round_trip_10000_sentences():
    rng = random.Random(20240601)
    started = time.perf_counter()
    for _ in range(10_000):
        tags = _random_valid_tags(rng, rng.randint(1, 20))
        spans = spans_from_tags(tags)
        assert tags_from_spans(len(tags), spans) == tags
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"round-trip took {elapsed:.2f}s"
    _passed(f"IOB round-trip on 10,000 sentences in {elapsed:.2f}s")


# -- 2. worked disease-mention example ---------------------------------------------------

def test_seed_annotation_worked_example():
    sentence, reason = annotate_entity(
        "The symptoms suggest a possible case of rheumatoid arthritis.",
        SeedEntity("rheumatoid arthritis", "Disease"),
    )
    assert reason is None
    assert [str(t) for t in sentence.tags] == [
        "O", "O", "O", "O", "O", "O", "O", "B-Disease", "I-Disease", "O",
    ]
    _passed("seed annotation reproduces the worked tag sequence exactly")


# -- 3. scorer oracle equivalence -----------------------------------------------------------

def _brute_force_spans(tags: list[Tag]) -> set[tuple[int, int, str]]:
    n = len(tags)
    found = set()
    for start in range(n):
        for end in range(start, n):
            for etype in ENTITY_TYPES:
                if str(tags[start]) != f"B-{etype}":
                    continue
                if any(str(tags[k]) != f"I-{etype}" for k in range(start + 1, end + 1)):
                    continue
                if end + 1 < n and str(tags[end + 1]) == f"I-{etype}":
                    continue
                found.add((start, end, etype))
    return found


def test_scorer_matches_bruteforce_oracle_on_1000_corpora():
    rng = random.Random(77)
    for _ in range(1000):
        gold = []
        preds = []
        for _ in range(rng.randint(1, 10)):
            length = rng.randint(1, 10)
            tokens = tuple(Token(f"w{i}", i) for i in range(length))
            gold.append(TaggedSentence(tokens, tuple(_random_valid_tags(rng, length))))
            preds.append(_random_valid_tags(rng, length))
        metrics = span_prf(gold, preds)
        tp = fp = fn = 0
        for sentence, pred in zip(gold, preds):
            gold_spans = _brute_force_spans(list(sentence.tags))
            pred_spans = _brute_force_spans(validate_iob(pred, "lenient"))
            tp += len(gold_spans & pred_spans)
            fp += len(pred_spans - gold_spans)
            fn += len(gold_spans - pred_spans)
        assert (metrics.tp, metrics.fp, metrics.fn) == (tp, fp, fn)
    _passed("span scorer equals brute-force span-set oracle on 1,000 corpora")


# -- 4. metrics formulas ------------------------------------------------------------------------

def test_metrics_formulas_and_zero_cases():
    metrics = Metrics.from_counts(2, 1, 1)
    assert abs(metrics.precision - 2 / 3) < 1e-12
    assert abs(metrics.recall - 2 / 3) < 1e-12
    assert abs(metrics.f1 - 2 / 3) < 1e-12
    for tp, fp, fn in ((0, 0, 0), (0, 0, 5), (0, 5, 0)):
        zero = Metrics.from_counts(tp, fp, fn)
        if tp + fp == 0:
            assert zero.precision == 0.0
        if tp + fn == 0:
            assert zero.recall == 0.0
        if zero.precision + zero.recall == 0:
            assert zero.f1 == 0.0
    _passed("metrics formulas: tp=2,fp=1,fn=1 -> 2/3 within 1e-12; 0/0 -> 0")


# -- 5. dedup properties ------------------------------------------------------------------------

def _text_sample(text: str) -> CandidateSample:
    return CandidateSample(payload=None, prompt_id="p", seed_ref="", round=0, raw_line=text)


def test_dedup_properties():
    a = shingle_set("a b c d e", 3)
    b = shingle_set("a b c d f", 3)
    assert a == {("a", "b", "c"), ("b", "c", "d"), ("c", "d", "e")}
    assert abs(jaccard(a, b) - 0.5) < 1e-12

    rng = random.Random(4)
    words = "alpha beta gamma delta epsilon zeta eta theta".split()
    cfg = GateConfig(jaccard_threshold=0.6)
    for _ in range(20):
        samples = [
            _text_sample(" ".join(rng.choice(words) for _ in range(rng.randint(3, 8))))
            for _ in range(40)
        ]
        kept, rejected = dedup(samples, cfg)
        again, rejected_again = dedup(kept, cfg)
        assert [s.raw_line for s in again] == [s.raw_line for s in kept]
        assert not rejected_again
        report = GateReport(
            input_count=len(samples),
            kept_count=len(kept),
            exact_dup_count=sum(1 for _, r in rejected if r == "ExactDuplicate"),
            near_dup_count=sum(1 for _, r in rejected if r == "NearDuplicate"),
            invalid_count=0,
        )
        assert report.reconciles()
    _passed("dedup idempotence, 0.5 jaccard fixture, and report reconciliation")


# -- 6. end-to-end determinism -------------------------------------------------------------------

def test_gen_run_twice_byte_identical(tmp_path):
    manifest = make_ner_files(tmp_path / "data", n_entities=10)
    config = write_config(
        tmp_path / "run.cfg",
        manifest,
        tmp_path / "out",
        extra="\n[generation]\nn_per_entity: 30\nmax_entities: 10\n",
    )
    started = time.perf_counter()
    assert cli_main(["gen", "--config", str(config)]) == 0
    assert cli_main(["gen", "--config", str(config)]) == 0
    elapsed = time.perf_counter() - started
    runs = sorted((tmp_path / "out" / "runs").iterdir())
    gen_runs = [r for r in runs if r.name.startswith("gen-")]
    assert len(gen_runs) == 2

    def digest(path: Path) -> str:
        return hashlib.sha256(path.read_bytes()).hexdigest()

    first, second = gen_runs
    assert digest(first / "synthetic.conll") == digest(second / "synthetic.conll")
    assert digest(first / "provenance.jsonl") == digest(second / "provenance.jsonl")
    assert elapsed < 60.0, f"two gen runs took {elapsed:.2f}s"
    _passed(
        f"gen with mock provider, 10 seeds, N=30: byte-identical twice in {elapsed:.2f}s"
    )


# -- 7. zero-shot harness robustness ----------------------------------------------------------------

def test_noisy_reply_harness_robustness():
    entries = [
        json.loads(line)
        for line in (DATA / "noisy_iob_replies.jsonl").read_text().splitlines()
        if line.strip()
    ]
    assert len(entries) == 50
    for entry in entries:
        pairs, _ = parse_iob_reply(entry["reply"], known_types=["Disease", "Gene"])
        gold = [Token(t, i) for i, t in enumerate(entry["gold_tokens"])]
        tags = realign(pairs, gold)
        assert len(tags) == len(gold)
        validate_iob(tags, "strict")

    re_entries = [
        json.loads(line)
        for line in (DATA / "noisy_re_replies.jsonl").read_text().splitlines()
        if line.strip()
    ]
    verdicts = [parse_label_reply(e["reply"]) for e in re_entries]
    measured = sum(1 for v in verdicts if v == "Invalid") / len(verdicts)
    planted = sum(1 for e in re_entries if e["invalid"]) / len(re_entries)
    assert measured == planted
    _passed(
        "50 noisy replies parsed without exceptions; invalid-RE rate "
        f"{measured:.3f} equals planted rate"
    )


# -- 8. shift statistics -----------------------------------------------------------------------------

def test_shift_statistics():
    corpus = ["patients with anemia", "gene expression changed"]
    assert abs(ngram_js_divergence(corpus, list(corpus), 1)) < 1e-9
    assert abs(ngram_js_divergence(["alpha beta"], ["gamma delta"], 1) - 1.0) < 1e-9
    assert abs(ngram_js_divergence(["a b"], ["a c"], 1) - 0.5) < 1e-9

    line = [np.array([t, 2.0 * t, -1.0 * t]) for t in np.linspace(-3, 3, 11)]
    projection = pca_project(line)
    assert all(abs(p.y) < 1e-9 for p in projection.points)
    _passed("JSD 0/1/0.5 fixtures within 1e-9; PCA line fixture second component ~ 0")


# -- 9. sweep arithmetic ------------------------------------------------------------------------------

def test_sweep_grids():
    flat = Metrics.from_counts(1, 0, 0)
    sentences = learning_curve(NER_SENTENCE_GRID, lambda x, t: flat)
    assert len(sentences) == 10
    sizes = learning_curve(RE_SIZE_GRID, lambda x, t: flat)
    assert len(sizes) == 16
    assert [p.x for p in sizes] == list(range(400, 6401, 400))
    _passed("sweep grids produce 10 and 16 points")
