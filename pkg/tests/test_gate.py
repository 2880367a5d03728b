from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthmine.corpus import REExample, TaggedSentence, Tag, Token, tokenize
from synthmine.gate import (
    GateConfig,
    dedup,
    filter_valid,
    jaccard,
    normalize,
    run_gate,
    shingle_set,
)
from synthmine.generate import CandidateSample


def _ner_sample(text, entity="sample"):
    tokens = tuple(tokenize(text))
    tags = [Tag("O")] * len(tokens)
    if tokens:
        tags[0] = Tag("B", "Disease")
    return CandidateSample(
        payload=TaggedSentence(tokens, tuple(tags)),
        prompt_id="p",
        seed_ref=entity,
        round=0,
        raw_line=text,
    )


def _re_sample(sentence, label="Yes"):
    return CandidateSample(
        payload=REExample(sentence, label, source="synthetic"),
        prompt_id="p",
        seed_ref="pos:0;neg:0",
        round=0,
        raw_line=f"{sentence}\t{label}",
    )


def _text_sample(text):
    return CandidateSample(payload=None, prompt_id="p", seed_ref="", round=0, raw_line=text)


# -- normalize ----------------------------------------------------------------------

def test_normalize_rules():
    assert normalize("  Mesna   has been shown. ") == "mesna has been shown."


def test_normalize_idempotent_fixture():
    text = "mesna has been shown."
    assert normalize(text) == text


@given(st.text(max_size=120))
@settings(max_examples=150)
def test_normalize_idempotent(text):
    once = normalize(text)
    assert normalize(once) == once


def test_normalize_empty():
    assert normalize("") == ""


def test_normalize_unifies_composed_and_decomposed_forms():
    composed = "café study"          # é as one code point
    decomposed = "café study"       # e + combining acute
    assert normalize(composed) == normalize(decomposed)


def test_dedup_catches_unicode_form_duplicates():
    kept, rejected = dedup(
        [_text_sample("café cohort result"), _text_sample("café cohort result")],
        _cfg(),
    )
    assert len(kept) == 1
    assert rejected[0][1] == "ExactDuplicate"


# -- shingles and jaccard ----------------------------------------------------------------

def test_shingle_fixture_similarity():
    a = shingle_set("a b c d e", 3)
    b = shingle_set("a b c d f", 3)
    assert a == {("a", "b", "c"), ("b", "c", "d"), ("c", "d", "e")}
    assert abs(jaccard(a, b) - 0.5) < 1e-12


def test_short_text_whole_shingle():
    assert shingle_set("a b", 3) == {("a", "b")}


def test_jaccard_edge_cases():
    assert jaccard(frozenset(), frozenset()) == 1.0
    assert jaccard(frozenset({("a",)}), frozenset()) == 0.0


# -- dedup ---------------------------------------------------------------------------------

def _cfg(**kwargs):
    return GateConfig(**kwargs)


def test_exact_duplicate_second_rejected():
    samples = [_text_sample("Case of anemia reported."), _text_sample("case of ANEMIA  reported.")]
    kept, rejected = dedup(samples, _cfg())
    assert len(kept) == 1
    assert rejected[0][1] == "ExactDuplicate"
    assert rejected[0][0] is samples[1]


def test_near_duplicate_below_threshold_kept():
    samples = [_text_sample("a b c d e"), _text_sample("a b c d f")]
    kept, rejected = dedup(samples, _cfg())
    assert len(kept) == 2 and not rejected  # jaccard 0.5 < 0.8


def test_near_duplicate_above_threshold_rejected():
    base = "alpha beta gamma delta epsilon zeta eta theta"
    near = "alpha beta gamma delta epsilon zeta eta iota"
    kept, rejected = dedup([_text_sample(base), _text_sample(near)], _cfg(jaccard_threshold=0.5))
    assert len(kept) == 1
    assert rejected[0][1] == "NearDuplicate"


def test_threshold_one_only_exact_shingle_sets():
    kept, rejected = dedup(
        [_text_sample("a b c d"), _text_sample("a b c e")], _cfg(jaccard_threshold=1.0)
    )
    assert len(kept) == 2
    kept, rejected = dedup(
        [_text_sample("x a b c d"), _text_sample("x a b c d!")], _cfg(jaccard_threshold=1.0)
    )
    # different normalized text but shingle overlap below 1.0 keeps both
    assert len(kept) == 2


def test_dedup_idempotent_on_kept():
    rng = random.Random(5)
    words = "alpha beta gamma delta epsilon zeta eta theta iota kappa".split()
    samples = [
        _text_sample(" ".join(rng.choice(words) for _ in range(rng.randint(3, 9))))
        for _ in range(60)
    ]
    cfg = _cfg(jaccard_threshold=0.6)
    kept, _ = dedup(samples, cfg)
    again, rejected = dedup(kept, cfg)
    assert [s.raw_line for s in again] == [s.raw_line for s in kept]
    assert not rejected


def test_permuting_rejected_members_leaves_kept_set():
    first = _text_sample("one two three four five")
    dup_a = _text_sample("one two three four five")
    dup_b = _text_sample("ONE two three four five ")
    other = _text_sample("six seven eight nine ten")
    cfg = _cfg()
    kept1, _ = dedup([first, dup_a, dup_b, other], cfg)
    kept2, _ = dedup([first, dup_b, dup_a, other], cfg)
    assert [normalize(s.text()) for s in kept1] == [normalize(s.text()) for s in kept2]


# -- validity filter --------------------------------------------------------------------------

GAD_YES_ROW = (
    "The study demonstrates that the @GENE$ gene is directly linked to @DISEASE$ "
    "development, with patients carrying the C/T variant showing a significantly "
    "higher risk."
)


def test_filter_accepts_well_formed_re_row():
    assert filter_valid(_re_sample(GAD_YES_ROW), "RE", _cfg()) is None


def test_filter_rejects_short_sentences():
    sample = _ner_sample("too short here")
    assert filter_valid(sample, "NER", _cfg(min_tokens=5)) == "TooShort"


def test_filter_rejects_long_sentences():
    text = " ".join(f"w{i}" for i in range(40))
    sample = _ner_sample(text)
    assert filter_valid(sample, "NER", _cfg(max_tokens=30)) == "TooLong"


def test_filter_rejects_missing_span():
    tokens = tuple(tokenize("plain sentence with no entities present."))
    sample = CandidateSample(
        payload=TaggedSentence(tokens, tuple(Tag("O") for _ in tokens)),
        prompt_id="p",
        seed_ref="",
        round=0,
        raw_line="",
    )
    assert filter_valid(sample, "NER", _cfg()) == "NoEntitySpan"


def test_filter_rejects_double_placeholder():
    sentence = "Both @GENE$ and @DISEASE$ then @DISEASE$ again appear in this sentence."
    assert filter_valid(_re_sample(sentence), "RE", _cfg()) == "PlaceholderCount"


def test_filter_rejects_missing_placeholder():
    sentence = "Only the @GENE$ marker appears within this long enough sentence."
    assert filter_valid(_re_sample(sentence), "RE", _cfg()) == "PlaceholderCount"


# -- full gate -----------------------------------------------------------------------------

def test_gate_report_reconciles():
    samples = [
        _ner_sample("Patients with anemia were enrolled in the trial cohort."),
        _ner_sample("Patients with anemia were enrolled in the trial cohort."),  # exact dup
        _ner_sample("tiny"),  # too short
        _ner_sample("A different sentence about chronic asthma management outcomes."),
    ]
    kept, quarantined, report = run_gate(samples, "NER", _cfg())
    assert report.input_count == 4
    assert report.reconciles()
    assert report.kept_count == len(kept) == 2
    assert report.exact_dup_count == 1
    assert report.invalid_count == 1
    assert len(quarantined) == 2


def test_gate_kept_has_no_normalized_equals():
    rng = random.Random(9)
    words = "alpha beta gamma delta epsilon zeta".split()
    samples = [
        _ner_sample(" ".join(rng.choice(words) for _ in range(7)) + " anemia case")
        for _ in range(50)
    ]
    kept, _, report = run_gate(samples, "NER", _cfg(min_tokens=2))
    norms = [normalize(s.text()) for s in kept]
    assert len(norms) == len(set(norms))
    assert report.reconciles()
