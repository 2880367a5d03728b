"""Span-level NER metrics, RE classification metrics, trials, sweeps.

Span matching is exact (start, end, type) micro-averaged over all
sentences, the CoNLL convention. Every 0/0 ratio is defined as 0 so
aggregation stays finite.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .corpus import Tag, TaggedSentence, spans_from_tags
from .errors import EmptyInput, LengthMismatch, ShapeMismatch

YES = "Yes"
NO = "No"

NER_SENTENCE_GRID = (1, 2, 3, 4, 5, 10, 15, 20, 25, 30)
SEED_RATIO_GRID = (10, 20, 30, 40, 50, 60, 70, 80, 90)
RE_SIZE_GRID = tuple(range(400, 6401, 400))
RE_POOL_GRID = (0, 20, 40, 60, 80, 100)


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "Metrics":
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(tp=tp, fp=fp, fn=fn, precision=precision, recall=recall, f1=f1)

    def as_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def span_prf(gold: Sequence[TaggedSentence], pred: Sequence[Sequence[Tag]]) -> Metrics:
    """Micro P/R/F over exact (start, end, type) span matches."""
    if len(gold) != len(pred):
        raise ShapeMismatch(f"{len(gold)} gold sentences vs {len(pred)} predictions")
    tp = fp = fn = 0
    for i, (gold_sentence, pred_tags) in enumerate(zip(gold, pred)):
        if len(pred_tags) != len(gold_sentence.tokens):
            raise ShapeMismatch(
                f"sentence {i}: {len(gold_sentence.tokens)} tokens vs {len(pred_tags)} predicted tags"
            )
        gold_spans = set(spans_from_tags(gold_sentence))
        pred_spans = set(spans_from_tags(list(pred_tags)))
        tp += len(gold_spans & pred_spans)
        fp += len(pred_spans - gold_spans)
        fn += len(gold_spans - pred_spans)
    return Metrics.from_counts(tp, fp, fn)


def cls_prf(gold: Sequence[str], pred: Sequence[str]) -> Metrics:
    """Binary P/R/F with Yes as the positive class."""
    if len(gold) != len(pred):
        raise LengthMismatch(f"{len(gold)} gold labels vs {len(pred)} predictions")
    tp = fp = fn = 0
    for g, p in zip(gold, pred):
        if p == YES and g == YES:
            tp += 1
        elif p == YES and g == NO:
            fp += 1
        elif p == NO and g == YES:
            fn += 1
    return Metrics.from_counts(tp, fp, fn)


@dataclass
class TrialSummary:
    trials: list[Metrics]
    mean_precision: float
    mean_recall: float
    mean_f1: float
    std_precision: float
    std_recall: float
    std_f1: float

    def as_dict(self) -> dict:
        return {
            "trials": [m.as_dict() for m in self.trials],
            "mean_precision": self.mean_precision,
            "mean_recall": self.mean_recall,
            "mean_f1": self.mean_f1,
            "std_precision": self.std_precision,
            "std_recall": self.std_recall,
            "std_f1": self.std_f1,
        }


def aggregate_trials(trials: Sequence[Metrics]) -> TrialSummary:
    """Mean and sample standard deviation (n-1; zero for a single trial)."""
    if not trials:
        raise EmptyInput("aggregate_trials needs at least one trial")

    def spread(values: list[float]) -> float:
        return statistics.stdev(values) if len(values) > 1 else 0.0

    ps = [m.precision for m in trials]
    rs = [m.recall for m in trials]
    fs = [m.f1 for m in trials]
    return TrialSummary(
        trials=list(trials),
        mean_precision=float(statistics.mean(ps)),
        mean_recall=float(statistics.mean(rs)),
        mean_f1=float(statistics.mean(fs)),
        std_precision=spread(ps),
        std_recall=spread(rs),
        std_f1=spread(fs),
    )


@dataclass
class CurvePoint:
    x: float
    summary: TrialSummary | None = None
    error: str | None = None


def learning_curve(
    grid: Iterable[float],
    eval_hook: Callable[[float, int], Metrics],
    trials: int = 1,
) -> list[CurvePoint]:
    """One CurvePoint per grid value; hook failures are recorded per point."""
    points: list[CurvePoint] = []
    for x in grid:
        try:
            metrics = [eval_hook(x, trial) for trial in range(trials)]
        except Exception as exc:  # keep sweeping past a broken point
            points.append(CurvePoint(x=x, error=f"{type(exc).__name__}: {exc}"))
            continue
        points.append(CurvePoint(x=x, summary=aggregate_trials(metrics)))
    return points


def write_curve_tsv(points: Sequence[CurvePoint], path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = (
        "x\ttrials\tmean_precision\tstd_precision\tmean_recall\tstd_recall"
        "\tmean_f1\tstd_f1\ttrial_f1s\terror\n"
    )
    with path.open("w", encoding="utf-8") as fh:
        fh.write(header)
        for point in points:
            if point.summary is None:
                fh.write(f"{point.x:g}\t0\t\t\t\t\t\t\t\t{point.error or ''}\n")
                continue
            s = point.summary
            trial_f1s = ",".join(f"{m.f1:.6f}" for m in s.trials)
            fh.write(
                f"{point.x:g}\t{len(s.trials)}\t{s.mean_precision:.6f}\t{s.std_precision:.6f}"
                f"\t{s.mean_recall:.6f}\t{s.std_recall:.6f}\t{s.mean_f1:.6f}\t{s.std_f1:.6f}"
                f"\t{trial_f1s}\t\n"
            )


def write_metrics(metrics: Metrics, path: Path | str, extra: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    record = metrics.as_dict()
    if extra:
        record.update(extra)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_metrics_tsv(metrics: Metrics, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        "tp\tfp\tfn\tprecision\trecall\tf1\n"
        f"{metrics.tp}\t{metrics.fp}\t{metrics.fn}"
        f"\t{metrics.precision:.6f}\t{metrics.recall:.6f}\t{metrics.f1:.6f}\n",
        encoding="utf-8",
    )


# -- prediction files ----------------------------------------------------------------

def load_ner_predictions(path: Path | str, expected: int) -> list[list[Tag]]:
    """Read ``{"id": ..., "tags": [...]}`` JSONL, index-aligned to the gold set."""
    rows: dict[int, list[Tag]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        rows[int(record["id"])] = [Tag.parse(t) for t in record["tags"]]
    missing = [i for i in range(expected) if i not in rows]
    if missing:
        raise ShapeMismatch(f"prediction file lacks ids {missing[:5]} (of {expected})")
    return [rows[i] for i in range(expected)]


def load_re_predictions(path: Path | str, expected: int) -> list[str]:
    rows: dict[int, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        label = record["label"]
        if label not in (YES, NO):
            raise LengthMismatch(f"prediction id {record['id']}: label {label!r} is not Yes/No")
        rows[int(record["id"])] = label
    missing = [i for i in range(expected) if i not in rows]
    if missing:
        raise LengthMismatch(f"prediction file lacks ids {missing[:5]} (of {expected})")
    return [rows[i] for i in range(expected)]
