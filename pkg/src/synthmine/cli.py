"""Command-line entry points for the whole pipeline.

Subcommands: ingest, forge, gen, bench, score, curve, shift, review.
Each run writes into a fresh directory under <out_dir>/runs/ together
with a manifest of the config hash, input digests, and output paths.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import baselines, bench, gate, generate, score, shift
from .config import (
    RunConfig,
    RunLock,
    build_gateway,
    file_digest,
    load_config,
    new_run_dir,
    write_run_manifest,
)
from .corpus import (
    NER,
    RE,
    Dataset,
    DatasetManifest,
    TaggedSentence,
    REExample,
    Tag,
    load_split,
    parse_conll,
    parse_manifest,
    parse_re_file,
    serialize_conll,
    serialize_re,
    spans_from_tags,
    tokenize,
)
from .errors import ConfigError, SynthmineError
from .forge import RefinementSession
from .gateway import Gateway, MockProvider
from .generate import GenerationConfig, SeedPool, seed_pool_from_dataset
from .prompts import (
    NER_GEN,
    RE_GEN,
    NER_GEN_TEMPLATE,
    RE_GEN_TEMPLATE,
    PromptTemplate,
    replay_events,
    zeroshot_template_for,
)
from .server import PENDING_FILE, ReviewState, make_server


def _load_manifest(cfg: RunConfig) -> DatasetManifest:
    if cfg.manifest_path is None:
        raise ConfigError("this subcommand needs a dataset manifest ([run] manifest = ...)")
    return parse_manifest(cfg.manifest_path)


def _generation_template(cfg: RunConfig, task: str) -> PromptTemplate:
    if cfg.template_log:
        log = replay_events(Path(cfg.template_log))
        if log.final_prompt is None:
            raise ConfigError(f"refinement log {cfg.template_log} has no final prompt yet")
        return log.final_prompt
    return NER_GEN_TEMPLATE if task == NER else RE_GEN_TEMPLATE


def _input_digests(manifest: DatasetManifest) -> dict[str, str]:
    return {
        f"{split}:{path.name}": file_digest(path)
        for split, path in sorted(manifest.paths.items())
        if path.exists()
    }


# -- ingest ---------------------------------------------------------------------

def cmd_ingest(cfg: RunConfig, args: argparse.Namespace) -> int:
    manifest = _load_manifest(cfg)
    print(f"dataset {manifest.name} task={manifest.task}")
    for split in sorted(manifest.paths):
        dataset = load_split(manifest, split)
        if manifest.task == NER:
            spans = sum(len(spans_from_tags(s)) for s in dataset.items)
            types = sorted({sp.entity_type for s in dataset.items for sp in spans_from_tags(s)})
            print(f"  {split}: {len(dataset)} sentences, {spans} entity spans, types={types}")
            if manifest.entity_types:
                unexpected = sorted(set(types) - set(manifest.entity_types))
                if unexpected:
                    print(f"  {split}: WARNING: types outside the manifest: {unexpected}")
        else:
            yes = sum(1 for ex in dataset.items if ex.label == "Yes")
            print(f"  {split}: {len(dataset)} examples, {yes} Yes / {len(dataset) - yes} No")
    return 0


# -- gen ----------------------------------------------------------------------------

def _pending_record(sample: generate.CandidateSample, task: str) -> dict:
    record: dict = {
        "sample_id": sample.sample_id,
        "task": task,
        "text": sample.text(),
        "prompt_id": sample.prompt_id,
        "seed_ref": sample.seed_ref,
    }
    if isinstance(sample.payload, TaggedSentence):
        record["tags"] = [str(t) for t in sample.payload.tags]
        record["spans"] = [
            {"start": s.start, "end": s.end, "entity_type": s.entity_type}
            for s in spans_from_tags(sample.payload)
        ]
    elif isinstance(sample.payload, REExample):
        record["label"] = sample.payload.label
    return record


def cmd_gen(cfg: RunConfig, args: argparse.Namespace) -> int:
    manifest = _load_manifest(cfg)
    task = manifest.task
    run_dir = new_run_dir(cfg.out_dir, "gen", cfg.config_hash())
    with RunLock(run_dir):
        gateway = build_gateway(cfg, run_dir)
        template = _generation_template(cfg, task)
        gen_cfg = cfg.generation

        if task == NER:
            train = load_split(manifest, "train")
            entities = generate.extract_seed_entities(train)
            if gen_cfg.max_entities:
                entities = entities[: gen_cfg.max_entities]
            samples = generate.run_ner_generation(
                entities, template, gen_cfg, gateway, workers=cfg.workers
            )
        else:
            pool_split = "seed-pool" if "seed-pool" in manifest.paths else "train"
            pool_dataset = load_split(manifest, pool_split)
            if gen_cfg.pool_per_label:
                pool = generate.curated_seed_pool(pool_dataset, gen_cfg.pool_per_label)
            else:
                pool = seed_pool_from_dataset(pool_dataset)
            result = generate.run_re_generation(pool, template, gen_cfg, gateway)
            samples = result.samples
            print(f"generation rounds used: {result.rounds_used}")

        generate.assign_sample_ids(samples, task.lower())
        accepted = [s for s in samples if s.accepted]
        kept, quarantined, report = gate.run_gate(
            accepted, task, cfg.gate, manifest.placeholders
        )
        for sample, reason in quarantined:
            sample.payload = None
            sample.reject_reason = reason

        if task == NER:
            corpus_path = run_dir / "synthetic.conll"
            dataset = Dataset(manifest.name, NER, [s.payload for s in kept], split="train")
            corpus_path.write_text(serialize_conll(dataset), encoding="utf-8")
        else:
            corpus_path = run_dir / "synthetic.tsv"
            dataset = Dataset(manifest.name, RE, [s.payload for s in kept], split="train")
            corpus_path.write_text(serialize_re(dataset), encoding="utf-8")

        provenance_path = run_dir / "provenance.jsonl"
        generate.write_provenance(samples, provenance_path)
        quarantine_path = run_dir / "quarantine.jsonl"
        gate.write_quarantine(quarantined, quarantine_path)
        report_path = run_dir / "gate_report.jsonl"
        gate.write_report(report, report_path)
        pending_path = run_dir / PENDING_FILE
        with pending_path.open("w", encoding="utf-8") as fh:
            for sample in kept:
                fh.write(json.dumps(_pending_record(sample, task), ensure_ascii=False) + "\n")

        write_run_manifest(
            run_dir,
            "gen",
            cfg.config_hash(),
            _input_digests(manifest),
            [corpus_path, provenance_path, quarantine_path, report_path, pending_path],
        )
    print(report.table())
    print(f"kept corpus: {corpus_path}")
    print(f"run dir: {run_dir}")
    return 0


# -- forge ------------------------------------------------------------------------

def _forge_session(cfg: RunConfig, run_dir: Path) -> RefinementSession:
    manifest = _load_manifest(cfg)
    gateway = build_gateway(cfg, run_dir)
    task = NER_GEN if manifest.task == NER else RE_GEN
    ner_seeds: list = []
    re_seeds: list = []
    if manifest.task == NER:
        train = load_split(manifest, "train")
        ner_seeds = generate.extract_seed_entities(train)[: cfg.forge.preview_seeds]
    else:
        pool_split = "seed-pool" if "seed-pool" in manifest.paths else "train"
        pool = seed_pool_from_dataset(load_split(manifest, pool_split))
        pairs = zip(pool.re_positives, pool.re_negatives)
        for pos, neg in pairs:
            re_seeds.extend((pos, neg))
    return RefinementSession(
        gateway,
        task,
        run_dir / "refinement_log.jsonl",
        budget=cfg.forge.round_budget,
        samples_per_candidate=cfg.forge.samples_per_candidate,
        ner_seeds=ner_seeds,
        re_seeds=re_seeds,
        rng_seed=cfg.rng_seed,
    )


def cmd_forge(cfg: RunConfig, args: argparse.Namespace) -> int:
    manifest = _load_manifest(cfg)
    if args.run:
        run_dir = Path(args.run)
        if not run_dir.exists():
            raise ConfigError(f"run directory not found: {run_dir}")
    else:
        run_dir = new_run_dir(cfg.out_dir, "forge", cfg.config_hash())
    session = _forge_session(cfg, run_dir)
    if not session.started:
        description = cfg.forge.task_description or (
            "named entity recognition sentences for the biomedical domain"
            if manifest.task == NER
            else "gene-disease relation extraction examples"
        )
        session.start(description)
        write_run_manifest(
            run_dir,
            "forge",
            cfg.config_hash(),
            _input_digests(manifest),
            [run_dir / "refinement_log.jsonl"],
        )
    if args.select:
        session.select(args.select, args.rationale or "")
    status = session.status()
    print(f"run dir: {run_dir}")
    if session.finished:
        assert session.log.final_prompt is not None
        print("status: final")
        print(f"final prompt: {session.log.final_prompt.body}")
    else:
        state = session.log.current
        print(f"status: {status}")
        if state is not None:
            print(f"round {state.round_index} of {session.log.budget}")
            for candidate in state.candidates:
                preview = candidate.body[:100].replace("\n", " ")
                print(f"  {candidate.id}: {preview}")
        print("resume with: synthmine forge --config <cfg> --run "
              f"{run_dir} --select <candidate-id>")
    return 0


# -- bench ---------------------------------------------------------------------------

def cmd_bench(cfg: RunConfig, args: argparse.Namespace) -> int:
    manifest = _load_manifest(cfg)
    run_dir = new_run_dir(cfg.out_dir, "bench", cfg.config_hash())
    with RunLock(run_dir):
        gateway = build_gateway(cfg, run_dir)
        dataset = load_split(manifest, cfg.bench.split)
        entity_type = manifest.entity_types[0] if manifest.entity_types else None
        template = zeroshot_template_for(manifest.task, entity_type)
        run = bench.run_benchmark(
            dataset,
            template,
            gateway,
            subset=cfg.bench.subset,
            known_types=manifest.entity_types or None,
        )
        bench_path = run_dir / "benchrun.jsonl"
        bench.write_benchrun(run, bench_path)

        subset_items = dataset.items[: cfg.bench.subset]
        if manifest.task == NER:
            metrics = score.span_prf(subset_items, run.predicted_tags())
            extra = {"items": len(subset_items)}
        else:
            gold = [ex.label for ex in subset_items]
            metrics = score.cls_prf(gold, run.predicted_labels())
            extra = {"items": len(subset_items), "invalid_rate": run.invalid_rate}
        metrics_path = run_dir / "metrics.json"
        score.write_metrics(metrics, metrics_path, extra)
        metrics_tsv = run_dir / "metrics.tsv"
        score.write_metrics_tsv(metrics, metrics_tsv)
        write_run_manifest(
            run_dir, "bench", cfg.config_hash(), _input_digests(manifest),
            [bench_path, metrics_path, metrics_tsv],
        )
    print(
        f"P={metrics.precision:.4f} R={metrics.recall:.4f} F={metrics.f1:.4f}"
        + (f" invalid_rate={run.invalid_rate:.4f}" if manifest.task == RE else "")
    )
    print(f"run dir: {run_dir}")
    return 0


# -- score ---------------------------------------------------------------------------

def cmd_score(cfg: RunConfig, args: argparse.Namespace) -> int:
    manifest = _load_manifest(cfg)
    gold = load_split(manifest, args.split)
    pred_path = Path(args.pred)
    if not pred_path.exists():
        raise ConfigError(f"prediction file not found: {pred_path}")
    run_dir = new_run_dir(cfg.out_dir, "score", cfg.config_hash())
    with RunLock(run_dir):
        if manifest.task == NER:
            preds = score.load_ner_predictions(pred_path, len(gold.items))
            metrics = score.span_prf(gold.items, preds)
        else:
            preds = score.load_re_predictions(pred_path, len(gold.items))
            metrics = score.cls_prf([ex.label for ex in gold.items], preds)
        metrics_path = run_dir / "metrics.json"
        score.write_metrics(metrics, metrics_path, {"pred_file": str(pred_path)})
        metrics_tsv = run_dir / "metrics.tsv"
        score.write_metrics_tsv(metrics, metrics_tsv)
        write_run_manifest(
            run_dir,
            "score",
            cfg.config_hash(),
            {**_input_digests(manifest), f"pred:{pred_path.name}": file_digest(pred_path)},
            [metrics_path, metrics_tsv],
        )
    print(f"P={metrics.precision:.4f} R={metrics.recall:.4f} F={metrics.f1:.4f}")
    print(f"run dir: {run_dir}")
    return 0


# -- curve ---------------------------------------------------------------------------

_DEFAULT_GRIDS = {
    "ner-sentences": score.NER_SENTENCE_GRID,
    "ner-seed-ratio": score.SEED_RATIO_GRID,
    "re-size": score.RE_SIZE_GRID,
    "re-pool": score.RE_POOL_GRID,
}


def _trial_gateway(cfg: RunConfig, run_dir: Path, trial: int) -> Gateway:
    if cfg.provider.kind == "mock":
        provider = MockProvider(
            seed=cfg.provider.mock_seed + trial,
            corruption_rate=cfg.provider.corruption_rate,
        )
        return Gateway(
            provider,
            cache_dir=run_dir / "cache" / f"trial-{trial}",
            transcript_path=run_dir / "transcript.jsonl",
            model=cfg.provider.model,
        )
    return build_gateway(cfg, run_dir)


def _ner_curve_hook(cfg: RunConfig, manifest: DatasetManifest, run_dir: Path, kind: str):
    train = load_split(manifest, "train")
    all_entities = generate.extract_seed_entities(train)
    if cfg.generation.max_entities:
        all_entities = all_entities[: cfg.generation.max_entities]
    gold_eval = load_split(manifest, "test").items[: cfg.sweep.eval_subset]
    template = _generation_template(cfg, NER)

    def hook(x: float, trial: int) -> score.Metrics:
        gateway = _trial_gateway(cfg, run_dir, trial)
        gen_cfg = GenerationConfig(
            n_per_entity=int(x) if kind == "ner-sentences" else cfg.generation.n_per_entity,
            rng_seed=cfg.rng_seed + trial,
        )
        entities = all_entities
        if kind == "ner-seed-ratio":
            count = max(1, round(len(all_entities) * x / 100.0))
            entities = all_entities[:count]
        samples = generate.run_ner_generation(entities, template, gen_cfg, gateway)
        accepted = [s for s in samples if s.accepted]
        kept, _, _ = gate.run_gate(accepted, NER, cfg.gate, manifest.placeholders)
        gazetteer = baselines.train_gazetteer([s.payload for s in kept])
        preds = [baselines.gazetteer_tags(gazetteer, sent.tokens) for sent in gold_eval]
        return score.span_prf(gold_eval, preds)

    return hook


def _re_curve_hook(cfg: RunConfig, manifest: DatasetManifest, run_dir: Path, kind: str):
    pool_split = "seed-pool" if "seed-pool" in manifest.paths else "train"
    full_pool = seed_pool_from_dataset(load_split(manifest, pool_split))
    gold_eval = load_split(manifest, "test").items[: cfg.sweep.eval_subset]
    gold_labels = [ex.label for ex in gold_eval]
    template = _generation_template(cfg, RE)

    def hook(x: float, trial: int) -> score.Metrics:
        gateway = _trial_gateway(cfg, run_dir, trial)
        gen_cfg = GenerationConfig(
            pos_per_round=cfg.generation.pos_per_round,
            neg_per_round=cfg.generation.neg_per_round,
            target_size=int(x) if kind == "re-size" else cfg.generation.target_size,
            rng_seed=cfg.rng_seed + trial,
        )
        if kind == "re-pool" and int(x) == 0:
            result = generate.run_re_generation_unseeded(template, gen_cfg, gateway)
        else:
            pool = full_pool
            if kind == "re-pool":
                half = max(1, int(x) // 2)
                pool = SeedPool(
                    task=RE,
                    re_positives=full_pool.re_positives[:half],
                    re_negatives=full_pool.re_negatives[:half],
                )
            result = generate.run_re_generation(pool, template, gen_cfg, gateway)
        accepted = [s for s in result.samples if s.accepted]
        kept, _, _ = gate.run_gate(accepted, RE, cfg.gate, manifest.placeholders)
        train_examples = [s.payload for s in kept]
        preds = [
            baselines.nearest_label(train_examples, ex.sentence) if train_examples else "No"
            for ex in gold_eval
        ]
        return score.cls_prf(gold_labels, preds)

    return hook


def cmd_curve(cfg: RunConfig, args: argparse.Namespace) -> int:
    manifest = _load_manifest(cfg)
    kind = cfg.sweep.kind
    if kind not in _DEFAULT_GRIDS:
        raise ConfigError(f"sweep kind must be one of {sorted(_DEFAULT_GRIDS)}, got {kind!r}")
    grid = cfg.sweep.grid or list(_DEFAULT_GRIDS[kind])
    run_dir = new_run_dir(cfg.out_dir, "curve", cfg.config_hash())
    with RunLock(run_dir):
        if kind.startswith("ner"):
            hook = _ner_curve_hook(cfg, manifest, run_dir, kind)
        else:
            hook = _re_curve_hook(cfg, manifest, run_dir, kind)
        points = score.learning_curve(grid, hook, trials=cfg.sweep.trials)
        curve_path = run_dir / "curve.tsv"
        score.write_curve_tsv(points, curve_path)
        write_run_manifest(
            run_dir, "curve", cfg.config_hash(), _input_digests(manifest), [curve_path]
        )
    for point in points:
        if point.summary is None:
            print(f"x={point.x:g}\tERROR\t{point.error}")
        else:
            print(f"x={point.x:g}\tF={point.summary.mean_f1:.4f}±{point.summary.std_f1:.4f}")
    print(f"run dir: {run_dir}")
    return 0


# -- shift ---------------------------------------------------------------------------

def _sentences_from_file(path: Path, file_format: str) -> list[str]:
    data = path.read_bytes()
    if file_format == "conll":
        dataset = parse_conll(data, mode="lenient")
        return [s.text() for s in dataset.items]
    if file_format == "tsv":
        dataset = parse_re_file(data, placeholders=())
        return [ex.sentence for ex in dataset.items]
    return [
        line.strip()
        for line in data.decode("utf-8").splitlines()
        if line.strip()
    ]


def cmd_shift(cfg: RunConfig, args: argparse.Namespace) -> int:
    original_path = Path(args.original)
    synthetic_path = Path(args.synthetic)
    for path in (original_path, synthetic_path):
        if not path.exists():
            raise ConfigError(f"corpus file not found: {path}")
    file_format = args.format
    original = _sentences_from_file(original_path, file_format)
    synthetic = _sentences_from_file(synthetic_path, file_format)

    run_dir = new_run_dir(cfg.out_dir, "shift", cfg.config_hash())
    with RunLock(run_dir):
        report = {
            "original_sentences": len(original),
            "synthetic_sentences": len(synthetic),
            "js_divergence_unigram": shift.ngram_js_divergence(original, synthetic, 1),
            "js_divergence_bigram": shift.ngram_js_divergence(original, synthetic, 2),
            "vocab_overlap": shift.vocab_overlap(original, synthetic),
        }
        exact = shift_exact_match_rate(original, synthetic)
        report["exact_match_rate"] = exact

        if args.vectors_original and args.vectors_synthetic:
            ids_a, vecs_a = shift.read_vector_file(args.vectors_original)
            ids_b, vecs_b = shift.read_vector_file(args.vectors_synthetic)
            projection = shift.pca_project(
                vecs_a + vecs_b,
                ids=ids_a + ids_b,
                sources=["original"] * len(ids_a) + ["synthetic"] * len(ids_b),
            )
        else:
            projection = shift.project_corpora(original, synthetic)
        report["projection_degenerate"] = projection.degenerate

        scatter_path = run_dir / "scatter.tsv"
        shift.export_scatter(projection, scatter_path)
        report_path = run_dir / "shift_report.json"
        report_path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        write_run_manifest(
            run_dir,
            "shift",
            cfg.config_hash(),
            {
                f"original:{original_path.name}": file_digest(original_path),
                f"synthetic:{synthetic_path.name}": file_digest(synthetic_path),
            },
            [scatter_path, report_path],
        )
    for key, value in report.items():
        print(f"{key}: {value}")
    print(f"run dir: {run_dir}")
    return 0


def shift_exact_match_rate(original: list[str], synthetic: list[str]) -> float:
    """Share of synthetic sentences that duplicate an original verbatim
    after normalization; a cheap memorization check."""
    if not synthetic:
        return 0.0
    seen = {gate.normalize(s) for s in original}
    hits = sum(1 for s in synthetic if gate.normalize(s) in seen)
    return hits / len(synthetic)


# -- review ---------------------------------------------------------------------------

def cmd_review(cfg: RunConfig | None, args: argparse.Namespace) -> int:
    run_dir = Path(args.run)
    if not run_dir.exists():
        raise ConfigError(f"run directory not found: {run_dir}")
    if args.review_action == "serve":
        session = None
        if (run_dir / "refinement_log.jsonl").exists():
            if cfg is None:
                raise ConfigError("serving a forge run needs --config to rebuild the session")
            session = _forge_session(cfg, run_dir)
        state = ReviewState(run_dir, session)
        ui_dir = Path(args.ui_dir) if args.ui_dir else None
        server = make_server(state, port=args.port, ui_dir=ui_dir)
        host, port = server.server_address[0], server.server_address[1]
        print(f"review server listening on http://{host}:{port}", flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
        return 0
    if args.review_action == "apply":
        return _review_apply(run_dir)
    raise ConfigError(f"unknown review action {args.review_action!r}")


def _review_apply(run_dir: Path) -> int:
    pending_path = run_dir / PENDING_FILE
    if not pending_path.exists():
        raise ConfigError(f"no {PENDING_FILE} in {run_dir}")
    decisions: dict[str, str] = {}
    decisions_path = run_dir / "decisions.jsonl"
    if decisions_path.exists():
        for line in decisions_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                record = json.loads(line)
                decisions[record["sample_id"]] = record["decision"]
    kept_ner: list[TaggedSentence] = []
    kept_re: list[REExample] = []
    task = None
    for line in pending_path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        task = record["task"]
        if decisions.get(record["sample_id"]) == "reject":
            continue
        if task == NER:
            tokens = tuple(tokenize(record["text"]))
            tags = tuple(Tag.parse(t) for t in record["tags"])
            kept_ner.append(TaggedSentence(tokens, tags))
        else:
            kept_re.append(
                REExample(record["text"], record["label"], source="synthetic")
            )
    if task == NER:
        out_path = run_dir / "reviewed.conll"
        out_path.write_text(
            serialize_conll(Dataset("reviewed", NER, kept_ner)), encoding="utf-8"
        )
    else:
        out_path = run_dir / "reviewed.tsv"
        out_path.write_text(serialize_re(Dataset("reviewed", RE, kept_re)), encoding="utf-8")
    print(f"reviewed corpus: {out_path} ({len(kept_ner) + len(kept_re)} samples)")
    return 0


# -- argument parsing --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthmine",
        description="Synthetic biomedical NER/RE corpus generation and evaluation pipeline",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name: str, help_text: str, needs_config: bool = True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=needs_config, help="run config file")
        return p

    add("ingest", "parse and validate the datasets in the manifest")

    forge_p = add("forge", "run prompt-refinement rounds (pauses for selection)")
    forge_p.add_argument("--run", help="existing forge run directory to resume")
    forge_p.add_argument("--select", help="candidate id to select for the open round")
    forge_p.add_argument("--rationale", help="free-text reason for the selection")

    add("gen", "generate synthetic data, gate it, and export the corpus")
    add("bench", "zero-shot benchmark over the test split")

    score_p = add("score", "score a prediction file against a gold split")
    score_p.add_argument("--pred", required=True, help="prediction JSONL file")
    score_p.add_argument("--split", default="test", help="gold split to score against")

    add("curve", "learning-curve sweep driven by the configured eval hook")

    shift_p = add("shift", "divergence statistics and projection scatter")
    shift_p.add_argument("--original", required=True, help="original corpus file")
    shift_p.add_argument("--synthetic", required=True, help="synthetic corpus file")
    shift_p.add_argument(
        "--format", default="conll", choices=("conll", "tsv", "text"),
        help="corpus file format",
    )
    shift_p.add_argument("--vectors-original", help="external embedding file for the original corpus")
    shift_p.add_argument("--vectors-synthetic", help="external embedding file for the synthetic corpus")

    review_p = sub.add_parser("review", help="serve or apply human review decisions")
    review_sub = review_p.add_subparsers(dest="review_action", required=True)
    serve_p = review_sub.add_parser("serve", help="start the loopback review server")
    serve_p.add_argument("--run", required=True, help="run directory to serve")
    serve_p.add_argument("--config", help="config file (needed for forge runs)")
    serve_p.add_argument("--port", type=int, default=0, help="port (0 = random)")
    serve_p.add_argument("--ui-dir", help="directory with built review UI assets")
    apply_p = review_sub.add_parser("apply", help="apply accept/reject decisions to the corpus")
    apply_p.add_argument("--run", required=True, help="run directory with decisions")

    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "forge": cmd_forge,
    "gen": cmd_gen,
    "bench": cmd_bench,
    "score": cmd_score,
    "curve": cmd_curve,
    "shift": cmd_shift,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.subcommand == "review":
            cfg = load_config(args.config) if getattr(args, "config", None) else None
            return cmd_review(cfg, args)
        cfg = load_config(args.config)
        return _COMMANDS[args.subcommand](cfg, args)
    except SynthmineError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
