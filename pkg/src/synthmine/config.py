"""Run configuration, content digests, and run-directory bookkeeping.

Config files are INI-style sections of ``key: value`` lines. Every CLI
run materializes a fresh directory named after the subcommand and the
config hash; reruns append a sequence number instead of overwriting, and
a manifest in each directory records the config hash, input digests, and
output paths.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, RunLocked
from .gate import GateConfig
from .gateway import Gateway, HttpProvider, MockProvider, ProviderConfig
from .generate import GenerationConfig


@dataclass
class ProviderSettings:
    kind: str = "mock"
    model: str = "mock-chat"
    endpoint_url: str = ""
    api_key_env: str = "SYNTHMINE_API_KEY"
    max_retries: int = 5
    backoff_base_ms: int = 250
    rate_limit_per_min: int = 600
    mock_seed: int = 0
    corruption_rate: float = 0.0
    timeout_s: float = 60.0


@dataclass
class ForgeSettings:
    task_description: str = ""
    round_budget: int = 3
    samples_per_candidate: int = 10
    preview_seeds: int = 5


@dataclass
class SweepSettings:
    kind: str = "ner-sentences"
    grid: list[float] = field(default_factory=list)
    trials: int = 3
    eval_subset: int = 50


@dataclass
class BenchSettings:
    subset: int = 50
    split: str = "test"


@dataclass
class RunConfig:
    manifest_path: Path | None = None
    task: str = "NER"
    rng_seed: int = 0
    out_dir: Path = Path("runs")
    workers: int = 1
    template_log: str = ""  # refinement log whose final prompt replaces the built-in
    provider: ProviderSettings = field(default_factory=ProviderSettings)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    gate: GateConfig = field(default_factory=GateConfig)
    forge: ForgeSettings = field(default_factory=ForgeSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    bench: BenchSettings = field(default_factory=BenchSettings)
    config_text: str = ""

    def config_hash(self) -> str:
        return hashlib.sha256(self.config_text.encode("utf-8")).hexdigest()


def _get(parser: configparser.ConfigParser, section: str, key: str, fallback):
    if not parser.has_option(section, key):
        return fallback
    raw = parser.get(section, key)
    if isinstance(fallback, bool):
        return parser.getboolean(section, key)
    if isinstance(fallback, int):
        return int(raw)
    if isinstance(fallback, float):
        return float(raw)
    return raw


def load_config(path: Path | str) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    cfg = RunConfig(config_text=text)
    if parser.has_section("run"):
        if parser.has_option("run", "manifest"):
            cfg.manifest_path = (path.parent / parser.get("run", "manifest")).resolve()
        cfg.task = _get(parser, "run", "task", cfg.task).upper()
        cfg.rng_seed = _get(parser, "run", "rng_seed", cfg.rng_seed)
        cfg.workers = _get(parser, "run", "workers", cfg.workers)
        out_dir = _get(parser, "run", "out_dir", str(cfg.out_dir))
        cfg.out_dir = (path.parent / out_dir).resolve()
    if parser.has_section("provider"):
        p = cfg.provider
        p.kind = _get(parser, "provider", "kind", p.kind)
        p.model = _get(parser, "provider", "model", p.model)
        p.endpoint_url = _get(parser, "provider", "endpoint_url", p.endpoint_url)
        p.api_key_env = _get(parser, "provider", "api_key_env", p.api_key_env)
        p.max_retries = _get(parser, "provider", "max_retries", p.max_retries)
        p.backoff_base_ms = _get(parser, "provider", "backoff_base_ms", p.backoff_base_ms)
        p.rate_limit_per_min = _get(parser, "provider", "rate_limit_per_min", p.rate_limit_per_min)
        p.mock_seed = _get(parser, "provider", "mock_seed", p.mock_seed)
        p.corruption_rate = _get(parser, "provider", "corruption_rate", p.corruption_rate)
        p.timeout_s = _get(parser, "provider", "timeout_s", p.timeout_s)
    if parser.has_section("generation"):
        g = cfg.generation
        g.n_per_entity = _get(parser, "generation", "n_per_entity", g.n_per_entity)
        g.pos_per_round = _get(parser, "generation", "pos_per_round", g.pos_per_round)
        g.neg_per_round = _get(parser, "generation", "neg_per_round", g.neg_per_round)
        g.target_size = _get(parser, "generation", "target_size", g.target_size)
        g.max_rounds = _get(parser, "generation", "max_rounds", g.max_rounds)
        g.max_entities = _get(parser, "generation", "max_entities", g.max_entities)
        g.pool_per_label = _get(parser, "generation", "pool_per_label", g.pool_per_label)
        if parser.has_option("generation", "template_log"):
            cfg.template_log = str(
                (path.parent / parser.get("generation", "template_log")).resolve()
            )
    cfg.generation.rng_seed = cfg.rng_seed
    if parser.has_section("gate"):
        gt = cfg.gate
        gt.jaccard_threshold = _get(parser, "gate", "jaccard_threshold", gt.jaccard_threshold)
        gt.shingle_size = _get(parser, "gate", "shingle_size", gt.shingle_size)
        gt.min_tokens = _get(parser, "gate", "min_tokens", gt.min_tokens)
        gt.max_tokens = _get(parser, "gate", "max_tokens", gt.max_tokens)
    if parser.has_section("forge"):
        f = cfg.forge
        f.task_description = _get(parser, "forge", "task_description", f.task_description)
        f.round_budget = _get(parser, "forge", "round_budget", f.round_budget)
        f.samples_per_candidate = _get(
            parser, "forge", "samples_per_candidate", f.samples_per_candidate
        )
        f.preview_seeds = _get(parser, "forge", "preview_seeds", f.preview_seeds)
    if parser.has_section("sweep"):
        s = cfg.sweep
        s.kind = _get(parser, "sweep", "kind", s.kind)
        s.trials = _get(parser, "sweep", "trials", s.trials)
        s.eval_subset = _get(parser, "sweep", "eval_subset", s.eval_subset)
        if parser.has_option("sweep", "grid"):
            s.grid = [float(v) for v in parser.get("sweep", "grid").split(",") if v.strip()]
    if parser.has_section("bench"):
        b = cfg.bench
        b.subset = _get(parser, "bench", "subset", b.subset)
        b.split = _get(parser, "bench", "split", b.split)

    if cfg.provider.kind not in ("mock", "real"):
        raise ConfigError(f"provider kind must be mock or real, got {cfg.provider.kind!r}")
    if cfg.provider.kind == "real" and not cfg.provider.api_key_env:
        raise ConfigError("provider kind 'real' requires api_key_env")
    if cfg.provider.kind == "real" and not cfg.provider.endpoint_url:
        raise ConfigError("provider kind 'real' requires endpoint_url")
    if cfg.manifest_path is not None and not cfg.manifest_path.exists():
        raise ConfigError(f"dataset manifest not found: {cfg.manifest_path}")
    return cfg


def build_gateway(cfg: RunConfig, run_dir: Path) -> Gateway:
    if cfg.provider.kind == "mock":
        provider = MockProvider(
            seed=cfg.provider.mock_seed, corruption_rate=cfg.provider.corruption_rate
        )
    else:
        provider = HttpProvider(
            ProviderConfig(
                endpoint_url=cfg.provider.endpoint_url,
                api_key_env=cfg.provider.api_key_env,
                max_retries=cfg.provider.max_retries,
                backoff_base_ms=cfg.provider.backoff_base_ms,
                rate_limit_per_min=cfg.provider.rate_limit_per_min,
                timeout_s=cfg.provider.timeout_s,
            )
        )
    # the token bucket protects external APIs; the local mock needs none
    rate_limit = cfg.provider.rate_limit_per_min if cfg.provider.kind == "real" else None
    return Gateway(
        provider,
        cache_dir=run_dir / "cache",
        transcript_path=run_dir / "transcript.jsonl",
        rate_limit_per_min=rate_limit,
        model=cfg.provider.model,
    )


# -- run directories ----------------------------------------------------------------

def file_digest(path: Path | str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return "sha256:" + digest.hexdigest()


def new_run_dir(out_dir: Path, subcommand: str, config_hash: str) -> Path:
    """Create runs/<subcommand>-<hash12>-<seq>; never reuses an existing dir."""
    base = out_dir / "runs"
    base.mkdir(parents=True, exist_ok=True)
    for seq in range(1, 100000):
        candidate = base / f"{subcommand}-{config_hash[:12]}-{seq:03d}"
        try:
            candidate.mkdir()
        except FileExistsError:
            continue
        return candidate
    raise ConfigError("run directory space exhausted")


class RunLock:
    """One run at a time per run directory, via an O_EXCL lock file."""

    def __init__(self, run_dir: Path):
        self.path = run_dir / ".lock"
        self._fd: int | None = None

    def __enter__(self) -> "RunLock":
        try:
            self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RunLocked(f"run directory is locked: {self.path}") from None
        os.write(self._fd, str(os.getpid()).encode())
        return self

    def __exit__(self, *exc_info) -> None:
        if self._fd is not None:
            os.close(self._fd)
            self.path.unlink(missing_ok=True)


def write_run_manifest(
    run_dir: Path,
    subcommand: str,
    config_hash: str,
    inputs: dict[str, str],
    outputs: list[Path],
) -> Path:
    manifest = {
        "subcommand": subcommand,
        "config_hash": config_hash,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "inputs": inputs,
        "outputs": [str(p.relative_to(run_dir)) for p in outputs],
    }
    path = run_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path
