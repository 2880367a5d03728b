"""Uniform chat-completion access: HTTP provider, deterministic mock, cache.

Every completion goes through :class:`Gateway`, which adds a disk cache
keyed by a canonical request digest, an append-only JSONL transcript of
all attempts, retry with exponential backoff for the HTTP provider, and
a token-bucket rate limiter shared across callers.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import MissingApiKey, ProviderError, RateLimited, TransportError

RETRYABLE_STATUSES = frozenset({408, 429, 500, 502, 503, 504})

GENERATION_TEMPERATURE = 0.7
TASK_TEMPERATURE = 0.0


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"bad message role {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_tokens: int = 2048

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if not any(m.role == "user" for m in self.messages):
            raise ValueError("request needs at least one user message")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature out of range: {self.temperature}")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    def user_text(self) -> str:
        return "\n".join(m.content for m in self.messages if m.role == "user")


@dataclass
class ChatResponse:
    content: str
    provider: str
    cached: bool = False
    latency_ms: int = 0


@dataclass
class ProviderConfig:
    endpoint_url: str = ""
    api_key_env: str = "SYNTHMINE_API_KEY"
    max_retries: int = 5
    backoff_base_ms: int = 250
    rate_limit_per_min: int = 600
    timeout_s: float = 60.0


def user_request(prompt: str, model: str, temperature: float, max_tokens: int = 2048) -> ChatRequest:
    return ChatRequest(
        model=model,
        messages=(ChatMessage("user", prompt),),
        temperature=temperature,
        max_tokens=max_tokens,
    )


def cache_key(request: ChatRequest) -> str:
    """SHA-256 digest of the canonical request serialization.

    Message order is significant, as is every byte of content.
    """
    canonical = json.dumps(
        {
            "model": request.model,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# -- deterministic mock provider ----------------------------------------------

_NER_GEN_SEED_RE = re.compile(r'containing the words\s+"?([^".\n]+)"?')
_NER_GEN_COUNT_RE = re.compile(r"\b(\d+)\s+(?:[a-z]+\s+)?sentences\b", re.IGNORECASE)
_NER_TASK_RE = re.compile(r'do NER task for\s+"(.+?)"', re.DOTALL)
_ENTITY_KIND_RE = re.compile(r"the entity is\s+([A-Za-z]+)")

_SENTENCE_PREFIXES = (
    "",
    "In a retrospective cohort analysis, ",
    "According to recent clinical findings, ",
    "Across multiple independent studies, ",
    "In the present investigation, ",
    "Consistent with earlier reports, ",
    "Following adjustment for confounders, ",
    "Within the pediatric subgroup, ",
)

_NER_SENTENCE_BODIES = (
    "recent studies indicate that {seed} is associated with elevated inflammatory markers.",
    "patients diagnosed with {seed} were enrolled in a randomized controlled trial.",
    "the prevalence of {seed} increases significantly with age in the studied cohort.",
    "mutations in several candidate genes have been implicated in {seed}.",
    "early detection of {seed} remains a major challenge in routine clinical practice.",
    "treatment outcomes for {seed} improved after the introduction of combination therapy.",
    "a novel biomarker panel was evaluated for the diagnosis of {seed}.",
    "the molecular mechanisms underlying {seed} are not yet fully understood.",
    "genetic screening identified a familial predisposition to {seed}.",
    "management of {seed} requires a coordinated multidisciplinary approach.",
    "serum concentrations were markedly altered in subjects presenting with {seed}.",
    "the incidence of {seed} declined after the screening program was introduced.",
    "histopathological examination confirmed the presence of {seed} in most biopsies.",
    "long-term follow-up of individuals with {seed} revealed heterogeneous outcomes.",
    "animal models of {seed} reproduce the key features of the human condition.",
    "epidemiological data link environmental exposures to the onset of {seed}.",
    "a systematic review summarized therapeutic strategies for {seed}.",
    "quality of life was substantially reduced among participants with {seed}.",
)

_RE_POSITIVE_BODIES = (
    "Our findings demonstrate that @GENE$ expression is significantly upregulated in patients with @DISEASE$.",
    "The @GENE$ polymorphism was strongly associated with susceptibility to @DISEASE$ in the case-control cohort.",
    "Carriers of the @GENE$ risk allele showed a markedly increased likelihood of developing @DISEASE$.",
    "Functional assays confirmed that @GENE$ modulates key pathways involved in @DISEASE$ progression.",
    "Meta-analysis supports a causal contribution of @GENE$ variants to @DISEASE$ risk.",
    "Silencing of @GENE$ attenuated the characteristic phenotype of @DISEASE$ in vitro.",
)

_RE_NEGATIVE_BODIES = (
    "No significant association was observed between @GENE$ and @DISEASE$ in the replication cohort.",
    "The distribution of @GENE$ genotypes did not differ between @DISEASE$ patients and healthy controls.",
    "Our results do not support a role for @GENE$ in the pathogenesis of @DISEASE$.",
    "Adjusted analyses found no evidence linking @GENE$ variants to @DISEASE$ outcomes.",
    "Expression of @GENE$ was comparable across @DISEASE$ cases and controls.",
    "The putative interaction between @GENE$ and @DISEASE$ was not replicated in the larger sample.",
)

_NER_GEN_CANDIDATE_BODIES = (
    'Please act as a sentence generator for the biological domain and provide N sentences '
    'containing the words "[Seed Entities]". These sentences should not include any additional '
    'information or explanation. Generated sentences should mimic the style of PubMed journal '
    'articles, using a variety of sentence structures:',
    'Generate N sentences in the style of PubMed journal articles, each containing the words '
    '"[Seed Entities]". Output only a numbered list of the sentences.',
    'Please produce N sentences containing the words "[Seed Entities]" for a biomedical text '
    'corpus, without any explanation or commentary.',
    'Acting as a biomedical author, write N sentences containing the words "[Seed Entities]", '
    'one sentence per line.',
    'Provide N varied sentences containing the words "[Seed Entities]" that mimic the phrasing '
    'of PubMed abstracts.',
)

_RE_GEN_CANDIDATE_BODIES = (
    'Generate 3 positive and 3 negative examples for the gene-disease relation extraction task. '
    'The target gene is denoted as "@GENE$" and the target disease is denoted as "@DISEASE$". '
    'The label is whether there is a relation between the target gene and disease. If there is '
    'a relation, then the label should be "Yes". If there is no relation, the label should be '
    '"No". Sentences mimic the style of PubMed journal articles with various sentence '
    'structures. [Seed Examples]',
    'Generate 3 positive and 3 negative examples of gene-disease statements, marking the gene '
    'as "@GENE$" and the disease as "@DISEASE$", each formatted as | sentence | label | with '
    'the label Yes or No, following these seed examples: [Seed Examples]',
    'Produce 3 positive and 3 negative examples for gene-disease relation classification. Use '
    '"@GENE$" and "@DISEASE$" as entity markers and emit one | sentence | label | row per '
    'example, in the style of the seeds: [Seed Examples]',
    'Write 3 positive and 3 negative examples describing whether "@GENE$" relates to '
    '"@DISEASE$", labelled Yes or No, as | sentence | label | rows mimicking PubMed prose. '
    '[Seed Examples]',
    'Create 3 positive and 3 negative examples for the gene-disease relation task with '
    '"@GENE$" and "@DISEASE$" placeholders, returned as | sentence | label | rows based on '
    'these seeds: [Seed Examples]',
)


def _rng_for(request: ChatRequest, seed: int) -> random.Random:
    material = f"{seed}:{cache_key(request)}".encode("utf-8")
    return random.Random(int.from_bytes(hashlib.sha256(material).digest()[:8], "big"))


def _mock_ner_generation(prompt: str, rng: random.Random, corruption_rate: float) -> str:
    count_match = _NER_GEN_COUNT_RE.search(prompt)
    seed_match = _NER_GEN_SEED_RE.search(prompt)
    n = int(count_match.group(1)) if count_match else 10
    seed_text = seed_match.group(1).strip() if seed_match else "the condition"
    lines = []
    for i in range(n):
        if corruption_rate > 0 and rng.random() < corruption_rate:
            body = "this sentence fails to mention the requested term at all."
        else:
            body = _NER_SENTENCE_BODIES[i % len(_NER_SENTENCE_BODIES)].format(seed=seed_text)
        prefix = rng.choice(_SENTENCE_PREFIXES)
        sentence = prefix + body
        sentence = sentence[0].upper() + sentence[1:]
        lines.append(f"{i + 1}. {sentence}")
    return "\n".join(lines)


def _mock_re_generation(rng: random.Random, corruption_rate: float) -> str:
    rows = []
    order: list[tuple[str, str]] = [(body, "Yes") for body in rng.sample(_RE_POSITIVE_BODIES, 3)]
    order += [(body, "No") for body in rng.sample(_RE_NEGATIVE_BODIES, 3)]
    for body, label in order:
        prefix = rng.choice(_SENTENCE_PREFIXES)
        sentence = (prefix + body[0].lower() + body[1:]) if prefix else body
        if rng.random() < 0.7:
            sentence = sentence[:-1] + f" (n = {rng.randint(120, 4800)})."
        if corruption_rate > 0 and rng.random() < corruption_rate:
            rows.append(f"| {sentence} |")
        else:
            rows.append(f"| {sentence} | {label} |")
    return "\n".join(rows)


def _mock_ner_task(prompt: str, rng: random.Random) -> str:
    text_match = _NER_TASK_RE.search(prompt)
    text = text_match.group(1) if text_match else ""
    kind_match = _ENTITY_KIND_RE.search(prompt)
    etype = kind_match.group(1).capitalize() if kind_match else "Disease"
    words = text.split()
    lines = []
    inside = 0
    for word in words:
        if inside > 0:
            lines.append(f"{word}\tI-{etype}")
            inside -= 1
        elif rng.random() < 0.15:
            run = rng.choice((0, 1))
            lines.append(f"{word}\tB-{etype}")
            inside = run
        else:
            lines.append(f"{word}\tO")
    return "\n".join(lines)


def _mock_meta_candidates(prompt: str) -> str:
    wants_re = "relation" in prompt.lower()
    bodies = _RE_GEN_CANDIDATE_BODIES if wants_re else _NER_GEN_CANDIDATE_BODIES
    return "\n".join(f"{i + 1}. {body}" for i, body in enumerate(bodies))


def mock_content(request: ChatRequest, seed: int, corruption_rate: float = 0.0) -> str:
    """Deterministic reply for the pipeline's own prompt shapes.

    Pure function of (request content, seed, corruption_rate): the RNG is
    derived from a SHA-256 of the canonical request plus the seed, so the
    same inputs produce byte-identical output across processes.
    """
    prompt = request.user_text()
    rng = _rng_for(request, seed)
    lowered = prompt.lower()
    if "five concise prompts" in lowered or "augment five prompts" in lowered:
        return _mock_meta_candidates(prompt)
    if "do ner task for" in lowered:
        return _mock_ner_task(prompt, rng)
    if "predict whether the gene and disease have a relation" in lowered:
        return rng.choice(("Yes.", "No."))
    if "positive and" in lowered and "negative examples" in lowered:
        return _mock_re_generation(rng, corruption_rate)
    if "containing the words" in lowered:
        return _mock_ner_generation(prompt, rng, corruption_rate)
    return "OK."


def mock_complete(request: ChatRequest, seed: int, corruption_rate: float = 0.0) -> ChatResponse:
    return ChatResponse(
        content=mock_content(request, seed, corruption_rate),
        provider="mock",
        cached=False,
        latency_ms=0,
    )


class MockProvider:
    name = "mock"

    def __init__(self, seed: int = 0, corruption_rate: float = 0.0):
        if not 0.0 <= corruption_rate <= 1.0:
            raise ValueError("corruption_rate must lie in [0, 1]")
        self.seed = seed
        self.corruption_rate = corruption_rate

    def complete(self, request: ChatRequest, on_attempt=None) -> ChatResponse:
        response = mock_complete(request, self.seed, self.corruption_rate)
        if on_attempt is not None:
            on_attempt({"attempt": 0, "status": "ok", "response": response.content})
        return response


# -- HTTP provider -------------------------------------------------------------

class HttpProvider:
    """Chat-completions client: POST model/messages/temperature, read
    ``choices[0].message.content``. Retries 408/429/5xx and transport
    failures with exponential backoff plus jitter."""

    name = "real"

    def __init__(self, config: ProviderConfig, session: requests.Session | None = None):
        if not config.endpoint_url:
            raise ValueError("HTTP provider requires an endpoint_url")
        self.config = config
        self.session = session or requests.Session()

    def _api_key(self) -> str:
        key = os.environ.get(self.config.api_key_env, "")
        if not key:
            raise MissingApiKey(
                f"environment variable {self.config.api_key_env} is not set"
            )
        return key

    def complete(self, request: ChatRequest, on_attempt=None) -> ChatResponse:
        key = self._api_key()
        payload = {
            "model": request.model,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }

        def note(attempt: int, status, error: str = "", response: str = "") -> None:
            if on_attempt is not None:
                record = {"attempt": attempt, "status": status}
                if error:
                    record["error"] = error
                if response:
                    record["response"] = response
                on_attempt(record)

        last_error: Exception | None = None
        last_status: int | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt > 0:
                base = self.config.backoff_base_ms / 1000.0
                delay = base * (2 ** (attempt - 1)) * (1.0 + random.random() * 0.25)
                time.sleep(delay)
            started = time.monotonic()
            try:
                resp = self.session.post(
                    self.config.endpoint_url,
                    json=payload,
                    headers={"Authorization": f"Bearer {key}"},
                    timeout=self.config.timeout_s,
                )
            except requests.RequestException as exc:
                last_error = TransportError(str(exc))
                note(attempt, "transport-error", error=str(exc))
                continue
            latency_ms = int((time.monotonic() - started) * 1000)
            if resp.status_code in RETRYABLE_STATUSES:
                last_status = resp.status_code
                last_error = ProviderError(resp.status_code, resp.text)
                note(attempt, resp.status_code, error=resp.text[:500])
                continue
            if resp.status_code != 200:
                note(attempt, resp.status_code, error=resp.text[:500])
                raise ProviderError(resp.status_code, resp.text)
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError) as exc:
                note(attempt, resp.status_code, error=f"unparseable body: {exc}")
                raise ProviderError(resp.status_code, f"unparseable body: {exc}") from None
            note(attempt, "ok", response=content)
            return ChatResponse(content=content, provider=self.name, latency_ms=latency_ms)
        if last_status == 429:
            raise RateLimited(f"retries exhausted after {self.config.max_retries + 1} attempts")
        assert last_error is not None
        raise last_error


# -- cache, transcript, rate limiting ------------------------------------------

class ResponseCache:
    """Content-addressed on-disk cache; eviction is manual."""

    def __init__(self, directory: Path | str):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def get(self, digest: str) -> dict | None:
        path = self._path(digest)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def put(self, digest: str, record: dict) -> None:
        with self._lock:
            tmp = self._path(digest).with_suffix(".tmp")
            tmp.write_text(json.dumps(record, ensure_ascii=False), encoding="utf-8")
            tmp.replace(self._path(digest))


class TranscriptLog:
    """Append-only JSONL log of every completion attempt and cache hit."""

    def __init__(self, path: Path | str | None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: dict) -> None:
        if self.path is None:
            return
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def entries(self) -> list[dict]:
        if self.path is None or not self.path.exists():
            return []
        return [
            json.loads(line)
            for line in self.path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]


class TokenBucket:
    def __init__(self, per_minute: int):
        self.capacity = max(1, per_minute)
        self.tokens = float(self.capacity)
        self.rate = self.capacity / 60.0
        self.updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            time.sleep(min(wait, 0.5))


class Gateway:
    """Cache-and-log front end over a provider (mock or HTTP)."""

    def __init__(
        self,
        provider,
        cache_dir: Path | str | None = None,
        transcript_path: Path | str | None = None,
        rate_limit_per_min: int | None = None,
        model: str = "mock-default",
    ):
        self.provider = provider
        self.cache = ResponseCache(cache_dir) if cache_dir is not None else None
        self.transcript = TranscriptLog(transcript_path)
        self.bucket = TokenBucket(rate_limit_per_min) if rate_limit_per_min else None
        self.model = model

    def chat(self, prompt: str, temperature: float, max_tokens: int = 2048) -> ChatRequest:
        return user_request(prompt, self.model, temperature, max_tokens)

    def complete(self, request: ChatRequest) -> ChatResponse:
        digest = cache_key(request)
        if self.cache is not None:
            hit = self.cache.get(digest)
            if hit is not None:
                self.transcript.append(
                    {"kind": "cache-hit", "digest": digest, "provider": hit.get("provider", "")}
                )
                return ChatResponse(
                    content=hit["content"],
                    provider=hit.get("provider", self.provider.name),
                    cached=True,
                    latency_ms=0,
                )
        if self.bucket is not None:
            self.bucket.acquire()

        def on_attempt(detail: dict) -> None:
            record = {
                "kind": "attempt",
                "digest": digest,
                "provider": self.provider.name,
                "request": _request_record(request),
                "timestamp": time.time(),
            }
            record.update(detail)
            self.transcript.append(record)

        response = self.provider.complete(request, on_attempt=on_attempt)
        if self.cache is not None:
            self.cache.put(digest, {"content": response.content, "provider": response.provider})
        return response


def _request_record(request: ChatRequest) -> dict:
    return {
        "model": request.model,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
        "messages": [{"role": m.role, "content": m.content} for m in request.messages],
    }
