from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from synthmine.errors import MissingApiKey, ProviderError, RateLimited, TransportError
from synthmine.gateway import (
    ChatMessage,
    ChatRequest,
    Gateway,
    HttpProvider,
    MockProvider,
    ProviderConfig,
    cache_key,
    mock_complete,
    user_request,
)
from synthmine.generate import parse_generation_reply
from synthmine.prompts import NER_GEN, RE_GEN


def _req(content="hello world", temperature=0.0, max_tokens=64):
    return ChatRequest("mock-chat", (ChatMessage("user", content),), temperature, max_tokens)


# -- cache keys --------------------------------------------------------------------

# Frozen once from an independent hashlib.sha256 over the documented
# canonical JSON (sorted keys, compact separators).
PINNED_DIGEST = "ff0988fb05fce21da5f6e2e6ae3f9e9e6ce7ca699126106fecd21579e2bcdd60"


def test_cache_key_pinned_fixture():
    assert cache_key(_req()) == PINNED_DIGEST


def test_cache_key_is_64_hex():
    digest = cache_key(_req("anything"))
    assert len(digest) == 64
    int(digest, 16)


def test_cache_key_identical_requests_agree():
    assert cache_key(_req("same")) == cache_key(_req("same"))


def test_cache_key_temperature_matters():
    assert cache_key(_req(temperature=0.0)) != cache_key(_req(temperature=1.0))


def test_cache_key_message_order_matters():
    a = ChatRequest("m", (ChatMessage("system", "s"), ChatMessage("user", "u")), 0.0, 8)
    b = ChatRequest("m", (ChatMessage("user", "u"), ChatMessage("system", "s")), 0.0, 8)
    assert cache_key(a) != cache_key(b)


def test_cache_key_whitespace_significant():
    assert cache_key(_req("a b")) != cache_key(_req("a  b"))


def test_request_validation():
    with pytest.raises(ValueError):
        ChatRequest("m", (ChatMessage("system", "no user"),), 0.0, 8)
    with pytest.raises(ValueError):
        ChatRequest("m", (ChatMessage("user", "x"),), 3.0, 8)
    with pytest.raises(ValueError):
        ChatMessage("user", "")


# -- mock provider -----------------------------------------------------------------

NER_GEN_PROMPT = (
    "Please act as a sentence generator for the biological domain and provide 5 "
    "sentences containing the words ovarian cancer. These sentences should not "
    "include any additional information or explanation."
)


def test_mock_is_deterministic():
    req = user_request(NER_GEN_PROMPT, "mock-chat", 0.7)
    first = mock_complete(req, seed=42)
    second = mock_complete(req, seed=42)
    assert first.content == second.content
    assert mock_complete(req, seed=43).content != first.content


def test_mock_ner_generation_contains_seed():
    req = user_request(NER_GEN_PROMPT, "mock-chat", 0.7)
    content = mock_complete(req, seed=1).content
    lines = content.splitlines()
    assert len(lines) == 5
    assert all("ovarian cancer" in line for line in lines)
    assert lines[0].startswith("1.")


def test_mock_corruption_zero_parses_clean():
    req = user_request(NER_GEN_PROMPT, "mock-chat", 0.7)
    content = mock_complete(req, seed=1, corruption_rate=0.0).content
    accepts, rejects = parse_generation_reply(content, NER_GEN)
    assert len(accepts) == 5 and not rejects
    assert all("ovarian cancer" in line for line in accepts)


def test_mock_corruption_one_breaks_every_line():
    req = user_request(NER_GEN_PROMPT, "mock-chat", 0.7)
    content = mock_complete(req, seed=1, corruption_rate=1.0).content
    accepts, _ = parse_generation_reply(content, NER_GEN)
    assert all("ovarian cancer" not in line for line in accepts)


RE_GEN_PROMPT = (
    "Generate 3 positive and 3 negative examples for the gene-disease relation "
    'extraction task. The target gene is denoted as "@GENE$" and the target '
    'disease is denoted as "@DISEASE$". | seeds here | Yes |'
)


def test_mock_re_generation_balanced_rows():
    req = user_request(RE_GEN_PROMPT, "mock-chat", 0.7)
    content = mock_complete(req, seed=5).content
    accepts, rejects = parse_generation_reply(content, RE_GEN)
    assert len(accepts) == 6 and not rejects
    labels = [row.split("\t")[1] for row in accepts]
    assert labels.count("Yes") == 3 and labels.count("No") == 3
    assert all("@GENE$" in row and "@DISEASE$" in row for row in accepts)


def test_mock_re_corruption_one_rejects_every_row():
    req = user_request(RE_GEN_PROMPT, "mock-chat", 0.7)
    content = mock_complete(req, seed=5, corruption_rate=1.0).content
    accepts, rejects = parse_generation_reply(content, RE_GEN)
    assert not accepts
    assert len(rejects) == 6


# -- gateway cache and transcript ------------------------------------------------------

def test_second_call_hits_cache(tmp_path):
    gateway = Gateway(
        MockProvider(seed=3),
        cache_dir=tmp_path / "cache",
        transcript_path=tmp_path / "transcript.jsonl",
    )
    req = gateway.chat(NER_GEN_PROMPT, 0.7)
    first = gateway.complete(req)
    second = gateway.complete(req)
    assert not first.cached
    assert second.cached
    assert second.content == first.content
    kinds = [e["kind"] for e in gateway.transcript.entries()]
    assert kinds == ["attempt", "cache-hit"]


def test_cache_survives_new_gateway(tmp_path):
    req = user_request("remember me", "mock-chat", 0.0)
    first = Gateway(MockProvider(seed=3), cache_dir=tmp_path / "c").complete(req)
    second = Gateway(MockProvider(seed=99), cache_dir=tmp_path / "c").complete(req)
    assert second.cached and second.content == first.content


def test_token_bucket_paces_calls_beyond_burst():
    import time

    from synthmine.gateway import TokenBucket

    bucket = TokenBucket(per_minute=1200)  # 20/s refill, burst 1200
    bucket.tokens = 2.0  # drain the initial burst for the test
    started = time.monotonic()
    for _ in range(4):
        bucket.acquire()
    elapsed = time.monotonic() - started
    # two tokens free, two paced at 1/20s each
    assert elapsed >= 0.08


def test_gateway_without_rate_limit_is_unpaced(tmp_path):
    import time

    gateway = Gateway(MockProvider(seed=1), model="mock-chat")
    req = gateway.chat("quick check", 0.0)
    started = time.monotonic()
    for _ in range(50):
        gateway.complete(req)
    assert time.monotonic() - started < 2.0


# -- HTTP provider ------------------------------------------------------------------

class _ScriptedHandler(BaseHTTPRequestHandler):
    script: list  # (status, body) tuples, consumed per request
    seen: list

    def log_message(self, *args):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0"))
        payload = json.loads(self.rfile.read(length)) if length else {}
        type(self).seen.append(
            {"payload": payload, "auth": self.headers.get("Authorization", "")}
        )
        status, body = self.script.pop(0) if self.script else (200, _ok_body("fallback"))
        encoded = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(encoded)))
        self.end_headers()
        self.wfile.write(encoded)


def _ok_body(content):
    return json.dumps({"choices": [{"message": {"content": content}}]})


@pytest.fixture
def scripted_server():
    servers = []

    def start(script):
        handler = type(
            "Handler", (_ScriptedHandler,), {"script": list(script), "seen": []}
        )
        server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        servers.append(server)
        url = f"http://127.0.0.1:{server.server_address[1]}/v1/chat"
        return url, handler

    yield start
    for server in servers:
        server.shutdown()
        server.server_close()


def _http_config(url, retries=2):
    return ProviderConfig(
        endpoint_url=url,
        api_key_env="TEST_CHAT_KEY",
        max_retries=retries,
        backoff_base_ms=1,
    )


def test_http_provider_success(scripted_server, monkeypatch):
    monkeypatch.setenv("TEST_CHAT_KEY", "sk-test")
    url, handler = scripted_server([(200, _ok_body("pong"))])
    provider = HttpProvider(_http_config(url))
    response = provider.complete(_req("ping"))
    assert response.content == "pong"
    assert response.provider == "real"
    assert handler.seen[0]["auth"] == "Bearer sk-test"
    assert handler.seen[0]["payload"]["model"] == "mock-chat"


def test_http_provider_missing_key(scripted_server, monkeypatch):
    monkeypatch.delenv("TEST_CHAT_KEY", raising=False)
    url, _ = scripted_server([])
    with pytest.raises(MissingApiKey):
        HttpProvider(_http_config(url)).complete(_req())


def test_http_provider_retries_then_succeeds(scripted_server, monkeypatch):
    monkeypatch.setenv("TEST_CHAT_KEY", "k")
    url, handler = scripted_server([(503, "busy"), (500, "boom"), (200, _ok_body("ok"))])
    provider = HttpProvider(_http_config(url))
    assert provider.complete(_req()).content == "ok"
    assert len(handler.seen) == 3


def test_http_provider_rate_limit_exhausted(scripted_server, monkeypatch):
    monkeypatch.setenv("TEST_CHAT_KEY", "k")
    url, handler = scripted_server([(429, "slow down")] * 3)
    with pytest.raises(RateLimited):
        HttpProvider(_http_config(url, retries=2)).complete(_req())
    assert len(handler.seen) == 3  # initial call + 2 retries


def test_http_provider_fatal_status_no_retry(scripted_server, monkeypatch):
    monkeypatch.setenv("TEST_CHAT_KEY", "k")
    url, handler = scripted_server([(400, "bad request")])
    with pytest.raises(ProviderError) as exc:
        HttpProvider(_http_config(url)).complete(_req())
    assert exc.value.status == 400
    assert len(handler.seen) == 1


def test_http_provider_transport_error():
    config = ProviderConfig(
        endpoint_url="http://127.0.0.1:1/unreachable",
        api_key_env="TEST_CHAT_KEY",
        max_retries=1,
        backoff_base_ms=1,
    )
    import os

    os.environ["TEST_CHAT_KEY"] = "k"
    with pytest.raises(TransportError):
        HttpProvider(config).complete(_req())


def test_transcript_logs_every_attempt(scripted_server, monkeypatch, tmp_path):
    monkeypatch.setenv("TEST_CHAT_KEY", "sk-supersecretvalue")
    url, _ = scripted_server([(503, "busy"), (200, _ok_body("ok"))])
    gateway = Gateway(
        HttpProvider(_http_config(url)),
        cache_dir=tmp_path / "cache",
        transcript_path=tmp_path / "t.jsonl",
    )
    gateway.complete(_req())
    entries = gateway.transcript.entries()
    attempts = [e for e in entries if e["kind"] == "attempt"]
    assert len(attempts) == 2
    assert attempts[0]["status"] == 503
    assert attempts[1]["status"] == "ok"
    # the API key must never reach the transcript
    dumped = json.dumps(entries)
    assert "sk-supersecretvalue" not in dumped
    assert "Authorization" not in dumped
