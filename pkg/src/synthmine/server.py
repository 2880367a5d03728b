"""Loopback HTTP server backing the review UI.

Serves the current refinement round with its preview samples, accepts
the human selection, exposes the pending synthetic-sample queue with
accept/reject decisions, and hands out the projection scatter as TSV.
State lives in a run directory; writes to the refinement log and the
decision files are serialized behind one lock, and the server binds to
127.0.0.1 only.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .errors import InvalidSelection, RoundNotReady, SynthmineError
from .forge import RefinementSession

PENDING_FILE = "pending_samples.jsonl"
DECISIONS_FILE = "decisions.jsonl"
QUARANTINE_FILE = "quarantine.jsonl"
SCATTER_FILE = "scatter.tsv"


class ReviewState:
    """Run-directory view shared by all request handlers."""

    def __init__(self, run_dir: Path | str, session: RefinementSession | None = None):
        self.run_dir = Path(run_dir)
        self.session = session
        self.lock = threading.Lock()
        self.samples: dict[str, dict] = {}
        self.decisions: dict[str, dict] = {}
        self._load_samples()
        self._load_decisions()

    def _load_samples(self) -> None:
        path = self.run_dir / PENDING_FILE
        if not path.exists():
            return
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                record = json.loads(line)
                self.samples[record["sample_id"]] = record

    def _load_decisions(self) -> None:
        path = self.run_dir / DECISIONS_FILE
        if not path.exists():
            return
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                record = json.loads(line)
                self.decisions[record["sample_id"]] = record

    # -- rounds -----------------------------------------------------------------

    def round_view(self) -> dict | None:
        if self.session is None or not self.session.started:
            return None
        log = self.session.log
        state = log.current
        view = {
            "task": log.task,
            "budget": log.budget,
            "status": self.session.status(),
            "final_prompt": None,
            "round": None,
        }
        if log.final_prompt is not None:
            view["final_prompt"] = {
                "id": log.final_prompt.id,
                "body": log.final_prompt.body,
            }
        if state is not None:
            view["round"] = {
                "round_index": state.round_index,
                "status": state.status,
                "samples_per_candidate": state.samples_per_candidate,
                "selection": state.selection,
                "candidates": [
                    {
                        "id": c.id,
                        "body": c.body,
                        "samples": state.samples.get(c.id, []),
                    }
                    for c in state.candidates
                ],
            }
        return view

    def submit_selection(self, candidate_id: str, rationale: str) -> dict:
        if self.session is None:
            raise RoundNotReady("no refinement session attached")
        self.session.select(candidate_id, rationale)
        return {"status": self.session.status()}

    # -- sample queue --------------------------------------------------------------

    def pending_samples(self) -> list[dict]:
        return [
            record
            for sid, record in self.samples.items()
            if sid not in self.decisions
        ]

    def decide(self, sample_id: str, decision: str, reason: str) -> dict:
        if sample_id not in self.samples:
            raise KeyError(sample_id)
        if sample_id in self.decisions:
            raise InvalidSelection(f"sample {sample_id} already decided")
        if decision not in ("accept", "reject"):
            raise ValueError(f"decision must be accept or reject, got {decision!r}")
        record = {"sample_id": sample_id, "decision": decision, "reason": reason}
        self.decisions[sample_id] = record
        with (self.run_dir / DECISIONS_FILE).open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        if decision == "reject":
            sample = self.samples[sample_id]
            quarantine = {
                "sample_id": sample_id,
                "reason": reason or "rejected-in-review",
                "text": sample.get("text", ""),
            }
            with (self.run_dir / QUARANTINE_FILE).open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(quarantine, ensure_ascii=False) + "\n")
        return record

    def scatter_tsv(self) -> str | None:
        path = self.run_dir / SCATTER_FILE
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8")


class ReviewHandler(BaseHTTPRequestHandler):
    state: ReviewState  # injected by make_server
    ui_dir: Path | None = None

    # -- plumbing ------------------------------------------------------------------

    def log_message(self, *args) -> None:  # quiet by default
        pass

    def _send_json(self, payload, status: int = 200) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, error: str, message: str) -> None:
        self._send_json({"error": error, "message": message}, status=status)

    def _send_text(self, text: str, content_type: str, status: int = 200) -> None:
        body = text.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        if length == 0:
            return {}
        return json.loads(self.rfile.read(length).decode("utf-8"))

    def do_OPTIONS(self) -> None:
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    # -- routes ----------------------------------------------------------------------

    def do_GET(self) -> None:
        parsed = urlparse(self.path)
        if parsed.path == "/rounds/current":
            view = self.state.round_view()
            if view is None:
                self._send_error_json(404, "NoRound", "no refinement round available")
            else:
                self._send_json(view)
            return
        if parsed.path == "/samples":
            query = parse_qs(parsed.query)
            status = query.get("status", ["pending"])[0]
            if status != "pending":
                self._send_error_json(400, "BadQuery", f"unsupported status {status!r}")
                return
            self._send_json(self.state.pending_samples())
            return
        if parsed.path == "/scatter":
            tsv = self.state.scatter_tsv()
            if tsv is None:
                self._send_error_json(404, "NoScatter", "no scatter file in this run")
            else:
                self._send_text(tsv, "text/tab-separated-values; charset=utf-8")
            return
        if self._serve_ui(parsed.path):
            return
        self._send_error_json(404, "NotFound", f"no route {parsed.path}")

    def do_POST(self) -> None:
        parsed = urlparse(self.path)
        try:
            body = self._read_body()
        except (ValueError, json.JSONDecodeError):
            self._send_error_json(400, "BadRequest", "body is not valid JSON")
            return
        if parsed.path == "/rounds/current/selection":
            candidate_id = body.get("candidate_id", "")
            rationale = body.get("rationale", "")
            if not candidate_id:
                self._send_error_json(400, "BadRequest", "candidate_id is required")
                return
            with self.state.lock:
                try:
                    result = self.state.submit_selection(candidate_id, rationale)
                except RoundNotReady as exc:
                    self._send_error_json(409, "RoundNotReady", str(exc))
                    return
                except InvalidSelection as exc:
                    self._send_error_json(400, "InvalidSelection", str(exc))
                    return
                except SynthmineError as exc:
                    self._send_error_json(500, type(exc).__name__, str(exc))
                    return
            self._send_json(result)
            return
        if parsed.path.startswith("/samples/") and parsed.path.endswith("/decision"):
            sample_id = parsed.path[len("/samples/") : -len("/decision")]
            decision = body.get("decision", "")
            reason = body.get("reason", "")
            with self.state.lock:
                try:
                    record = self.state.decide(sample_id, decision, reason)
                except KeyError:
                    self._send_error_json(404, "UnknownSample", f"no sample {sample_id!r}")
                    return
                except InvalidSelection as exc:
                    self._send_error_json(409, "AlreadyDecided", str(exc))
                    return
                except ValueError as exc:
                    self._send_error_json(400, "BadRequest", str(exc))
                    return
            self._send_json(record)
            return
        self._send_error_json(404, "NotFound", f"no route {parsed.path}")

    # -- optional static UI ---------------------------------------------------------

    def _serve_ui(self, path: str) -> bool:
        if self.ui_dir is None:
            return False
        rel = "index.html" if path == "/" else path.lstrip("/")
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) or not target.is_file():
            return False
        content_type = {
            ".html": "text/html; charset=utf-8",
            ".js": "text/javascript; charset=utf-8",
            ".css": "text/css; charset=utf-8",
        }.get(target.suffix, "application/octet-stream")
        self._send_text(target.read_text(encoding="utf-8"), content_type)
        return True


def make_server(
    state: ReviewState, port: int = 0, ui_dir: Path | None = None
) -> ThreadingHTTPServer:
    """Bind a review server on the loopback interface (port 0 = random)."""
    handler = type("BoundReviewHandler", (ReviewHandler,), {"state": state, "ui_dir": ui_dir})
    return ThreadingHTTPServer(("127.0.0.1", port), handler)
