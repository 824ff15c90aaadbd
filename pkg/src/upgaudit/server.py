"""HTTP API for the audit workbench.

Read endpoints serve the model, the propagation graph, its audit subgraphs
and the obligation list with effective statuses; the single mutation
endpoint appends a judgment. Writes are serialized by a lock and flushed to
the audit file before the response is acknowledged, so a crash never loses
an acknowledged judgment.

    GET  /api/model
    GET  /api/upg
    GET  /api/subgraphs
    GET  /api/obligations
    GET  /api/verdict?mode=strong|weak
    POST /api/judgments   {"id", "verdict", "justification", "author"}

When a UI directory is configured, / serves its index.html and /ui/* its
assets.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from . import audit as audit_mod
from .audit import AuditState, AuditError
from .model import CrateModel
from .obligations import KIND_CALL, KIND_DECLARE_SC, KIND_PAIR, Obligation, crate_verdict
from .upg import Subgraph, Upg, subgraph_to_json_dict, upg_to_json_dict

_CONTENT_TYPES = {".html": "text/html", ".js": "text/javascript", ".css": "text/css", ".map": "application/json"}


def subgraph_obligations(sg: Subgraph, obligations: list[Obligation]) -> list[str]:
    """Obligation ids belonging to one audit subgraph."""
    ids = []
    for o in obligations:
        if sg.kind == "unsafe_node" and o.kind == KIND_DECLARE_SC and o.subject[0] == sg.focus:
            ids.append(o.id)
        elif sg.kind == "call_with_unsafe_callee" and o.kind == KIND_CALL and (o.subject[0], o.subject[1]) in sg.edges:
            ids.append(o.id)
        elif sg.kind == "struct_audit" and o.kind == KIND_PAIR and o.subject[1] == sg.focus:
            ids.append(o.id)
    return sorted(ids)


class AuditApp:
    """Shared state behind the handler: immutable analysis products plus the
    mutable judgment trail (single writer, guarded by a lock)."""

    def __init__(
        self,
        model: CrateModel,
        upg: Upg,
        subgraphs: tuple[Subgraph, ...],
        obligations: list[Obligation],
        gen_diags,
        audit_state: AuditState,
        audit_path: str | Path,
        ui_dir: str | Path | None = None,
    ):
        self.model = model
        self.upg = upg
        self.subgraphs = subgraphs
        self.obligations = obligations
        self.gen_diags = gen_diags
        self.audit_state = audit_state
        self.audit_path = Path(audit_path)
        self.ui_dir = Path(ui_dir) if ui_dir else None
        self.known_ids = {o.id for o in obligations}
        self.lock = threading.Lock()

    # -- views -------------------------------------------------------------

    def obligations_json(self) -> list[dict]:
        with self.lock:
            statuses = audit_mod.effective_statuses(self.obligations, self.audit_state)
        out = []
        for o in self.obligations:
            d = o.to_json_dict()
            d["status"] = statuses[o.id]
            out.append(d)
        return out

    def subgraphs_json(self) -> list[dict]:
        out = []
        for sg in self.subgraphs:
            d = subgraph_to_json_dict(sg)
            d["obligations"] = subgraph_obligations(sg, self.obligations)
            out.append(d)
        return out

    def verdict_json(self, mode: str) -> dict:
        with self.lock:
            statuses = audit_mod.effective_statuses(self.obligations, self.audit_state)
        return crate_verdict(self.model, mode, self.obligations, statuses, self.gen_diags).to_json_dict()

    def submit_judgment(self, body: dict) -> dict:
        for key in ("id", "verdict", "justification", "author"):
            if key not in body or not isinstance(body[key], str):
                raise AuditError(f"body must carry string field {key!r}")
        with self.lock:
            new_state, judgment = audit_mod.mark(
                self.audit_state,
                body["id"],
                body["verdict"],
                body["justification"],
                body["author"],
                known_ids=self.known_ids,
            )
            audit_mod.append_judgment(self.audit_path, judgment)
            self.audit_state = new_state
            statuses = audit_mod.effective_statuses(self.obligations, self.audit_state)
        return {"id": body["id"], "status": statuses[body["id"]]}


def make_handler(app: AuditApp):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # keep request logs off stdout
            pass

        def _send(self, code: int, payload, content_type="application/json") -> None:
            if content_type == "application/json":
                body = (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8")
            elif isinstance(payload, bytes):
                body = payload
            else:
                body = payload.encode("utf-8")
            self.send_response(code)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()
            self.wfile.write(body)

        def do_OPTIONS(self):
            self._send(204, b"", content_type="text/plain")

        def do_GET(self):
            url = urlparse(self.path)
            path = url.path
            try:
                if path == "/api/model":
                    self._send(200, app.model.to_json_dict())
                elif path == "/api/upg":
                    self._send(200, upg_to_json_dict(app.upg))
                elif path == "/api/subgraphs":
                    self._send(200, app.subgraphs_json())
                elif path == "/api/obligations":
                    self._send(200, app.obligations_json())
                elif path == "/api/verdict":
                    mode = parse_qs(url.query).get("mode", ["strong"])[0]
                    if mode not in ("strong", "weak"):
                        self._send(400, {"error": f"unknown mode {mode!r}"})
                        return
                    self._send(200, app.verdict_json(mode))
                elif path == "/" or path.startswith("/ui/"):
                    self._serve_static(path)
                else:
                    self._send(404, {"error": "not found"})
            except BrokenPipeError:
                pass
            except Exception as exc:  # surface failures as 5xx, not a dead socket
                self._send(500, {"error": str(exc)})

        def _serve_static(self, path: str) -> None:
            if app.ui_dir is None:
                self._send(404, {"error": "no UI bundle configured (start with --ui <dir>)"})
                return
            rel = "index.html" if path == "/" else path[len("/ui/"):]
            target = (app.ui_dir / rel).resolve()
            if not str(target).startswith(str(app.ui_dir.resolve())) or not target.is_file():
                self._send(404, {"error": "not found"})
                return
            ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
            self._send(200, target.read_bytes(), content_type=ctype)

        def do_POST(self):
            url = urlparse(self.path)
            if url.path != "/api/judgments":
                self._send(404, {"error": "not found"})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                body = json.loads(self.rfile.read(length).decode("utf-8")) if length else {}
            except (ValueError, json.JSONDecodeError):
                self._send(400, {"error": "body must be a JSON object"})
                return
            if not isinstance(body, dict):
                self._send(400, {"error": "body must be a JSON object"})
                return
            try:
                result = app.submit_judgment(body)
            except AuditError as exc:
                code = 404 if "unknown obligation" in str(exc) else 400
                self._send(code, {"error": str(exc)})
                return
            except OSError as exc:
                self._send(500, {"error": f"audit file write failed: {exc}"})
                return
            self._send(201, result)

    return Handler


def serve(app: AuditApp, host: str, port: int) -> ThreadingHTTPServer:
    """Bind and return the server; the caller drives serve_forever()."""
    return ThreadingHTTPServer((host, port), make_handler(app))
