"""HTTP front end for the miner service, on the standard library only.

All endpoints live under /v1 and speak JSON; errors carry a machine
code plus a human message. Ingestion accepts a line-delimited body.
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, unquote, urlparse

from .service import BadRequestError, MinerService, ServiceError

_SCORE_RE = re.compile(r"^/v1/companies/([^/]+)/score$")
_HEADLINES_RE = re.compile(r"^/v1/companies/([^/]+)/headlines$")


class ApiHandler(BaseHTTPRequestHandler):
    service: MinerService  # injected by make_server
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass  # keep test output quiet; operators can wrap make_server

    # -- plumbing ------------------------------------------------------

    def _send_json(self, status: int, document: dict) -> None:
        body = json.dumps(document, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length", "0"))
        return self.rfile.read(length) if length else b""

    def _error(self, exc: ServiceError) -> None:
        self._send_json(exc.http_status, exc.as_document())

    def _not_found(self) -> None:
        self._send_json(
            404, {"code": "not_found", "message": f"no such endpoint: {self.path}"}
        )

    # -- methods ---------------------------------------------------------

    def do_GET(self) -> None:  # noqa: N802 - stdlib naming
        parsed = urlparse(self.path)
        try:
            if parsed.path == "/v1/health":
                self._send_json(200, self.service.health())
                return
            match = _SCORE_RE.match(parsed.path)
            if match:
                self._send_json(200, self.service.query_score(unquote(match.group(1))))
                return
            match = _HEADLINES_RE.match(parsed.path)
            if match:
                query = parse_qs(parsed.query)
                self._send_json(
                    200,
                    self.service.list_headlines(
                        unquote(match.group(1)),
                        stage=query.get("stage", [None])[0],
                        label=query.get("label", [None])[0],
                        page=_int_param(query, "page", 1),
                        page_size=_int_param(query, "page_size", 20),
                    ),
                )
                return
            if parsed.path == "/v1/corrections":
                self._send_json(200, {"events": self.service.corrections()})
                return
            self._not_found()
        except ServiceError as exc:
            self._error(exc)
        except Exception as exc:  # pragma: no cover - last-resort guard
            self._send_json(500, {"code": "internal", "message": str(exc)})

    def do_POST(self) -> None:  # noqa: N802
        parsed = urlparse(self.path)
        try:
            if parsed.path == "/v1/ingest":
                body = self._read_body().decode("utf-8")
                report = self.service.ingest_lines(body.splitlines())
                self._send_json(200, report.as_document())
                return
            if parsed.path == "/v1/corrections":
                try:
                    record = json.loads(self._read_body() or b"{}")
                except json.JSONDecodeError as exc:
                    raise BadRequestError(f"invalid JSON body: {exc}") from exc
                for field in ("headline_id", "stage", "new_label", "author"):
                    if field not in record:
                        raise BadRequestError(f"missing field {field!r}")
                self._send_json(
                    200,
                    self.service.submit_correction(
                        str(record["headline_id"]),
                        str(record["stage"]),
                        str(record["new_label"]),
                        str(record["author"]),
                    ),
                )
                return
            self._not_found()
        except ServiceError as exc:
            self._error(exc)
        except Exception as exc:  # pragma: no cover
            self._send_json(500, {"code": "internal", "message": str(exc)})

    def do_PUT(self) -> None:  # noqa: N802
        self._send_json(
            405,
            {"code": "method_not_allowed", "message": "PUT is not supported"},
        )


def _int_param(query: dict, name: str, default: int) -> int:
    raw = query.get(name, [None])[0]
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise BadRequestError(f"{name} must be an integer") from exc


def make_server(
    service: MinerService, host: str = "127.0.0.1", port: int = 0
) -> ThreadingHTTPServer:
    handler = type("BoundApiHandler", (ApiHandler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)


def serve_in_thread(service: MinerService, host: str = "127.0.0.1", port: int = 0):
    """Start a server on a background thread; returns (server, thread)."""
    server = make_server(service, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread
