"""HTTP embedding service implementing the POST /embed protocol.

Request:  POST /embed  {"texts": ["...", ...]}   (non-empty list)
Response: 200  {"dim": D, "vectors": [[...], ...]}  in request order
Errors:   400 with {"error": "..."} for malformed or empty requests.
"""
from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from embed_exporter.model import EmbeddingModel


def _make_handler(model: EmbeddingModel, lock: threading.Lock):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # quiet by default
            pass

        def _reply(self, status: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_POST(self):
            if self.path != "/embed":
                self._reply(404, {"error": f"no such endpoint: {self.path}"})
                return
            try:
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length))
                texts = body["texts"]
            except (ValueError, KeyError, TypeError) as exc:
                self._reply(400, {"error": f"malformed request: {exc}"})
                return
            if (
                not isinstance(texts, list)
                or not texts
                or not all(isinstance(t, str) and t.strip() for t in texts)
            ):
                self._reply(400, {"error": "texts must be a non-empty list of non-empty strings"})
                return
            # one inference at a time keeps concurrent requests isolated
            with lock:
                vectors = model.embed(texts)
            self._reply(200, {"dim": model.dim, "vectors": vectors.tolist()})

    return Handler


def create_server(model: EmbeddingModel, port: int = 0) -> ThreadingHTTPServer:
    """Bind a threading HTTP server on the given port (0 picks a free one)."""
    return ThreadingHTTPServer(("127.0.0.1", port), _make_handler(model, threading.Lock()))


def serve(model: EmbeddingModel, port: int) -> None:
    server = create_server(model, port)
    print(f"serving /embed on port {server.server_address[1]} (dim={model.dim})")
    try:
        server.serve_forever()
    finally:
        server.server_close()
