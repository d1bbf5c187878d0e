"""Stateless HTTP inference endpoint.

POST ``/predict`` with ``{"texts": ["..."]}`` returns
``{"probabilities": [[...]], "labels": [[...]]}``. Malformed JSON is a
400, a batch over the configured limit is a 413, an empty list is a
valid request. Requests are handled concurrently; the model forward
pass runs under a lock and no state survives a request.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .model import Checkpoint
from .predict import labels_for, predict_probabilities

log = logging.getLogger(__name__)

DEFAULT_MAX_BATCH = 64


def build_server(
    checkpoint: Checkpoint, port: int, *, max_batch: int = DEFAULT_MAX_BATCH
) -> ThreadingHTTPServer:
    """Bind the endpoint; ``port`` 0 picks a free one. Caller serves."""
    classifier, tokenizer = checkpoint.load()
    lock = threading.Lock()

    class Handler(BaseHTTPRequestHandler):
        def _reply(self, status: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_POST(self) -> None:  # noqa: N802 (http.server API)
            if self.path not in ("/predict", "/"):
                self._reply(404, {"error": f"unknown path {self.path}"})
                return
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length)
            try:
                doc = json.loads(raw)
            except json.JSONDecodeError as err:
                self._reply(400, {"error": f"body is not valid JSON: {err}"})
                return
            texts = doc.get("texts") if isinstance(doc, dict) else None
            if not isinstance(texts, list) or any(not isinstance(t, str) for t in texts):
                self._reply(400, {"error": "expected {\"texts\": [\"...\"]}"})
                return
            if len(texts) > max_batch:
                self._reply(
                    413, {"error": f"batch of {len(texts)} exceeds the limit of {max_batch}"}
                )
                return
            if not texts:
                self._reply(200, {"probabilities": [], "labels": []})
                return
            with lock:
                probabilities = predict_probabilities(
                    classifier, tokenizer, texts, max_length=checkpoint.max_length
                )
            self._reply(
                200,
                {
                    "probabilities": [list(p) for p in probabilities],
                    "labels": [
                        list(labels_for(p, checkpoint.threshold)) for p in probabilities
                    ],
                },
            )

        def log_message(self, fmt: str, *args) -> None:
            log.debug("%s " + fmt, self.address_string(), *args)

    return ThreadingHTTPServer(("127.0.0.1", port), Handler)
