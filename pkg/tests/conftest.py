"""Shared fixtures: bundled sample data, templates, a scripted HTTP server."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import pytest

from scidiscourse import (
    Dataset,
    LabelVector,
    PromptTemplate,
    Record,
    Tweet,
    load_dataset,
)

ROOT = Path(__file__).resolve().parent.parent
SAMPLE_DIR = ROOT / "sample_data"
DATA_DIR = Path(__file__).resolve().parent / "data"


def make_dataset(rows, split: str = "train") -> Dataset:
    """Build an in-memory dataset from (index, text, labels-or-None) triples."""
    records = []
    for index, text, labels in rows:
        vector = None if labels is None else LabelVector.from_values(labels)
        records.append(Record(tweet=Tweet(index=index, text=text), labels=vector))
    return Dataset(split=split, records=tuple(records))


@pytest.fixture(scope="session")
def sample_dir() -> Path:
    return SAMPLE_DIR


@pytest.fixture(scope="session")
def train_ds() -> Dataset:
    return load_dataset(SAMPLE_DIR / "train.tsv", "train")


@pytest.fixture(scope="session")
def dev_ds() -> Dataset:
    return load_dataset(SAMPLE_DIR / "dev.tsv", "dev")


@pytest.fixture(scope="session")
def template() -> PromptTemplate:
    return PromptTemplate.load_default()


class ScriptedHandler(BaseHTTPRequestHandler):
    """Serves a queue of (status, body) responses, recording requests."""

    script = []
    requests_seen = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length)
        type(self).requests_seen.append(
            {
                "path": self.path,
                "body": json.loads(body),
                "auth": self.headers.get("Authorization"),
            }
        )
        status, payload = self.script.pop(0) if self.script else (200, {"ok": True})
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        if isinstance(payload, (dict, list)):
            self.wfile.write(json.dumps(payload).encode())
        else:
            self.wfile.write(str(payload).encode())

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    httpd = HTTPServer(("127.0.0.1", 0), ScriptedHandler)
    ScriptedHandler.script = []
    ScriptedHandler.requests_seen = []
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{httpd.server_port}"
    httpd.shutdown()
    thread.join()
