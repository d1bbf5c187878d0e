"""Retry, backoff, and auth behavior of the HTTP POST helper."""

from __future__ import annotations

import pytest

from scidiscourse.wire import (
    AuthenticationError,
    TransportError,
    post_json,
    redact,
)
from tests.conftest import ScriptedHandler


def no_sleep(delay):
    no_sleep.delays.append(delay)


@pytest.fixture(autouse=True)
def reset_sleep_log():
    no_sleep.delays = []


class TestPostJson:
    def test_success_returns_decoded_json(self, server):
        ScriptedHandler.script = [(200, {"value": 7})]
        data = post_json(f"{server}/x", {"a": 1}, headers={}, timeout=5, max_retries=0)
        assert data == {"value": 7}
        assert ScriptedHandler.requests_seen[0]["body"] == {"a": 1}

    def test_retries_transient_statuses_with_backoff(self, server):
        ScriptedHandler.script = [(500, {}), (429, {}), (200, {"ok": 1})]
        data = post_json(
            f"{server}/x", {}, headers={}, timeout=5, max_retries=3, sleep=no_sleep
        )
        assert data == {"ok": 1}
        assert len(ScriptedHandler.requests_seen) == 3
        assert no_sleep.delays == [1.0, 2.0]

    def test_exhausted_retries_raise_transport_error(self, server):
        ScriptedHandler.script = [(503, {}), (503, {}), (503, {})]
        with pytest.raises(TransportError, match="after 3 attempts"):
            post_json(f"{server}/x", {}, headers={}, timeout=5, max_retries=2, sleep=no_sleep)
        assert no_sleep.delays == [1.0, 2.0]

    @pytest.mark.parametrize("status", [401, 403])
    def test_auth_failures_never_retry(self, server, status):
        ScriptedHandler.script = [(status, {})]
        with pytest.raises(AuthenticationError) as exc:
            post_json(f"{server}/x", {}, headers={}, timeout=5, max_retries=5, sleep=no_sleep)
        assert exc.value.status == status
        assert len(ScriptedHandler.requests_seen) == 1
        assert no_sleep.delays == []

    def test_client_errors_fail_without_retry(self, server):
        ScriptedHandler.script = [(404, {"error": "nope"})]
        with pytest.raises(TransportError) as exc:
            post_json(f"{server}/x", {}, headers={}, timeout=5, max_retries=3, sleep=no_sleep)
        assert exc.value.status == 404
        assert len(ScriptedHandler.requests_seen) == 1

    def test_non_json_body_raises(self, server):
        ScriptedHandler.script = [(200, "this is not json")]
        with pytest.raises(TransportError, match="non-JSON"):
            post_json(f"{server}/x", {}, headers={}, timeout=5, max_retries=0)

    def test_connection_error_retries_then_fails(self):
        with pytest.raises(TransportError, match="failed after 2 attempts"):
            post_json(
                "http://127.0.0.1:9",  # discard port, nothing listens
                {},
                headers={},
                timeout=0.5,
                max_retries=1,
                sleep=no_sleep,
            )
        assert no_sleep.delays == [1.0]

    def test_backoff_base_scales_delays(self, server):
        ScriptedHandler.script = [(500, {}), (500, {}), (200, {})]
        post_json(
            f"{server}/x",
            {},
            headers={},
            timeout=5,
            max_retries=2,
            backoff_base=0.25,
            sleep=no_sleep,
        )
        assert no_sleep.delays == [0.25, 0.5]


class TestRedact:
    def test_masks_authorization(self):
        headers = {"Authorization": "Bearer sk-secret", "X-Other": "keep"}
        cleaned = redact(headers)
        assert cleaned == {"Authorization": "Bearer ***", "X-Other": "keep"}
        assert headers["Authorization"] == "Bearer sk-secret"

    def test_no_auth_header_untouched(self):
        assert redact({"A": "b"}) == {"A": "b"}
