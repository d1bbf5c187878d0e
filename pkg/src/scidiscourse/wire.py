"""Shared HTTP plumbing for the OpenAI-compatible endpoints.

One POST helper with the retry policy used by both the chat and the
embeddings clients: exponential backoff on timeouts, connection faults,
429, and 5xx; immediate failure on auth errors so configuration bugs
surface before a batch burns through retries.
"""

from __future__ import annotations

import logging
import time
from typing import Callable

import requests

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://api.openai.com/v1"
RETRY_STATUSES = frozenset({429, 500, 502, 503, 504})
AUTH_STATUSES = frozenset({401, 403})


class WireError(Exception):
    """Base class for HTTP transport failures."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class AuthenticationError(WireError):
    """Rejected credentials or missing API key; never retried."""


class TransportError(WireError):
    """Request failed after exhausting retries, or a non-retryable status."""


def post_json(
    url: str,
    payload: dict,
    *,
    headers: dict[str, str],
    timeout: float,
    max_retries: int,
    backoff_base: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
    session: requests.Session | None = None,
) -> dict:
    """POST a JSON payload and return the decoded JSON response.

    Retries up to ``max_retries`` times with backoff 1s/2s/4s/... on
    transient failures only. ``sleep`` is injectable for tests.
    """
    send = (session or requests).post
    attempts = max_retries + 1
    last_error: str = "no attempt made"
    logger.debug("POST %s headers=%s payload=%s", url, redact(headers), payload)
    for attempt in range(attempts):
        if attempt:
            delay = backoff_base * (2 ** (attempt - 1))
            logger.debug("retrying %s in %.1fs (attempt %d/%d)", url, delay, attempt + 1, attempts)
            sleep(delay)
        try:
            resp = send(url, json=payload, headers=headers, timeout=timeout)
        except (requests.Timeout, requests.ConnectionError) as err:
            last_error = f"{type(err).__name__}: {err}"
            continue
        if resp.status_code in AUTH_STATUSES:
            raise AuthenticationError(
                f"authentication failed ({resp.status_code}) for {url}", status=resp.status_code
            )
        if resp.status_code in RETRY_STATUSES:
            last_error = f"HTTP {resp.status_code}"
            continue
        if resp.status_code >= 400:
            body = resp.text[:200]
            raise TransportError(
                f"HTTP {resp.status_code} from {url}: {body}", status=resp.status_code
            )
        try:
            data = resp.json()
        except ValueError as err:
            raise TransportError(f"non-JSON response from {url}: {err}") from None
        logger.debug("response from %s: %s", url, data)
        return data
    raise TransportError(f"request to {url} failed after {attempts} attempts: {last_error}")


def redact(headers: dict[str, str]) -> dict[str, str]:
    """Copy of headers safe for debug logs."""
    cleaned = dict(headers)
    if "Authorization" in cleaned:
        cleaned["Authorization"] = "Bearer ***"
    return cleaned
