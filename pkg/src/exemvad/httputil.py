"""Shared HTTP plumbing for backend requests: JSON POST with retry and backoff."""

from __future__ import annotations

import time

import requests

from .errors import TransportError

RETRYABLE_STATUS = {429, 500, 502, 503, 504}


def post_json(
    url: str,
    payload: dict,
    api_key: str | None = None,
    timeout: float = 60.0,
    max_retries: int = 4,
    backoff_base: float = 0.5,
    sleep=time.sleep,
) -> dict:
    """POST a JSON payload, retrying transient failures with exponential backoff.

    Retries connection errors, timeouts, and 429/5xx responses; other HTTP error
    codes fail immediately. Raises TransportError once retries are exhausted.
    """
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    last_error: Exception | None = None
    for attempt in range(max_retries + 1):
        if attempt:
            sleep(backoff_base * (2 ** (attempt - 1)))
        try:
            resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
        except requests.RequestException as exc:
            last_error = exc
            continue
        if resp.status_code in RETRYABLE_STATUS:
            last_error = TransportError(f"{url} returned {resp.status_code}")
            continue
        if resp.status_code != 200:
            raise TransportError(f"{url} returned {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise TransportError(f"{url} returned non-JSON body") from exc
    raise TransportError(f"{url} unreachable after {max_retries + 1} attempts: {last_error}")
