"""Canonical JSON serialization and content digests.

One serializer for everything that needs to be byte-deterministic: bundles,
API bodies, the sync wire format, event-log lines and snapshots. Canonical
form is UTF-8, object keys sorted lexicographically, no insignificant
whitespace, arrays order-significant.
"""

from __future__ import annotations

import hashlib
import json
import secrets
from typing import Any


def canonical_dumps(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_bytes(value: Any) -> bytes:
    return canonical_dumps(value).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_of(value: Any) -> str:
    """Hex digest of the canonical serialization of ``value``."""
    return sha256_hex(canonical_bytes(value))


def new_id() -> str:
    """URL-safe random 128-bit identifier.

    Never starts with '-' so ids stay usable as CLI positional arguments.
    """
    while True:
        token = secrets.token_urlsafe(16)
        if not token.startswith("-"):
            return token
