"""Canonical JSON serialization and content hashing.

Every document persisted by the store and every content-addressed package
uses the same byte representation: UTF-8, sorted keys, no insignificant
whitespace. Hashes computed over that representation are stable across
runs and across processes.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_bytes(value: Any) -> bytes:
    return canonical_json(value).encode("utf-8")


def content_hash(value: Any) -> str:
    """sha256 hex digest of the canonical encoding."""
    return hashlib.sha256(canonical_bytes(value)).hexdigest()
