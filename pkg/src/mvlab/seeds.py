"""Deterministic random streams and content hashing.

Every source of randomness in the package is a counter-based Philox stream
whose key is a pure function of an integer/string tag tuple. Distinct tuples
give independent streams, so work scheduled in any order (threads, reruns,
member subsets) reproduces identical draws.
"""
from __future__ import annotations

import hashlib
import json

import numpy as np

__all__ = ["stream", "derive_seed", "content_hash"]


def _digest(keys: tuple) -> bytes:
    payload = repr(tuple(keys)).encode("utf-8")
    return hashlib.sha256(payload).digest()


def stream(*keys) -> np.random.Generator:
    """Philox generator keyed by the tag tuple. Pure function of its arguments."""
    if not keys:
        raise ValueError("stream requires at least one key")
    key = np.frombuffer(_digest(keys)[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(*keys) -> int:
    """Stable 63-bit integer sub-seed for the tag tuple."""
    if not keys:
        raise ValueError("derive_seed requires at least one key")
    return int.from_bytes(_digest(keys)[:8], "big") >> 1


def content_hash(doc) -> str:
    """Short stable hash of a JSON-compatible document."""
    payload = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
