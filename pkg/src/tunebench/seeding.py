"""Stable cross-platform seed derivation."""

from __future__ import annotations

import hashlib


def stable_seed(*parts) -> int:
    """A 64-bit seed derived deterministically from the given parts.

    Unlike hash(), the result is identical across processes and platforms.
    """
    text = "|".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")
