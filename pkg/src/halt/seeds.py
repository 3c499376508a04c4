"""Named substreams derived from a single run seed."""

from __future__ import annotations

import hashlib


def derive_seed(seed: int, stream: str) -> int:
    """Derive a 63-bit seed for a named substream of the master seed.

    Stable across platforms and Python versions (blake2b, not hash()).
    """
    digest = hashlib.blake2b(f"{seed}:{stream}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1
