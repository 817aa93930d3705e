"""Deterministic seed derivation: one base seed, named sub-streams."""

import hashlib


def derive_seed(base: int, *keys) -> int:
    """A 63-bit seed from ``base`` and any keys with a stable ``str``."""
    text = "\x1f".join([str(int(base))] + [str(k) for k in keys])
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big") >> 1
