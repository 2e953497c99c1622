"""Deterministic seed splitting.

Sub-seeds are derived by hashing the master seed with a stage label, so
changing the sample count of one stage never perturbs the random stream
of another.
"""
from __future__ import annotations

import hashlib


def derive_seed(master: int, label: str) -> int:
    """Stable 63-bit sub-seed for (master, label)."""
    digest = hashlib.sha256(f"{master}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1
