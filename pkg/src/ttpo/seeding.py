"""Deterministic derivation of independent per-instance random streams."""

from __future__ import annotations

import hashlib


def stream_seed(global_seed: int, purpose: str, round_index: int, instance_id: str) -> int:
    """Derive a child seed from a global seed and a structured stream key.

    Streams are keyed by what they feed (``purpose``, e.g. one experiment
    arm), the round of a multi-round run, and the instance, so changing one
    instance's parameters or adding instances never perturbs any other
    stream. The 128-bit digest feeds ``numpy.random.default_rng`` directly.
    """
    key = f"{global_seed}|{purpose}|{round_index}|{instance_id}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=16).digest(), "big")
