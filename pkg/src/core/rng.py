"""
Deterministic random streams.

All randomness goes through numpy's Philox4x64-10 counter-based bit
generator, keyed directly by the seed (no seed hashing), so a given seed
yields the same raw stream on every platform. Independent sub-streams are
keyed by the seed in the low 64 key bits and a stable hash of a path such as
("scene", 17) in the high 64 bits.
"""
import hashlib
import json

import numpy as np

from src.core.errors import ConfigError

SEED_LIMIT = 2 ** 64


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) < SEED_LIMIT:
        raise ConfigError(f"seed must be in [0, 2**64), got {seed}")
    return int(seed)


def stream_id(*path):
    """Stable 64-bit identifier for a sub-stream path."""
    payload = json.dumps([str(p) if not isinstance(p, (int, str)) else p for p in path]).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def seeded_rng(seed):
    """Generator whose stream depends only on the seed."""
    return np.random.Generator(np.random.Philox(key=check_seed(seed)))


def derive_rng(seed, *path):
    """Keyed sub-stream; identical (seed, path) pairs give identical streams."""
    if not path:
        return seeded_rng(seed)
    key = check_seed(seed) | (stream_id(*path) << 64)
    return np.random.Generator(np.random.Philox(key=key))
