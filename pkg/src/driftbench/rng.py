"""Deterministic random-stream derivation.

All randomness in the toolkit flows from numpy's PCG64 generator, which is
a named, documented algorithm with platform-stable output.  Every consumer
derives its own stream from one top-level 64-bit seed plus a list of
labels, so a single seed reproduces an entire pipeline run bit for bit.

Derivation rule: string labels are folded to 32-bit integers with CRC-32,
integer labels are used as-is, and the sequence ``[seed, key_1, key_2, ...]``
is fed to ``numpy.random.SeedSequence``.
"""

import zlib

import numpy as np


def _key(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label)
    if isinstance(label, str):
        return zlib.crc32(label.encode("utf-8"))
    raise TypeError(f"stream label must be int or str, got {type(label).__name__}")


def seed_sequence(seed: int, *labels) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed)] + [_key(lab) for lab in labels])


def derive_seed(seed: int, *labels) -> int:
    """Fold (seed, labels...) into a single 64-bit child seed."""
    state = seed_sequence(seed, *labels).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def generator(seed: int, *labels) -> np.random.Generator:
    """A PCG64 generator on the stream named by (seed, labels...)."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *labels)))
