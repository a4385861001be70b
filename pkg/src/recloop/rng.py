"""Counter-based random substreams.

Every user owns a Philox stream keyed by ``(master_seed, stream)`` whose
counter starts at a block reserved for that user's index. Streams never
overlap, and a user's draws do not depend on how many other users exist
or on which worker simulates it.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1

#: stream tag for per-user recommendation draws
RECOMMENDATIONS = 0
#: reserved stream for the bias / initial opinion draws (index -1 in the docs)
BIASES = MASK64
#: stream for oracle-side draws (reference samples of limit laws)
ORACLE = 2


def substream(master_seed: int, stream: int, index: int = 0) -> np.random.Generator:
    key = np.array([int(master_seed) & MASK64, int(stream) & MASK64], dtype=np.uint64)
    counter = np.array([0, 0, 0, int(index) & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from an arbitrary tuple of ints/floats/strings."""
    text = ":".join(repr(p) for p in parts)
    digest = hashlib.blake2b(text.encode("ascii"), digest_size=8).digest()
    return int.from_bytes(digest, "big")
