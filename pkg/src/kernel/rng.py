"""
Seeded random streams.

One master stream per run plus one substream per entity, derived from the
run seed and the entity's stable registration index. Substreams never depend
on event interleaving, so adding an entity does not perturb the others.
"""

import hashlib
import random

RandomStream = random.Random

SEED_MASK = (1 << 64) - 1


def derive_seed(seed: int, index: int) -> int:
    # Stable hashing; the builtin hash() is salted per process.
    digest = hashlib.sha256(f"{seed & SEED_MASK}:{index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def master_stream(seed: int) -> RandomStream:
    return random.Random(seed & SEED_MASK)


def substream(seed: int, index: int) -> RandomStream:
    return random.Random(derive_seed(seed, index))
