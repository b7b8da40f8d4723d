"""Keyed counter-based random streams.

Every consumer of randomness derives its own child stream from the master
seed and a textual role ("sampler:points", "replica:17", ...).  The role
is hashed into the spawn key of a SeedSequence feeding a Philox generator,
so streams are independent of each other, of thread count, and of the
order in which they are created.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np


def child_sequence(master_seed: int, role: str) -> np.random.SeedSequence:
    digest = hashlib.blake2s(role.encode("utf-8"), digest_size=16).digest()
    words = struct.unpack("<4I", digest)
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=words)


def generator(master_seed: int, role: str) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(child_sequence(master_seed, role)))
