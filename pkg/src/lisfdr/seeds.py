"""Seed derivation.

Every random stream is keyed by ``child_seed = hash64(parent_seed, label, index)``
where ``hash64`` is the first 8 bytes (little endian) of BLAKE2b over
``"<parent>:<label>:<index>"``. Streams therefore do not depend on call order.
"""

import hashlib

import numpy as np


def hash64(parent_seed: int, label: str, index: int = 0) -> int:
    key = f"{int(parent_seed)}:{label}:{int(index)}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def child_seed(parent_seed: int, label: str, index: int = 0) -> int:
    return hash64(parent_seed, label, index)


def rng(seed: int, label: str = "rng", index: int = 0) -> np.random.Generator:
    return np.random.default_rng(hash64(seed, label, index))


def kernel_seed(seed: int, label: str, index: int = 0) -> int:
    """32-bit seed for the compiled samplers."""
    return hash64(seed, label, index) & 0xFFFFFFFF
