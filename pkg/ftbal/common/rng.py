"""
Named, splittable random streams

Every consumer of randomness (weight init, dropout, epsilon-greedy,
replay sampling, trace synthesis) draws from its own child stream so that
adding draws in one place never shifts the sequence seen by another.
"""

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


ALGORITHM = "philox4x64"


def derive_seed(seed: int, *names: object) -> int:
    """Stable 64-bit seed for (seed, names...), identical on every platform"""
    payload = "/".join([str(int(seed))] + [str(n) for n in names]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")


@dataclass
class RngStream:
    """Seeded counter-based random stream"""

    seed: int
    algorithm: str = ALGORITHM
    _generator: Optional[np.random.Generator] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.algorithm != ALGORITHM:
            raise ValueError(f"unsupported rng algorithm: {self.algorithm}")
        self.seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            self._generator = np.random.Generator(np.random.Philox(key=self.seed))
        return self._generator

    def child(self, *names: object) -> "RngStream":
        """Independent sub-stream identified by names"""
        return RngStream(derive_seed(self.seed, *names), self.algorithm)

    # thin pass-throughs used across the package
    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def random(self, size=None):
        return self.generator.random(size)

    def poisson(self, lam=1.0, size=None):
        return self.generator.poisson(lam, size)

    def permutation(self, n):
        return self.generator.permutation(n)

    def choice(self, a, size=None, replace=True):
        return self.generator.choice(a, size=size, replace=replace)
