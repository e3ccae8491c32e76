"""Randomness source threaded through every randomized algorithm.

Production code draws from the OS CSPRNG. A seeded instance (``Rng(seed)``)
replays the same stream so CLI runs and transcripts are byte-reproducible;
it is deterministic and therefore NOT suitable for real keys.
"""

from __future__ import annotations

import random
import secrets


class Rng:
    def __init__(self, seed: int | str | bytes | None = None) -> None:
        self.seed = seed
        if seed is None:
            self._r: random.Random = secrets.SystemRandom()
        else:
            self._r = random.Random(seed)

    @property
    def seeded(self) -> bool:
        return self.seed is not None

    def randbelow(self, n: int) -> int:
        return self._r.randrange(n)

    def randbits(self, k: int) -> int:
        return self._r.getrandbits(k)

    def token_bytes(self, n: int) -> bytes:
        if n == 0:
            return b""
        return self._r.getrandbits(8 * n).to_bytes(n, "big")

    def random(self) -> float:
        return self._r.random()

    def fork(self, label: str) -> "Rng":
        """Derive an independent child stream (seeded mode stays reproducible)."""
        if self.seed is None:
            return Rng()
        return Rng(f"{self.seed}/{label}")


_default = Rng()


def default_rng() -> Rng:
    return _default


def resolve(rng: Rng | None) -> Rng:
    return _default if rng is None else rng
