"""Mock iris pipeline: templates, noisy samples, Hamming matching, watermarking.

Codes are F-bit vectors held as ``bytes`` (MSB-first). The challenge
watermark is appended after the feature bits; matching only ever reads the
feature part, so embedding cannot change a match decision.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

from .rng import Rng, resolve

FEATURE_BITS = 2048
FEATURE_BYTES = FEATURE_BITS // 8
MARK_BITS = 128
MARK_BYTES = MARK_BITS // 8
MATCH_THRESHOLD = 0.32


class BiometricError(ValueError):
    pass


def _pack(code: bytes) -> bytes:
    return struct.pack(">I", 8 * len(code)) + code


def _unpack(buf: bytes) -> bytes:
    if len(buf) < 4:
        raise BiometricError("truncated iris code")
    (bits,) = struct.unpack_from(">I", buf)
    if bits != FEATURE_BITS or len(buf) != 4 + FEATURE_BYTES:
        raise BiometricError(f"iris code must be {FEATURE_BITS} bits")
    return bytes(buf[4:])


@dataclass(frozen=True)
class IrisTemplate:
    code: bytes
    subject_seed: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if len(self.code) != FEATURE_BYTES:
            raise BiometricError(f"iris code must be {FEATURE_BITS} bits")

    def to_bytes(self) -> bytes:
        return _pack(self.code)

    @classmethod
    def from_bytes(cls, buf: bytes) -> "IrisTemplate":
        return cls(_unpack(buf))


@dataclass(frozen=True)
class IrisSample:
    code: bytes

    def __post_init__(self) -> None:
        if len(self.code) != FEATURE_BYTES:
            raise BiometricError(f"iris code must be {FEATURE_BITS} bits")

    def to_bytes(self) -> bytes:
        return _pack(self.code)

    @classmethod
    def from_bytes(cls, buf: bytes) -> "IrisSample":
        return cls(_unpack(buf))


@dataclass(frozen=True)
class MarkedSample:
    feature: bytes
    mark: bytes

    def to_bytes(self) -> bytes:
        return self.feature + self.mark

    @classmethod
    def from_bytes(cls, buf: bytes) -> "MarkedSample":
        if len(buf) != FEATURE_BYTES + MARK_BYTES:
            raise BiometricError("marked sample has the wrong length")
        return cls(bytes(buf[:FEATURE_BYTES]), bytes(buf[FEATURE_BYTES:]))


def enroll(subject_seed: str | bytes) -> IrisTemplate:
    """Deterministic pseudo-random template standing in for iris capture."""
    seed = subject_seed.encode() if isinstance(subject_seed, str) else subject_seed
    code = hashlib.shake_256(b"antidisguise/iris/" + seed).digest(FEATURE_BYTES)
    label = subject_seed if isinstance(subject_seed, str) else subject_seed.hex()
    return IrisTemplate(code, label)


def sample(template: IrisTemplate, noise_rate: float, rng: Rng | None = None) -> IrisSample:
    if not 0.0 <= noise_rate < 0.5:
        raise BiometricError("noise rate must be in [0, 0.5)")
    rng = resolve(rng)
    mask = 0
    if noise_rate > 0:
        for i in range(FEATURE_BITS):
            if rng.random() < noise_rate:
                mask |= 1 << i
    code = int.from_bytes(template.code, "big") ^ mask
    return IrisSample(code.to_bytes(FEATURE_BYTES, "big"))


def hamming_distance(a: bytes, b: bytes) -> float:
    if len(a) != len(b):
        raise BiometricError("iris codes differ in length")
    diff = int.from_bytes(a, "big") ^ int.from_bytes(b, "big")
    return bin(diff).count("1") / (8 * len(a))


def match(probe: IrisSample | MarkedSample, template: IrisTemplate, threshold: float = MATCH_THRESHOLD) -> bool:
    feature = probe.feature if isinstance(probe, MarkedSample) else probe.code
    return hamming_distance(feature, template.code) <= threshold


def embed(s: IrisSample, challenge: bytes) -> MarkedSample:
    if len(challenge) != MARK_BYTES:
        raise BiometricError(f"challenge must be {MARK_BITS} bits")
    return MarkedSample(s.code, bytes(challenge))


def extract(marked: MarkedSample | bytes) -> tuple[IrisSample, bytes]:
    if not isinstance(marked, MarkedSample):
        marked = MarkedSample.from_bytes(marked)
    return IrisSample(marked.feature), marked.mark
