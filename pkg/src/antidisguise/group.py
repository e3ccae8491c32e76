"""Bilinear group, scalar field, hash functions and element encodings.

Backed by BLS12-381 through mcl (``pymcl``). The scheme is written for a
symmetric pairing; on an asymmetric curve only the generator and public keys
ever sit in the second pairing slot, so those carry a G2 "dual" half with the
same discrete log while every other element lives in G1 alone.

Encodings
---------
* G1 element: 48 bytes, mcl's compressed form (little-endian x, top bit =
  y parity). All-zero bytes decode to the identity element.
* dual element: G1 encoding followed by the 96-byte G2 encoding.
* scalar: 32-byte big-endian integer in ``[0, q)``.

``h1`` is the RFC 9380 ``BLS12381G1_XMD:SHA-256_SSWU_RO_`` suite; ``h2`` and
``h3`` are SHAKE256 under distinct domain tags.
"""

from __future__ import annotations

import functools
import hashlib
import struct
from dataclasses import dataclass

from py_ecc.bls.hash_to_curve import hash_to_G1
from py_ecc.optimized_bls12_381 import normalize
from pymcl import G1, G2, GT, Fr, g1 as _G1_GEN, g2 as _G2_GEN, pairing as _pairing, r as _ORDER

from .rng import Rng, resolve

PROFILE_NAME = "BLS12-381/CHSC-v1"
SUPPORTED_SECURITY = (128,)

Q = _ORDER
L_BITS = 384
L_BYTES = L_BITS // 8
G2_BYTES = 96
DUAL_BYTES = L_BYTES + G2_BYTES
SCALAR_BYTES = (Q.bit_length() + 7) // 8

H1_DST = b"ANTIDISGUISE-V01-CS01-with-BLS12381G1_XMD:SHA-256_SSWU_RO_"
H2_TAG = b"ANTIDISGUISE-V01-H2"
H3_TAG = b"ANTIDISGUISE-V01-H3"


class DecodeError(ValueError):
    """Bytes do not encode a valid element of the expected group."""


def _fr(k: int) -> Fr:
    return Fr(str(k % Q))


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Element of the source group, optionally with its G2 dual half.

    Written multiplicatively: ``a * b``, ``a / b``, ``a ** k``.
    """

    point: G1
    dual: G2 | None = None

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        dual = None
        if self.dual is not None and other.dual is not None:
            dual = self.dual + other.dual
        return GroupElement(self.point + other.point, dual)

    def __truediv__(self, other: "GroupElement") -> "GroupElement":
        dual = None
        if self.dual is not None and other.dual is not None:
            dual = self.dual - other.dual
        return GroupElement(self.point - other.point, dual)

    def __pow__(self, k: int) -> "GroupElement":
        f = _fr(k)
        return GroupElement(self.point * f, None if self.dual is None else self.dual * f)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.point == other.point

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def __repr__(self) -> str:
        tag = "+dual" if self.dual is not None else ""
        return f"GroupElement({self.to_bytes().hex()[:16]}..{tag})"

    @property
    def has_dual(self) -> bool:
        return self.dual is not None

    def is_identity(self) -> bool:
        return self.point.is_zero()

    def primary(self) -> "GroupElement":
        return GroupElement(self.point)

    def to_bytes(self) -> bytes:
        return encode_element(self)

    def dual_bytes(self) -> bytes:
        return encode_dual(self)


@dataclass(frozen=True, eq=False)
class TargetElement:
    value: GT

    def __mul__(self, other: "TargetElement") -> "TargetElement":
        return TargetElement(self.value * other.value)

    def __pow__(self, k: int) -> "TargetElement":
        return TargetElement(self.value ** _fr(k))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TargetElement):
            return NotImplemented
        return self.value == other.value

    def __hash__(self) -> int:
        return hash(self.value.serialize())

    def is_identity(self) -> bool:
        return self.value.is_one()


@dataclass(frozen=True)
class SystemParams:
    name: str
    security: int
    q: int
    g: GroupElement
    l_bits: int
    h1_dst: bytes
    h2_tag: bytes
    h3_tag: bytes

    def to_bytes(self) -> bytes:
        parts = [
            profile_tag(self.name),
            struct.pack(">H", self.security),
            self.q.to_bytes(SCALAR_BYTES, "big"),
            self.g.dual_bytes(),
            struct.pack(">I", self.l_bits),
        ]
        for tag in (self.h1_dst, self.h2_tag, self.h3_tag):
            parts.append(struct.pack(">H", len(tag)) + tag)
        return b"".join(parts)


GENERATOR = GroupElement(_G1_GEN, _G2_GEN)
IDENTITY = GroupElement(_G1_GEN * Fr(0))

_PARAMS = SystemParams(
    name=PROFILE_NAME,
    security=128,
    q=Q,
    g=GENERATOR,
    l_bits=L_BITS,
    h1_dst=H1_DST,
    h2_tag=H2_TAG,
    h3_tag=H3_TAG,
)


def setup(security_param: int = 128) -> SystemParams:
    if security_param not in SUPPORTED_SECURITY:
        raise ValueError(
            f"unsupported security parameter {security_param}; supported: {SUPPORTED_SECURITY}"
        )
    return _PARAMS


def profile_tag(name: str = PROFILE_NAME) -> bytes:
    raw = name.encode("ascii")
    return bytes([len(raw)]) + raw


def read_profile_tag(buf: bytes, offset: int = 0) -> tuple[str, int]:
    if offset >= len(buf):
        raise DecodeError("missing profile tag")
    n = buf[offset]
    end = offset + 1 + n
    if end > len(buf):
        raise DecodeError("truncated profile tag")
    name = buf[offset + 1 : end].decode("ascii", errors="replace")
    if name != PROFILE_NAME:
        raise DecodeError(f"unknown parameter profile {name!r}")
    return name, end


# -- scalars ---------------------------------------------------------------


def random_scalar(rng: Rng | None = None, *, nonzero: bool = True) -> int:
    rng = resolve(rng)
    if nonzero:
        return 1 + rng.randbelow(Q - 1)
    return rng.randbelow(Q)


def scalar_inverse(k: int) -> int:
    k %= Q
    if k == 0:
        raise ZeroDivisionError("zero scalar has no inverse")
    return pow(k, -1, Q)


def encode_scalar(k: int) -> bytes:
    if not 0 <= k < Q:
        raise ValueError("scalar out of range")
    return k.to_bytes(SCALAR_BYTES, "big")


def decode_scalar(b: bytes) -> int:
    if len(b) != SCALAR_BYTES:
        raise DecodeError(f"scalar must be {SCALAR_BYTES} bytes")
    k = int.from_bytes(b, "big")
    if k >= Q:
        raise DecodeError("scalar not reduced")
    return k


# -- group operations ------------------------------------------------------


def g_pow(k: int) -> GroupElement:
    """``g^k`` with both halves."""
    return GENERATOR ** k


def random_element(rng: Rng | None = None) -> GroupElement:
    return GroupElement(_G1_GEN * _fr(random_scalar(rng, nonzero=False)))


def pair(a: GroupElement, b: GroupElement) -> TargetElement:
    if b.dual is None:
        raise ValueError("second pairing argument needs a dual (G2) half")
    return TargetElement(_pairing(a.point, b.dual))


def dual_consistent(e: GroupElement) -> bool:
    if e.dual is None:
        return False
    return _pairing(e.point, _G2_GEN) == _pairing(_G1_GEN, e.dual)


# -- hashes ----------------------------------------------------------------


@functools.lru_cache(maxsize=8192)
def _h1_cached(message: bytes, dst: bytes) -> G1:
    x, y = normalize(hash_to_G1(message, dst, hashlib.sha256))
    return G1(f"1 {x.n} {y.n}")


def h1(message: bytes, dst: bytes = H1_DST) -> GroupElement:
    return GroupElement(_h1_cached(bytes(message), dst))


def _check_bits(out_bits: int) -> int:
    if out_bits <= 0:
        raise ValueError("output length must be positive")
    if out_bits % 8:
        raise ValueError("output length must be a whole number of bytes")
    return out_bits // 8


def h2(K: GroupElement, y: GroupElement, s: GroupElement, out_bits: int) -> bytes:
    n = _check_bits(out_bits)
    xof = hashlib.shake_256(H2_TAG)
    for e in (K, y, s):
        xof.update(encode_element(e))
    return xof.digest(n)


def h3(K: GroupElement, Z: bytes, y: GroupElement, out_bits: int | None = None) -> bytes:
    z_bits = 8 * len(Z)
    if z_bits <= L_BITS:
        raise ValueError("Z must be longer than one element encoding")
    if out_bits is None:
        out_bits = z_bits - L_BITS
    if out_bits != z_bits - L_BITS:
        raise ValueError("h3 output length must equal bitlen(Z) - l")
    n = _check_bits(out_bits)
    xof = hashlib.shake_256(H3_TAG)
    xof.update(encode_element(K))
    xof.update(struct.pack(">I", len(Z)) + Z)
    xof.update(encode_element(y))
    return xof.digest(n)


# -- encodings -------------------------------------------------------------


def encode_element(e: GroupElement) -> bytes:
    return e.point.serialize()


def decode_element(b: bytes) -> GroupElement:
    if len(b) != L_BYTES:
        raise DecodeError(f"element encoding must be {L_BYTES} bytes, got {len(b)}")
    try:
        p = G1.deserialize(bytes(b))
    except (ValueError, RuntimeError) as exc:
        raise DecodeError("not a point of the prime-order subgroup") from exc
    # mcl loads non-canonical x (>= p) silently on some builds; reject it here
    if p.serialize() != b:
        raise DecodeError("non-canonical element encoding")
    return GroupElement(p)


def encode_dual(e: GroupElement) -> bytes:
    if e.dual is None:
        raise ValueError("element has no dual half")
    return e.point.serialize() + e.dual.serialize()


def decode_dual(b: bytes) -> GroupElement:
    if len(b) != DUAL_BYTES:
        raise DecodeError(f"dual encoding must be {DUAL_BYTES} bytes")
    primary = decode_element(b[:L_BYTES])
    try:
        dual = G2.deserialize(bytes(b[L_BYTES:]))
    except (ValueError, RuntimeError) as exc:
        raise DecodeError("invalid G2 half") from exc
    if dual.serialize() != b[L_BYTES:]:
        raise DecodeError("non-canonical G2 encoding")
    e = GroupElement(primary.point, dual)
    if not dual_consistent(e):
        raise DecodeError("dual halves have different discrete logs")
    return e
