"""Chameleon hash and chameleon collision signatures.

``h = H1(M) * y^r`` with check value ``R = g^r``. A triple ``(h, M, R)`` is
compatible with ``y`` iff ``e(h / H1(M), g) == e(R, y)``. Whoever holds the
trapdoor ``x`` can open ``h`` to any other message ``M'`` with
``R' = (h / H1(M'))^(1/x)``; the two openings form a collision signature.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from . import group
from .group import GroupElement, h1, pair
from .rng import Rng


class IncompatibleTriple(ValueError):
    """The (h, M, R) opening does not check under the key."""


@dataclass(frozen=True, repr=False)
class KeyPair:
    sk: int
    pk: GroupElement

    def __post_init__(self) -> None:
        if not 0 < self.sk < group.Q:
            raise ValueError("secret key must be in [1, q)")
        if self.pk.dual is None:
            raise ValueError("public key must carry its dual half")

    def __repr__(self) -> str:
        return f"KeyPair(pk={self.pk!r})"

    @classmethod
    def from_secret(cls, sk: int) -> "KeyPair":
        return cls(sk, group.g_pow(sk))


@dataclass(frozen=True)
class ChameleonTriple:
    h: GroupElement
    M: bytes
    R: GroupElement

    def to_bytes(self) -> bytes:
        return b"".join(
            [
                group.profile_tag(),
                self.h.to_bytes(),
                struct.pack(">I", len(self.M)),
                self.M,
                self.R.to_bytes(),
            ]
        )

    @classmethod
    def from_bytes(cls, buf: bytes) -> "ChameleonTriple":
        _, off = group.read_profile_tag(buf)
        L = group.L_BYTES
        if len(buf) < off + L + 4:
            raise group.DecodeError("truncated chameleon triple")
        h = group.decode_element(buf[off : off + L])
        off += L
        (n,) = struct.unpack_from(">I", buf, off)
        off += 4
        if len(buf) != off + n + L:
            raise group.DecodeError("chameleon triple length mismatch")
        M = bytes(buf[off : off + n])
        R = group.decode_element(buf[off + n :])
        return cls(h, M, R)


def keygen(params: group.SystemParams | None = None, rng: Rng | None = None) -> KeyPair:
    return KeyPair.from_secret(group.random_scalar(rng))


def chameleon_hash(
    pk: GroupElement, M: bytes, rng: Rng | None = None, *, r: int | None = None
) -> tuple[GroupElement, GroupElement]:
    """Return ``(h, R)``. ``r`` pins the randomness (test hook)."""
    if r is None:
        r = group.random_scalar(rng, nonzero=False)
    h = h1(M) * pk.primary() ** r
    R = group.g_pow(r).primary()
    return h, R


def check(pk: GroupElement, h: GroupElement, M: bytes, R: GroupElement) -> bool:
    return pair(h / h1(M), group.GENERATOR) == pair(R, pk)


def collide(sk: int, h: GroupElement, M: bytes, R: GroupElement, M_new: bytes) -> GroupElement:
    """Forge the check value for ``M_new`` under the unchanged ``h``.

    The formula itself ignores ``(M, R)``; they are required and checked so a
    caller cannot silently extend a triple that never belonged to this key.
    """
    if sk % group.Q == 0:
        raise ValueError("secret key is zero")
    if not check(group.g_pow(sk), h, M, R):
        raise IncompatibleTriple("(h, M, R) is not compatible with the key")
    return open_to(sk, h, M_new)


def open_to(sk: int, h: GroupElement, M_new: bytes) -> GroupElement:
    """``(h / H1(M_new))^(1/sk)`` without the compatibility precondition."""
    return (h / h1(M_new)) ** group.scalar_inverse(sk)


def verify_collision(
    pk: GroupElement,
    h: GroupElement,
    M: bytes,
    R: GroupElement,
    M_new: bytes,
    R_new: GroupElement,
) -> bool:
    return check(pk, h, M, R) and check(pk, h, M_new, R_new)
