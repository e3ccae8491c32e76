"""Chameleon signcryption with public verifiability.

Sender A signs by opening her chameleon hash ``h_A`` twice: once to the
plaintext (hidden inside ``Z``) and once to ``H3(K, Z, y_B)``, which anyone
can recompute. The second opening ``R''`` is what makes the ciphertext
publicly attributable to the pair (A, B) without decrypting it.

Wire format of a ciphertext::

    profile tag | n (u32 BE, bits) | K (48 B) | Z ((n + l) / 8 B) | R'' (48 B)

Hybrid envelope::

    kem ciphertext (n = 128) | nonce (12 B) | AES-128-GCM(payload, aad=kem)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import group
from .chameleon import check, open_to
from .group import GroupElement, h2, h3
from .rng import Rng, resolve

KEY_BITS = 128
NONCE_BYTES = 12


class SigncryptionFailure(Exception):
    """De-signcryption failed. Deliberately carries no cause."""

    def __init__(self) -> None:
        super().__init__("de-signcryption failed")


def _xor(a: bytes, b: bytes) -> bytes:
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")


@dataclass(frozen=True)
class Ciphertext:
    K: GroupElement
    Z: bytes
    Rpp: GroupElement

    @property
    def n_bits(self) -> int:
        return 8 * len(self.Z) - group.L_BITS

    def to_bytes(self) -> bytes:
        return b"".join(
            [
                group.profile_tag(),
                struct.pack(">I", self.n_bits),
                self.K.to_bytes(),
                self.Z,
                self.Rpp.to_bytes(),
            ]
        )

    @classmethod
    def parse(cls, buf: bytes, offset: int = 0) -> tuple["Ciphertext", int]:
        """Decode a ciphertext starting at ``offset``; return it and the end offset."""
        _, off = group.read_profile_tag(buf, offset)
        if len(buf) < off + 4:
            raise group.DecodeError("truncated ciphertext header")
        (n_bits,) = struct.unpack_from(">I", buf, off)
        off += 4
        if n_bits == 0 or n_bits % 8:
            raise group.DecodeError("message length must be a positive whole number of bytes")
        L = group.L_BYTES
        z_len = (n_bits + group.L_BITS) // 8
        end = off + L + z_len + L
        if len(buf) < end:
            raise group.DecodeError("truncated ciphertext")
        K = group.decode_element(buf[off : off + L])
        Z = bytes(buf[off + L : off + L + z_len])
        Rpp = group.decode_element(buf[end - L : end])
        return cls(K, Z, Rpp), end

    @classmethod
    def from_bytes(cls, buf: bytes) -> "Ciphertext":
        ct, end = cls.parse(buf)
        if end != len(buf):
            raise group.DecodeError("trailing bytes after ciphertext")
        return ct


@dataclass(frozen=True)
class OpenedMessage:
    M: bytes
    R: GroupElement


def _coerce(ct: Ciphertext | bytes) -> Ciphertext:
    if isinstance(ct, Ciphertext):
        return ct
    return Ciphertext.from_bytes(ct)


def sc(sk_A: int, h_A: GroupElement, M: bytes, pk_B: GroupElement, rng: Rng | None = None) -> Ciphertext:
    """Signcrypt ``M`` from the holder of ``sk_A`` (hash ``h_A``) to ``pk_B``."""
    if sk_A % group.Q == 0:
        raise ValueError("sender secret key is zero")
    if not M:
        raise ValueError("message must be non-empty")
    n = 8 * len(M)
    y_B = pk_B.primary()
    k = group.random_scalar(resolve(rng))
    K = group.g_pow(k).primary()
    R1 = open_to(sk_A, h_A, M)
    Z = _xor(M + R1.to_bytes(), h2(K, y_B, y_B ** k, n + group.L_BITS))
    M2 = h3(K, Z, y_B, n)
    Rpp = open_to(sk_A, h_A, M2)
    return Ciphertext(K, Z, Rpp)


def vc(
    pk_A: GroupElement,
    ct: Ciphertext | bytes,
    h_A: GroupElement,
    M_pub: bytes,
    R_pub: GroupElement,
    pk_B: GroupElement,
) -> bool:
    """Public verification: was ``ct`` produced by A (owner of ``h_A``) for B?"""
    try:
        ct = _coerce(ct)
    except group.DecodeError:
        return False
    if not check(pk_A, h_A, M_pub, R_pub):
        return False
    return check(pk_A, h_A, h3(ct.K, ct.Z, pk_B.primary()), ct.Rpp)


def dsc(pk_A: GroupElement, ct: Ciphertext | bytes, h_A: GroupElement, sk_B: int) -> OpenedMessage:
    """Open and verify; raises :class:`SigncryptionFailure` on any problem."""
    if sk_B % group.Q == 0:
        raise ValueError("receiver secret key is zero")
    try:
        ct = _coerce(ct)
    except group.DecodeError:
        raise SigncryptionFailure() from None
    y_B = group.g_pow(sk_B).primary()
    if not check(pk_A, h_A, h3(ct.K, ct.Z, y_B), ct.Rpp):
        raise SigncryptionFailure()
    plain = _xor(ct.Z, h2(ct.K, y_B, ct.K ** sk_B, 8 * len(ct.Z)))
    M, R_raw = plain[: -group.L_BYTES], plain[-group.L_BYTES :]
    try:
        R = group.decode_element(R_raw)
    except group.DecodeError:
        raise SigncryptionFailure() from None
    if not check(pk_A, h_A, M, R):
        raise SigncryptionFailure()
    return OpenedMessage(M, R)


# -- hybrid envelope -------------------------------------------------------


@dataclass(frozen=True)
class HybridEnvelope:
    kem: Ciphertext
    nonce: bytes
    dem: bytes

    def to_bytes(self) -> bytes:
        return self.kem.to_bytes() + self.nonce + self.dem

    @classmethod
    def from_bytes(cls, buf: bytes) -> "HybridEnvelope":
        kem, off = Ciphertext.parse(buf)
        if kem.n_bits != KEY_BITS:
            raise group.DecodeError("envelope key block must carry a 128-bit key")
        if len(buf) < off + NONCE_BYTES + 16:
            raise group.DecodeError("truncated envelope")
        return cls(kem, bytes(buf[off : off + NONCE_BYTES]), bytes(buf[off + NONCE_BYTES :]))


def seal_hybrid(
    sk_A: int, h_A: GroupElement, payload: bytes, pk_B: GroupElement, rng: Rng | None = None
) -> HybridEnvelope:
    rng = resolve(rng)
    key = rng.token_bytes(KEY_BITS // 8)
    kem = sc(sk_A, h_A, key, pk_B, rng)
    nonce = rng.token_bytes(NONCE_BYTES)
    dem = AESGCM(key).encrypt(nonce, payload, kem.to_bytes())
    return HybridEnvelope(kem, nonce, dem)


def open_hybrid(pk_A: GroupElement, env: HybridEnvelope | bytes, h_A: GroupElement, sk_B: int) -> bytes:
    if not isinstance(env, HybridEnvelope):
        try:
            env = HybridEnvelope.from_bytes(env)
        except group.DecodeError:
            raise SigncryptionFailure() from None
    opened = dsc(pk_A, env.kem, h_A, sk_B)
    try:
        return AESGCM(opened.M).decrypt(env.nonce, env.dem, env.kem.to_bytes())
    except InvalidTag:
        raise SigncryptionFailure() from None
