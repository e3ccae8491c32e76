"""User identity model: Mid, Hid, metaverse identity tokens, avatars, FI indices."""

from __future__ import annotations

import dataclasses
import datetime as _dt
import hashlib
import struct
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.serialization import Encoding, NoEncryption, PrivateFormat, PublicFormat

from . import group
from .biometric import IrisTemplate
from .chameleon import KeyPair, chameleon_hash, check, collide
from .group import GroupElement
from .rng import Rng, resolve

MID_FIELDS = (("country", 3), ("district", 6), ("date", 8), ("psn", 6))
MID_DIGITS = sum(w for _, w in MID_FIELDS)
HID_BYTES = 32


class IdentityError(ValueError):
    pass


def _digits(value: int | str, width: int, name: str) -> str:
    s = f"{value:0{width}d}" if isinstance(value, int) else str(value)
    if len(s) != width or not s.isascii() or not s.isdigit():
        raise IdentityError(f"{name} must be exactly {width} decimal digits, got {value!r}")
    return s


@dataclass(frozen=True)
class Mid:
    country: str
    district: str
    date: str
    psn: str

    def __post_init__(self) -> None:
        for name, width in MID_FIELDS:
            _digits(getattr(self, name), width, name)
        try:
            _dt.datetime.strptime(self.date, "%Y%m%d")
        except ValueError:
            raise IdentityError(f"date {self.date!r} is not a calendar date") from None

    def render(self) -> str:
        return self.country + self.district + self.date + self.psn

    def __str__(self) -> str:
        return self.render()


def mid_build(country: int | str, district: int | str, date: int | str, psn: int | str) -> Mid:
    return Mid(
        _digits(country, 3, "country"),
        _digits(district, 6, "district"),
        _digits(date, 8, "date"),
        _digits(psn, 6, "psn"),
    )


def mid_parse(digits: str) -> Mid:
    if len(digits) != MID_DIGITS or not digits.isascii() or not digits.isdigit():
        raise IdentityError(f"Mid must be {MID_DIGITS} decimal digits")
    out, pos = [], 0
    for _, width in MID_FIELDS:
        out.append(digits[pos : pos + width])
        pos += width
    return Mid(*out)


@dataclass(frozen=True)
class Hid:
    digest: bytes

    def __post_init__(self) -> None:
        if len(self.digest) != HID_BYTES:
            raise IdentityError("Hid digest must be 32 bytes")

    @property
    def hex(self) -> str:
        return self.digest.hex()

    def __str__(self) -> str:
        return self.hex

    @classmethod
    def from_hex(cls, s: str) -> "Hid":
        return cls(bytes.fromhex(s))


def hid_derive(mid: Mid) -> Hid:
    return Hid(hashlib.sha256(mid.render().encode("ascii")).digest())


# -- MIT -------------------------------------------------------------------


class Idp:
    """Mock identity provider signing MITs with Ed25519."""

    def __init__(self, signing_key: Ed25519PrivateKey) -> None:
        self._key = signing_key

    @classmethod
    def generate(cls, rng: Rng | None = None) -> "Idp":
        return cls(Ed25519PrivateKey.from_private_bytes(resolve(rng).token_bytes(32)))

    @classmethod
    def from_seed(cls, seed: bytes) -> "Idp":
        return cls(Ed25519PrivateKey.from_private_bytes(seed))

    def seed_bytes(self) -> bytes:
        return self._key.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption())

    @property
    def verify_key(self) -> Ed25519PublicKey:
        return self._key.public_key()

    def verify_key_bytes(self) -> bytes:
        return self.verify_key.public_bytes(Encoding.Raw, PublicFormat.Raw)

    def sign(self, data: bytes) -> bytes:
        return self._key.sign(data)


@dataclass(frozen=True)
class MIT:
    sn: int
    hid: Hid
    pk: GroupElement
    template: IrisTemplate
    issuer_sig: bytes

    def signed_bytes(self) -> bytes:
        return _mit_body(self.sn, self.hid, self.pk, self.template)

    def to_bytes(self) -> bytes:
        return self.signed_bytes() + struct.pack(">I", len(self.issuer_sig)) + self.issuer_sig

    @classmethod
    def from_bytes(cls, buf: bytes) -> "MIT":
        _, off = group.read_profile_tag(buf)
        need = off + 8 + HID_BYTES + group.DUAL_BYTES + 4
        if len(buf) < need:
            raise group.DecodeError("truncated MIT")
        (sn,) = struct.unpack_from(">Q", buf, off)
        off += 8
        hid = Hid(bytes(buf[off : off + HID_BYTES]))
        off += HID_BYTES
        pk = group.decode_dual(buf[off : off + group.DUAL_BYTES])
        off += group.DUAL_BYTES
        (tlen,) = struct.unpack_from(">I", buf, off)
        off += 4
        if len(buf) < off + tlen + 4:
            raise group.DecodeError("truncated MIT template")
        template = IrisTemplate.from_bytes(buf[off : off + tlen])
        off += tlen
        (slen,) = struct.unpack_from(">I", buf, off)
        off += 4
        if len(buf) != off + slen:
            raise group.DecodeError("MIT signature length mismatch")
        return cls(sn, hid, pk, template, bytes(buf[off:]))


def _mit_body(sn: int, hid: Hid, pk: GroupElement, template: IrisTemplate) -> bytes:
    if not 0 <= sn < 2**64:
        raise IdentityError("SN must fit in 64 bits")
    t = template.to_bytes()
    return b"".join(
        [
            group.profile_tag(),
            struct.pack(">Q", sn),
            hid.digest,
            pk.dual_bytes(),
            struct.pack(">I", len(t)),
            t,
        ]
    )


def mit_issue(idp: Idp, sn: int, mid: Mid, pk: GroupElement, template: IrisTemplate) -> MIT:
    hid = hid_derive(mid)
    sig = idp.sign(_mit_body(sn, hid, pk, template))
    return MIT(sn, hid, pk, template, sig)


def mit_verify(verify_key: Ed25519PublicKey, mit: MIT) -> bool:
    try:
        verify_key.verify(mit.issuer_sig, mit.signed_bytes())
    except (InvalidSignature, ValueError):
        return False
    return True


# -- avatars ---------------------------------------------------------------


@dataclass(frozen=True)
class Avatar:
    hid: Hid
    h: GroupElement
    M_a: bytes
    R_a: GroupElement
    pid: tuple[bytes, GroupElement] | None = None

    @property
    def vid(self) -> tuple[bytes, GroupElement]:
        return self.M_a, self.R_a

    def to_bytes(self) -> bytes:
        parts = [
            group.profile_tag(),
            self.hid.digest,
            self.h.to_bytes(),
            struct.pack(">I", len(self.M_a)),
            self.M_a,
            self.R_a.to_bytes(),
        ]
        if self.pid is None:
            parts.append(b"\x00")
        else:
            M2, R2 = self.pid
            parts += [b"\x01", struct.pack(">I", len(M2)), M2, R2.to_bytes()]
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, buf: bytes) -> "Avatar":
        L = group.L_BYTES
        _, off = group.read_profile_tag(buf)
        hid = Hid(bytes(buf[off : off + HID_BYTES]))
        off += HID_BYTES
        h = group.decode_element(buf[off : off + L])
        off += L
        (n,) = struct.unpack_from(">I", buf, off)
        off += 4
        M_a = bytes(buf[off : off + n])
        off += n
        R_a = group.decode_element(buf[off : off + L])
        off += L
        pid = None
        if buf[off] == 1:
            off += 1
            (n,) = struct.unpack_from(">I", buf, off)
            off += 4
            M2 = bytes(buf[off : off + n])
            off += n
            pid = (M2, group.decode_element(buf[off : off + L]))
            off += L
        else:
            off += 1
        if off != len(buf):
            raise group.DecodeError("avatar length mismatch")
        return cls(hid, h, M_a, R_a, pid)


def avatar_create(keypair: KeyPair, M_a: bytes, hid: Hid, rng: Rng | None = None) -> Avatar:
    h, R_a = chameleon_hash(keypair.pk, M_a, rng)
    return Avatar(hid, h, bytes(M_a), R_a)


def avatar_valid(avatar: Avatar, pk: GroupElement) -> bool:
    if not check(pk, avatar.h, avatar.M_a, avatar.R_a):
        return False
    if avatar.pid is not None:
        return check(pk, avatar.h, *avatar.pid)
    return True


def pid_attach(avatar: Avatar, sk: int, M_new: bytes) -> Avatar:
    R_new = collide(sk, avatar.h, avatar.M_a, avatar.R_a, M_new)
    return dataclasses.replace(avatar, pid=(bytes(M_new), R_new))


# -- first impression index ------------------------------------------------


@dataclass(frozen=True)
class FirstImpressionIndex:
    """``I = Hid_owner || Hid_receiver``; the receiver is the one who writes it."""

    owner: Hid
    receiver: Hid

    def to_bytes(self) -> bytes:
        return self.owner.digest + self.receiver.digest

    @classmethod
    def from_bytes(cls, buf: bytes) -> "FirstImpressionIndex":
        if len(buf) != 2 * HID_BYTES:
            raise IdentityError("first-impression index must be two Hids")
        return cls(Hid(bytes(buf[:HID_BYTES])), Hid(bytes(buf[HID_BYTES:])))


def fi_index(owner: Hid, receiver: Hid) -> FirstImpressionIndex:
    return FirstImpressionIndex(owner, receiver)
