"""Protocol messages, binary framing and the transcript log.

Every message travels as ``tag (u8) | length (u32 BE) | payload``. The same
frames go over the in-process channel and over stream sockets.
"""

from __future__ import annotations

import enum
import socket
import struct
from dataclasses import dataclass, field
from typing import Callable, ClassVar

from .. import group
from ..group import GroupElement
from ..identity import HID_BYTES, Hid
from ..signcryption import Ciphertext, HybridEnvelope

CHALLENGE_BYTES = 16
FRAME_HEADER = struct.Struct(">BI")


class Tag(enum.IntEnum):
    AVATAR_CLAIM = 0x11
    AVATAR_CHALLENGE = 0x12
    AVATAR_RESPONSE = 0x13
    AVATAR_VERIFY = 0x14
    FI_HANDOFF = 0x15
    CT_CLAIM = 0x21
    CT_CHALLENGE = 0x22
    CT_RESPONSE = 0x23
    CT_VERIFY = 0x24
    REJECT = 0x7F


class Reason(str, enum.Enum):
    MISSING_MIT = "missing-mit"
    MIT_MISMATCH = "mit-mismatch"
    MIT_SIGNATURE = "mit-signature"
    VID_CHECK = "vid-check"
    FI_DECRYPT = "fi-decrypt"
    RECALL_MISMATCH = "recall-mismatch"
    DSC_FAILURE = "dsc-failure"
    STALE_CHALLENGE = "stale-challenge"
    COLLISION_MISMATCH = "collision-mismatch"
    BIOMETRIC_MISMATCH = "biometric-mismatch"
    INDEX_PARSE = "index-parse"
    VC_FALSE = "vc-false"
    ALREADY_WRITTEN = "already-written"
    MALFORMED = "malformed"
    PHASE_ORDER = "phase-order"


class Rejected(Exception):
    """A protocol check failed; the session that raised it is terminally failed."""

    def __init__(self, reason: Reason, phase: str) -> None:
        super().__init__(f"{phase}: {reason.value}")
        self.reason = reason
        self.phase = phase


class MessageError(ValueError):
    pass


class _Reader:
    def __init__(self, buf: bytes) -> None:
        self.buf = bytes(buf)
        self.off = 0

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.buf):
            raise MessageError("truncated message")
        out = self.buf[self.off : self.off + n]
        self.off += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def blob(self) -> bytes:
        (n,) = struct.unpack(">I", self.take(4))
        return self.take(n)

    def element(self) -> GroupElement:
        return group.decode_element(self.take(group.L_BYTES))

    def hid(self) -> Hid:
        return Hid(self.take(HID_BYTES))

    def done(self) -> None:
        if self.off != len(self.buf):
            raise MessageError("trailing bytes in message")


def _blob(b: bytes) -> bytes:
    return struct.pack(">I", len(b)) + b


class Message:
    tag: ClassVar[Tag]

    def payload(self) -> bytes:
        raise NotImplementedError

    @classmethod
    def parse(cls, payload: bytes) -> "Message":
        raise NotImplementedError


@dataclass(frozen=True)
class AvatarClaim(Message):
    tag: ClassVar[Tag] = Tag.AVATAR_CLAIM
    hid: Hid
    h: GroupElement
    M_a: bytes
    R_a: GroupElement

    def payload(self) -> bytes:
        return self.hid.digest + self.h.to_bytes() + _blob(self.M_a) + self.R_a.to_bytes()

    @classmethod
    def parse(cls, payload: bytes) -> "AvatarClaim":
        r = _Reader(payload)
        msg = cls(r.hid(), r.element(), r.blob(), r.element())
        r.done()
        return msg


@dataclass(frozen=True)
class Challenge:
    bits: bytes
    issued_at: int

    def to_bytes(self) -> bytes:
        return struct.pack(">Q", self.issued_at) + self.bits


@dataclass(frozen=True)
class AvatarChallenge(Message):
    tag: ClassVar[Tag] = Tag.AVATAR_CHALLENGE
    challenge: Challenge

    def payload(self) -> bytes:
        return self.challenge.to_bytes()

    @classmethod
    def parse(cls, payload: bytes) -> "AvatarChallenge":
        r = _Reader(payload)
        seq = r.u64()
        msg = cls(Challenge(r.take(CHALLENGE_BYTES), seq))
        r.done()
        return msg


@dataclass(frozen=True)
class AvatarResponse(Message):
    tag: ClassVar[Tag] = Tag.AVATAR_RESPONSE
    ct: bytes  # decoded inside dsc so malformed ciphertexts fail opaquely
    h: GroupElement

    def payload(self) -> bytes:
        return _blob(self.ct) + self.h.to_bytes()

    @classmethod
    def parse(cls, payload: bytes) -> "AvatarResponse":
        r = _Reader(payload)
        ct = r.blob()
        msg = cls(ct, r.element())
        r.done()
        return msg


@dataclass(frozen=True)
class SessionHandshake(Message):
    """Verifier's success message: ``g^w`` plus the create-first-impression instruction."""

    tag: ClassVar[Tag] = Tag.AVATAR_VERIFY
    gw: GroupElement
    create_fi: bool

    def payload(self) -> bytes:
        return self.gw.to_bytes() + bytes([int(self.create_fi)])

    @classmethod
    def parse(cls, payload: bytes) -> "SessionHandshake":
        r = _Reader(payload)
        msg = cls(r.element(), bool(r.u8()))
        r.done()
        return msg


@dataclass(frozen=True)
class FirstImpressionHandoff(Message):
    """Owner hands the sealed first impression to the receiver, who will write it."""

    tag: ClassVar[Tag] = Tag.FI_HANDOFF
    index: bytes
    envelope: bytes

    def payload(self) -> bytes:
        return _blob(self.index) + _blob(self.envelope)

    @classmethod
    def parse(cls, payload: bytes) -> "FirstImpressionHandoff":
        r = _Reader(payload)
        msg = cls(r.blob(), r.blob())
        r.done()
        return msg


@dataclass(frozen=True)
class CtClaim(Message):
    tag: ClassVar[Tag] = Tag.CT_CLAIM
    index: bytes
    envelope: bytes
    h_owner: GroupElement
    M_owner: bytes
    R_owner: GroupElement

    def payload(self) -> bytes:
        return b"".join(
            [
                _blob(self.index),
                _blob(self.envelope),
                self.h_owner.to_bytes(),
                _blob(self.M_owner),
                self.R_owner.to_bytes(),
            ]
        )

    @classmethod
    def parse(cls, payload: bytes) -> "CtClaim":
        r = _Reader(payload)
        msg = cls(r.blob(), r.blob(), r.element(), r.blob(), r.element())
        r.done()
        return msg

    def kem(self) -> Ciphertext:
        return HybridEnvelope.from_bytes(self.envelope).kem


@dataclass(frozen=True)
class CtChallenge(Message):
    tag: ClassVar[Tag] = Tag.CT_CHALLENGE
    challenge: Challenge

    def payload(self) -> bytes:
        return self.challenge.to_bytes()

    @classmethod
    def parse(cls, payload: bytes) -> "CtChallenge":
        r = _Reader(payload)
        seq = r.u64()
        msg = cls(Challenge(r.take(CHALLENGE_BYTES), seq))
        r.done()
        return msg


@dataclass(frozen=True)
class CtResponse(Message):
    tag: ClassVar[Tag] = Tag.CT_RESPONSE
    ct: bytes
    h_writer: GroupElement

    def payload(self) -> bytes:
        return _blob(self.ct) + self.h_writer.to_bytes()

    @classmethod
    def parse(cls, payload: bytes) -> "CtResponse":
        r = _Reader(payload)
        ct = r.blob()
        msg = cls(ct, r.element())
        r.done()
        return msg


@dataclass(frozen=True)
class StoredReceipt(Message):
    tag: ClassVar[Tag] = Tag.CT_VERIFY
    fid: bytes
    seq: int

    def payload(self) -> bytes:
        return _blob(self.fid) + struct.pack(">Q", self.seq)

    @classmethod
    def parse(cls, payload: bytes) -> "StoredReceipt":
        r = _Reader(payload)
        msg = cls(r.blob(), r.u64())
        r.done()
        return msg


@dataclass(frozen=True)
class RejectMsg(Message):
    tag: ClassVar[Tag] = Tag.REJECT
    reason: Reason
    phase: str

    def payload(self) -> bytes:
        return _blob(self.reason.value.encode()) + _blob(self.phase.encode())

    @classmethod
    def parse(cls, payload: bytes) -> "RejectMsg":
        r = _Reader(payload)
        msg = cls(Reason(r.blob().decode()), r.blob().decode())
        r.done()
        return msg


MESSAGE_TYPES: dict[Tag, type[Message]] = {
    cls.tag: cls
    for cls in (
        AvatarClaim,
        AvatarChallenge,
        AvatarResponse,
        SessionHandshake,
        FirstImpressionHandoff,
        CtClaim,
        CtChallenge,
        CtResponse,
        StoredReceipt,
        RejectMsg,
    )
}


def encode_frame(msg: Message) -> bytes:
    body = msg.payload()
    return FRAME_HEADER.pack(int(msg.tag), len(body)) + body


def decode_frame(frame: bytes) -> Message:
    if len(frame) < FRAME_HEADER.size:
        raise MessageError("truncated frame header")
    tag, n = FRAME_HEADER.unpack_from(frame)
    if len(frame) != FRAME_HEADER.size + n:
        raise MessageError("frame length mismatch")
    try:
        cls = MESSAGE_TYPES[Tag(tag)]
    except ValueError:
        raise MessageError(f"unknown phase tag {tag:#x}") from None
    try:
        return cls.parse(frame[FRAME_HEADER.size :])
    except group.DecodeError as exc:
        raise MessageError(str(exc)) from exc


def send_frame(sock: socket.socket, msg: Message) -> None:
    sock.sendall(encode_frame(msg))


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    while n:
        chunk = sock.recv(n)
        if not chunk:
            raise MessageError("connection closed mid-frame")
        chunks.append(chunk)
        n -= len(chunk)
    return b"".join(chunks)


def recv_frame(sock: socket.socket) -> Message:
    header = _recv_exact(sock, FRAME_HEADER.size)
    _, n = FRAME_HEADER.unpack(header)
    return decode_frame(header + _recv_exact(sock, n))


# -- transcript ------------------------------------------------------------


@dataclass(frozen=True)
class TranscriptEntry:
    seq: int
    direction: str
    tag: Tag
    payload: bytes

    def render(self) -> str:
        return f"{self.seq} {self.direction} {self.tag.name} {self.payload.hex()}"


@dataclass
class Transcript:
    entries: list[TranscriptEntry] = field(default_factory=list)

    def record(self, direction: str, frame: bytes) -> None:
        tag, _ = FRAME_HEADER.unpack_from(frame)
        self.entries.append(
            TranscriptEntry(len(self.entries) + 1, direction, Tag(tag), frame[FRAME_HEADER.size :])
        )

    def lines(self) -> list[str]:
        return [e.render() for e in self.entries]

    def payloads(self) -> list[bytes]:
        return [e.payload for e in self.entries]


Tamper = Callable[[Tag, bytes], bytes]


class Channel:
    """In-process duplex channel: frames every message, logs it, delivers the decoded copy.

    ``tamper`` sees ``(tag, frame)`` and may return modified bytes (fault injection).
    """

    def __init__(self, transcript: Transcript | None = None, tamper: Tamper | None = None) -> None:
        self.transcript = transcript if transcript is not None else Transcript()
        self.tamper = tamper

    def send(self, sender: str, receiver: str, msg: Message) -> Message:
        frame = encode_frame(msg)
        if self.tamper is not None:
            frame = self.tamper(msg.tag, frame)
        self.transcript.record(f"{sender}->{receiver}", frame)
        return decode_frame(frame)
