"""Wire-level fault injection for the avatar protocol (``--tamper``)."""

from __future__ import annotations

import struct
from typing import Callable

from .. import group
from ..rng import Rng, resolve
from .messages import FRAME_HEADER, Tag

# field of the avatar response ciphertext (or claim) to corrupt
TAMPER_POINTS = ("z-bit-flip", "k-bit-flip", "rpp-bit-flip", "vid-bit-flip")


def _flip(buf: bytearray, start: int, length: int, rng: Rng) -> None:
    bit = rng.randbelow(8 * length)
    buf[start + bit // 8] ^= 1 << (bit % 8)


def make_tamper(point: str, rng: Rng | None = None, once: bool = True) -> Callable[[Tag, bytes], bytes]:
    """Return a Channel tamper hook flipping one random bit in the named field."""
    if point not in TAMPER_POINTS:
        raise ValueError(f"unknown tamper point {point!r}")
    rng = resolve(rng)
    target = Tag.AVATAR_CLAIM if point == "vid-bit-flip" else Tag.AVATAR_RESPONSE
    fired = False

    def hook(tag: Tag, frame: bytes) -> bytes:
        nonlocal fired
        if tag != target or (once and fired):
            return frame
        fired = True
        buf = bytearray(frame)
        off = FRAME_HEADER.size
        if point == "vid-bit-flip":
            # claim payload: Hid(32) | h | u32 len | M_a | R_a
            off += 32 + group.L_BYTES
            (n,) = struct.unpack_from(">I", buf, off)
            _flip(buf, off + 4, n, rng)
            return bytes(buf)
        # response payload: u32 len | ciphertext | h; ciphertext: tag | u32 n | K | Z | R''
        (ct_len,) = struct.unpack_from(">I", buf, off)
        ct_start = off + 4
        k_start = ct_start + len(group.profile_tag()) + 4
        L = group.L_BYTES
        z_start = k_start + L
        rpp_start = ct_start + ct_len - L
        if point == "k-bit-flip":
            _flip(buf, k_start, L, rng)
        elif point == "z-bit-flip":
            _flip(buf, z_start, rpp_start - z_start, rng)
        else:
            _flip(buf, rpp_start, L, rng)
        return bytes(buf)

    return hook
