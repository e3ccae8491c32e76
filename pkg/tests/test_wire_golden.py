"""Golden wire vectors: fixed-seed encodings must not drift.

Set ANTIDISGUISE_REGEN_GOLDEN=1 to rewrite the files after an intended format change.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import pytest

from antidisguise import biometric, group
from antidisguise.chameleon import ChameleonTriple, KeyPair, chameleon_hash
from antidisguise.identity import Idp, avatar_create, hid_derive, mid_parse, mit_issue
from antidisguise.ledger import Storage, fi_key, mit_key
from antidisguise.protocols import messages as msgs
from antidisguise.rng import Rng
from antidisguise.signcryption import sc, seal_hybrid

GOLDEN = Path(__file__).parent / "golden"
SAMPLE_MID = "15611010520240601301107"


def build_vectors() -> dict[str, bytes]:
    rng = Rng("golden-v1")
    a, b = KeyPair.from_secret(0xA11CE), KeyPair.from_secret(0xB0B)
    h, R = chameleon_hash(a.pk, b"visible", r=0x1234)
    hid = hid_derive(mid_parse(SAMPLE_MID))
    idp = Idp.from_seed(bytes(range(32)))
    mit = mit_issue(idp, 7, mid_parse(SAMPLE_MID), a.pk, biometric.enroll("golden"))
    av = avatar_create(a, b"visible", hid, rng)
    ct = sc(a.sk, h, b"sixteen byte msg", b.pk, rng)
    env = seal_hybrid(a.sk, h, b"first impression", b.pk, rng)
    st = Storage()
    st.ledger_put(mit_key(hid.digest), st.store_put(mit.to_bytes(), "mit-content"))
    st.ledger_put(fi_key(hid.digest * 2), st.store_put(env.to_bytes(), "fi-content"))
    claim = msgs.AvatarClaim(hid, av.h, av.M_a, av.R_a)
    return {
        "triple": ChameleonTriple(h, b"visible", R).to_bytes(),
        "ciphertext": ct.to_bytes(),
        "envelope": env.to_bytes(),
        "mit": mit.to_bytes(),
        "avatar": av.to_bytes(),
        "claim_frame": msgs.encode_frame(claim),
        "ledger": st.to_bytes(),
    }


VECTORS = build_vectors()


@pytest.mark.parametrize("name", sorted(VECTORS))
def test_golden(name):
    path = GOLDEN / f"{name}.hex"
    data = VECTORS[name]
    if os.environ.get("ANTIDISGUISE_REGEN_GOLDEN"):
        GOLDEN.mkdir(exist_ok=True)
        path.write_text(data.hex() + "\n")
    assert bytes.fromhex(path.read_text().strip()) == data


def test_ciphertext_layout_by_hand():
    raw = VECTORS["ciphertext"]
    tag = group.profile_tag()
    assert raw[: len(tag)] == tag and tag[0] == len(group.PROFILE_NAME)
    (n,) = struct.unpack_from(">I", raw, len(tag))
    assert n == 128
    assert len(raw) == len(tag) + 4 + 48 + (16 + 48) + 48


def test_triple_layout_by_hand():
    raw = VECTORS["triple"]
    off = len(group.profile_tag())
    h = raw[off : off + 48]
    (mlen,) = struct.unpack_from(">I", raw, off + 48)
    assert mlen == 7 and raw[off + 52 : off + 59] == b"visible"
    assert group.decode_element(h) == chameleon_hash(KeyPair.from_secret(0xA11CE).pk, b"visible", r=0x1234)[0]


def test_claim_frame_layout_by_hand():
    raw = VECTORS["claim_frame"]
    tag, length = struct.unpack_from(">BI", raw)
    assert tag == msgs.Tag.AVATAR_CLAIM and length == len(raw) - 5
    assert raw[5:37] == hid_derive(mid_parse(SAMPLE_MID)).digest


def test_ledger_layout_by_hand():
    raw = VECTORS["ledger"]
    assert raw[:8] == b"ADLEDGER" and struct.unpack_from(">H", raw, 8)[0] == 1
    import hashlib

    assert hashlib.sha256(raw[:-32]).digest() == raw[-32:]
