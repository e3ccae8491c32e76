from __future__ import annotations

import hashlib
import threading

import pytest

from antidisguise import ledger
from antidisguise.ledger import (
    BudgetExceeded,
    DuplicateKey,
    IntegrityError,
    NotFound,
    Storage,
)


def test_fid_is_tagged_sha256():
    assert ledger.fid_of(b"x") == hashlib.sha256(b"antidisguise/fid\x00x").digest()


@pytest.mark.parametrize("size", [0, 1, 32768])
def test_content_roundtrip(rng, size):
    st = Storage()
    blob = rng.token_bytes(size)
    fid = st.store_put(blob, ledger.NS_FI_CONTENT)
    assert st.store_get(fid) == blob and st.store_has(fid)


def test_content_dedup():
    st = Storage()
    assert st.store_put(b"same") == st.store_put(b"same")
    assert st.snapshot().usage[ledger.NS_OTHER].entries == 1


def test_missing_fid(rng):
    with pytest.raises(NotFound):
        Storage().store_get(rng.token_bytes(32))


def test_budgets():
    st = Storage()
    with pytest.raises(BudgetExceeded):
        st.store_put(bytes(32 * 1024 + 1), ledger.NS_FI_CONTENT)
    with pytest.raises(BudgetExceeded):
        st.ledger_put(ledger.fi_key(bytes(64)), bytes(2000))
    assert ledger.BUDGETS[ledger.NS_MIT_CONTENT] == 256 * 1024
    assert ledger.BUDGETS[ledger.NS_FI_INDEX] + ledger.BUDGETS[ledger.NS_FI_CONTENT] == 33 * 1024


def test_write_once_ledger():
    st = Storage()
    k = ledger.fi_key(bytes(64))
    assert st.ledger_get(k) is None
    assert st.ledger_put(k, b"\x01" * 32) == 1
    assert st.ledger_get(k) == b"\x01" * 32
    with pytest.raises(DuplicateKey):
        st.ledger_put(k, b"\x02" * 32)
    assert st.ledger_get(k) == b"\x01" * 32
    assert len(st) == 1


def test_concurrent_writers_single_winner():
    st = Storage()
    key = ledger.fi_key(b"\x07" * 64)
    wins, losses = [], []

    def writer(i):
        try:
            wins.append(st.ledger_put(key, bytes([i]) * 32))
        except DuplicateKey:
            losses.append(i)

    threads = [threading.Thread(target=writer, args=(i,)) for i in range(16)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(wins) == 1 and len(losses) == 15


def _populated(rng) -> Storage:
    st = Storage()
    for i in range(5):
        fid = st.store_put(rng.token_bytes(100 + i), ledger.NS_FI_CONTENT)
        st.ledger_put(ledger.fi_key(rng.token_bytes(64)), fid)
    mfid = st.store_put(rng.token_bytes(500), ledger.NS_MIT_CONTENT)
    st.ledger_put(ledger.mit_key(rng.token_bytes(32)), mfid)
    return st


def test_persist_restore_roundtrip(rng, tmp_path):
    st = _populated(rng)
    p = tmp_path / "ledger.bin"
    st.persist(p)
    back = Storage.restore(p)
    assert back.transactions() == st.transactions()
    assert back.to_bytes() == st.to_bytes()
    assert p.read_bytes().startswith(ledger.MAGIC)


def test_restore_truncated_or_corrupt(rng):
    raw = _populated(rng).to_bytes()
    for bad in (raw[:-1], raw[: len(raw) // 2], b"junk"):
        with pytest.raises(IntegrityError):
            Storage.from_bytes(bad)
    flipped = bytearray(raw)
    flipped[40] ^= 1
    with pytest.raises(IntegrityError):
        Storage.from_bytes(bytes(flipped))


def test_snapshot_accounting_matches_serialized_size(rng):
    st = _populated(rng)
    snap = st.snapshot()
    total = len(st.to_bytes())
    assert abs(snap.serialized_size() - total) / total <= 0.01


def test_fi_footprint_linear(rng):
    st = Storage()
    me = rng.token_bytes(32)
    for f in range(1, 11):
        fid = st.store_put(rng.token_bytes(50), ledger.NS_FI_CONTENT)
        st.ledger_put(ledger.fi_key(rng.token_bytes(32) + me), fid)
        assert st.fi_footprint(me) == f * 33 * 1024
    # FIs this user owns (but others recall) are not counted
    st.ledger_put(ledger.fi_key(me + rng.token_bytes(32)), fid)
    assert st.fi_footprint(me) == 10 * 33 * 1024
