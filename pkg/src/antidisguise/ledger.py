"""Simulated permissioned chain (write-once index) plus a content-addressed store.

The chain is an append-only list of ``(seq, key, value)`` transactions with
first-write-wins keys. The store maps ``FID = SHA-256(tag || content)`` to
content and re-hashes on every read.

Storage is accounted per namespace, both as actual serialized bytes and as
reserved slot budgets (1 KiB per index entry, 32 KiB per first-impression
ciphertext, 256 KiB per MIT).

Snapshot layout::

    b"ADLEDGER" | version u16 | profile tag
    | tx count u64 | (seq u64, key len u32, key, value len u32, value)*   seq order
    | content count u64 | (fid 32 B, namespace u8, len u32, content)*  FID order
    | SHA-256 of everything above
"""

from __future__ import annotations

import hashlib
import os
import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path

from . import group

FID_BYTES = 32
FID_TAG = b"antidisguise/fid\x00"
MAGIC = b"ADLEDGER"
VERSION = 1

KIB = 1024
MIT_KEY_PREFIX = b"MIT/"
FI_KEY_PREFIX = b"FI/"

NS_MIT_INDEX = "mit-index"
NS_MIT_CONTENT = "mit-content"
NS_FI_INDEX = "fi-index"
NS_FI_CONTENT = "fi-content"
NS_OTHER = "other"

BUDGETS = {
    NS_MIT_INDEX: 1 * KIB,
    NS_MIT_CONTENT: 256 * KIB,
    NS_FI_INDEX: 1 * KIB,
    NS_FI_CONTENT: 32 * KIB,
}
_CONTENT_NS = [NS_OTHER, NS_MIT_CONTENT, NS_FI_CONTENT]


class StorageError(Exception):
    pass


class DuplicateKey(StorageError):
    """Attempt to overwrite a write-once ledger key."""


class NotFound(StorageError, KeyError):
    pass


class IntegrityError(StorageError):
    pass


class BudgetExceeded(StorageError):
    pass


def fid_of(content: bytes) -> bytes:
    return hashlib.sha256(FID_TAG + content).digest()


def mit_key(hid_digest: bytes) -> bytes:
    return MIT_KEY_PREFIX + hid_digest


def fi_key(index_bytes: bytes) -> bytes:
    return FI_KEY_PREFIX + index_bytes


def key_namespace(key: bytes) -> str:
    if key.startswith(MIT_KEY_PREFIX):
        return NS_MIT_INDEX
    if key.startswith(FI_KEY_PREFIX):
        return NS_FI_INDEX
    return NS_OTHER


@dataclass(frozen=True)
class LedgerTransaction:
    seq: int
    key: bytes
    value: bytes

    def to_bytes(self) -> bytes:
        return (
            struct.pack(">QI", self.seq, len(self.key))
            + self.key
            + struct.pack(">I", len(self.value))
            + self.value
        )


def _content_entry_bytes(fid: bytes, ns: str, content: bytes) -> bytes:
    return fid + bytes([_CONTENT_NS.index(ns)]) + struct.pack(">I", len(content)) + content


@dataclass
class NamespaceUsage:
    entries: int = 0
    bytes: int = 0

    def budget(self, ns: str) -> int:
        return self.entries * BUDGETS.get(ns, 0)


@dataclass
class StoreSnapshot:
    ledger: list[LedgerTransaction]
    content: dict[bytes, tuple[str, bytes]]
    usage: dict[str, NamespaceUsage] = field(default_factory=dict)

    def serialized_size(self) -> int:
        # entries plus the fixed header (magic, version, profile, two counts) and checksum
        fixed = len(MAGIC) + 2 + len(group.profile_tag()) + 8 + 8 + 32
        return fixed + sum(u.bytes for u in self.usage.values())


class Storage:
    """Chain + content store behind one single-writer lock."""

    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._txs: list[LedgerTransaction] = []
        self._index: dict[bytes, bytes] = {}
        self._content: dict[bytes, tuple[str, bytes]] = {}

    # -- content store ---------------------------------------------------

    def store_put(self, content: bytes, namespace: str = NS_OTHER) -> bytes:
        content = bytes(content)
        budget = BUDGETS.get(namespace)
        if budget is not None and len(content) > budget:
            raise BudgetExceeded(f"{len(content)} bytes exceed the {namespace} slot of {budget}")
        fid = fid_of(content)
        with self._lock:
            self._content.setdefault(fid, (namespace, content))
        return fid

    def store_get(self, fid: bytes) -> bytes:
        entry = self._content.get(bytes(fid))
        if entry is None:
            raise NotFound(f"no content for FID {bytes(fid).hex()}")
        content = entry[1]
        if fid_of(content) != fid:
            raise IntegrityError("stored content does not hash to its FID")
        return content

    def store_has(self, fid: bytes) -> bool:
        return bytes(fid) in self._content

    # -- ledger ----------------------------------------------------------

    def ledger_put(self, key: bytes, value: bytes) -> int:
        key, value = bytes(key), bytes(value)
        tx_size = len(LedgerTransaction(0, key, value).to_bytes())
        budget = BUDGETS.get(key_namespace(key))
        if budget is not None and tx_size > budget:
            raise BudgetExceeded(f"ledger entry of {tx_size} bytes exceeds {budget}")
        with self._lock:
            if key in self._index:
                raise DuplicateKey(f"ledger key {key.hex()} already written")
            seq = len(self._txs) + 1
            self._txs.append(LedgerTransaction(seq, key, value))
            self._index[key] = value
            return seq

    def ledger_get(self, key: bytes) -> bytes | None:
        return self._index.get(bytes(key))

    def transactions(self) -> list[LedgerTransaction]:
        with self._lock:
            return list(self._txs)

    def __len__(self) -> int:
        return len(self._txs)

    # -- accounting ------------------------------------------------------

    def snapshot(self) -> StoreSnapshot:
        with self._lock:
            txs = list(self._txs)
            content = dict(self._content)
        usage: dict[str, NamespaceUsage] = {}
        for tx in txs:
            u = usage.setdefault(key_namespace(tx.key), NamespaceUsage())
            u.entries += 1
            u.bytes += len(tx.to_bytes())
        for fid, (ns, blob) in content.items():
            u = usage.setdefault(ns, NamespaceUsage())
            u.entries += 1
            u.bytes += len(_content_entry_bytes(fid, ns, blob))
        return StoreSnapshot(txs, content, usage)

    def fi_footprint(self, receiver_hid: bytes) -> int:
        """Reserved bytes (index + ciphertext slots) of FIs recalled by ``receiver_hid``."""
        n = 0
        for tx in self.transactions():
            if tx.key.startswith(FI_KEY_PREFIX) and tx.key.endswith(receiver_hid):
                n += 1
        return n * (BUDGETS[NS_FI_INDEX] + BUDGETS[NS_FI_CONTENT])

    # -- persistence -----------------------------------------------------

    def to_bytes(self) -> bytes:
        snap = self.snapshot()
        out = [MAGIC, struct.pack(">H", VERSION), group.profile_tag()]
        out.append(struct.pack(">Q", len(snap.ledger)))
        out += [tx.to_bytes() for tx in snap.ledger]
        out.append(struct.pack(">Q", len(snap.content)))
        for fid in sorted(snap.content):
            ns, blob = snap.content[fid]
            out.append(_content_entry_bytes(fid, ns, blob))
        body = b"".join(out)
        return body + hashlib.sha256(body).digest()

    @classmethod
    def from_bytes(cls, buf: bytes) -> "Storage":
        if len(buf) < len(MAGIC) + 2 + 32 or buf[: len(MAGIC)] != MAGIC:
            raise IntegrityError("not a ledger snapshot")
        body, digest = buf[:-32], buf[-32:]
        if hashlib.sha256(body).digest() != digest:
            raise IntegrityError("snapshot checksum mismatch (truncated or corrupt)")
        try:
            return cls._parse(body)
        except (struct.error, IndexError, ValueError) as exc:
            raise IntegrityError(f"malformed snapshot: {exc}") from exc

    @classmethod
    def _parse(cls, body: bytes) -> "Storage":
        off = len(MAGIC)
        (version,) = struct.unpack_from(">H", body, off)
        if version != VERSION:
            raise IntegrityError(f"unsupported snapshot version {version}")
        _, off = group.read_profile_tag(body, off + 2)
        st = cls()
        (ntx,) = struct.unpack_from(">Q", body, off)
        off += 8
        last = 0
        for _ in range(ntx):
            seq, klen = struct.unpack_from(">QI", body, off)
            off += 12
            key = body[off : off + klen]
            off += klen
            (vlen,) = struct.unpack_from(">I", body, off)
            off += 4
            value = body[off : off + vlen]
            off += vlen
            if seq <= last or key in st._index:
                raise IntegrityError("ledger log is not append-only")
            last = seq
            st._txs.append(LedgerTransaction(seq, key, value))
            st._index[key] = value
        (nc,) = struct.unpack_from(">Q", body, off)
        off += 8
        for _ in range(nc):
            fid = body[off : off + FID_BYTES]
            ns = _CONTENT_NS[body[off + FID_BYTES]]
            (clen,) = struct.unpack_from(">I", body, off + FID_BYTES + 1)
            off += FID_BYTES + 5
            blob = body[off : off + clen]
            off += clen
            if len(blob) != clen or fid_of(blob) != fid:
                raise IntegrityError("content entry does not match its FID")
            st._content[fid] = (ns, blob)
        if off != len(body):
            raise IntegrityError("trailing bytes in snapshot")
        return st

    def persist(self, path: str | os.PathLike) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(self.to_bytes())
        os.replace(tmp, path)

    @classmethod
    def restore(cls, path: str | os.PathLike) -> "Storage":
        return cls.from_bytes(Path(path).read_bytes())
