"""Participants: users with avatars, the storage contract S, and the world that wires them."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PublicKey

from .. import biometric, ledger
from ..chameleon import KeyPair, keygen
from ..group import DecodeError, GroupElement
from ..identity import MIT, Avatar, Hid, Idp, Mid, avatar_create, hid_derive, mit_issue
from ..ledger import DuplicateKey, Storage
from ..rng import Rng, resolve


class AlreadyRegistered(DuplicateKey):
    pass


def scene_digest(scene: bytes) -> bytes:
    return hashlib.sha256(b"antidisguise/scene\x00" + scene).digest()


@dataclass(eq=False)
class User:
    name: str
    keypair: KeyPair
    iris_seed: str
    mid: Mid | None = None
    sn: int | None = None
    avatar: Avatar | None = None
    noise_rate: float = 0.05
    # FI index -> digest of the scene seen when that first impression was made
    memory: dict[bytes, bytes] = field(default_factory=dict)

    @classmethod
    def create(cls, name: str, rng: Rng | None = None) -> "User":
        rng = resolve(rng)
        return cls(name, keygen(rng=rng), rng.token_bytes(16).hex())

    @property
    def hid(self) -> Hid:
        if self.mid is None:
            raise ValueError(f"user {self.name!r} has no Mid yet")
        return hid_derive(self.mid)

    @property
    def pk(self) -> GroupElement:
        return self.keypair.pk

    def template(self) -> biometric.IrisTemplate:
        return biometric.enroll(self.iris_seed)

    def scan_iris(self, rng: Rng | None = None) -> biometric.IrisSample:
        return biometric.sample(self.template(), self.noise_rate, rng)

    def make_avatar(self, visible: bytes, rng: Rng | None = None) -> Avatar:
        self.avatar = avatar_create(self.keypair, visible, self.hid, rng)
        return self.avatar

    def require_avatar(self) -> Avatar:
        if self.avatar is None:
            raise ValueError(f"user {self.name!r} has no avatar")
        return self.avatar

    def remember(self, index: bytes, scene: bytes) -> None:
        self.memory[bytes(index)] = scene_digest(scene)

    def recalls(self, index: bytes, scene: bytes) -> bool:
        return self.memory.get(bytes(index)) == scene_digest(scene)


def fetch_mit(storage: Storage, hid: Hid) -> MIT | None:
    fid = storage.ledger_get(ledger.mit_key(hid.digest))
    if fid is None:
        return None
    try:
        return MIT.from_bytes(storage.store_get(fid))
    except (ledger.StorageError, DecodeError, ValueError):
        return None


class Contract:
    """The storage contract S: a trusted service with its own keypair and ledger access."""

    def __init__(self, keypair: KeyPair, storage: Storage) -> None:
        self.keypair = keypair
        self.storage = storage

    @property
    def pk(self) -> GroupElement:
        return self.keypair.pk


class Metaverse:
    """Storage, mock IDP and contract S wired together."""

    def __init__(
        self,
        storage: Storage | None = None,
        idp: Idp | None = None,
        contract_key: KeyPair | None = None,
        rng: Rng | None = None,
    ) -> None:
        rng = resolve(rng)
        self.storage = storage if storage is not None else Storage()
        self.idp = idp if idp is not None else Idp.generate(rng)
        self.contract = Contract(contract_key or keygen(rng=rng), self.storage)
        self._next_sn = 1

    @property
    def idp_key(self) -> Ed25519PublicKey:
        return self.idp.verify_key

    def register(self, user: User, mid: Mid, sn: int | None = None) -> MIT:
        if sn is None:
            sn = self._next_sn
        self._next_sn = max(self._next_sn, sn) + 1
        mit = mit_issue(self.idp, sn, mid, user.pk, user.template())
        key = ledger.mit_key(mit.hid.digest)
        if self.storage.ledger_get(key) is not None:
            raise AlreadyRegistered(f"Hid {mit.hid.hex} is already registered")
        fid = self.storage.store_put(mit.to_bytes(), ledger.NS_MIT_CONTENT)
        try:
            self.storage.ledger_put(key, fid)
        except DuplicateKey as exc:
            raise AlreadyRegistered(str(exc)) from exc
        user.mid, user.sn = mid, sn
        return mit

    def mit(self, hid: Hid) -> MIT | None:
        return fetch_mit(self.storage, hid)
