"""On-disk workspace used by the CLI.

Layout::

    <dir>/workspace.json     profile, mock-IDP seed, contract S key
    <dir>/users/<name>.json  keypair, iris seed, Mid/SN, avatar, FI memory
    <dir>/ledger.bin         ledger + content-store snapshot
    <dir>/transcripts/*.txt  wire transcripts of meet runs

Every JSON file carries ``format`` and ``version`` fields; the ledger snapshot
has its own magic/version header. Secret material is stored in the clear:
this is a simulation workspace, not a key store.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path

from . import group
from .chameleon import KeyPair
from .identity import Avatar, Idp, mid_parse
from .ledger import Storage
from .protocols.parties import Metaverse, User

FORMAT = "antidisguise/workspace"
USER_FORMAT = "antidisguise/user"
VERSION = 1
_NAME_RE = re.compile(r"^[A-Za-z0-9_.-]{1,64}$")


class WorkspaceError(Exception):
    """Missing, unreadable or malformed workspace files."""


def _write_json(path: Path, obj: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


def _read_json(path: Path, fmt: str) -> dict:
    try:
        obj = json.loads(path.read_text())
    except FileNotFoundError:
        raise WorkspaceError(f"{path} does not exist") from None
    except (OSError, ValueError) as exc:
        raise WorkspaceError(f"cannot read {path}: {exc}") from None
    if obj.get("format") != fmt or obj.get("version") != VERSION:
        raise WorkspaceError(f"{path}: unsupported format/version")
    return obj


def valid_name(name: str) -> bool:
    return bool(_NAME_RE.match(name))


def user_to_json(u: User) -> dict:
    return {
        "format": USER_FORMAT,
        "version": VERSION,
        "name": u.name,
        "sk": f"{u.keypair.sk:064x}",
        "iris_seed": u.iris_seed,
        "noise_rate": u.noise_rate,
        "mid": u.mid.render() if u.mid else None,
        "sn": u.sn,
        "avatar": u.avatar.to_bytes().hex() if u.avatar else None,
        "memory": {k.hex(): v.hex() for k, v in sorted(u.memory.items())},
    }


def user_from_json(obj: dict) -> User:
    try:
        u = User(
            obj["name"],
            KeyPair.from_secret(int(obj["sk"], 16)),
            obj["iris_seed"],
            mid_parse(obj["mid"]) if obj["mid"] else None,
            obj["sn"],
            Avatar.from_bytes(bytes.fromhex(obj["avatar"])) if obj["avatar"] else None,
            float(obj["noise_rate"]),
            {bytes.fromhex(k): bytes.fromhex(v) for k, v in obj["memory"].items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise WorkspaceError(f"malformed user record: {exc}") from None
    return u


@dataclass
class Workspace:
    root: Path
    profile: str
    idp: Idp
    contract_key: KeyPair
    storage: Storage
    next_sn: int = 1

    # -- paths

    @staticmethod
    def meta_path(root: Path) -> Path:
        return root / "workspace.json"

    @property
    def ledger_path(self) -> Path:
        return self.root / "ledger.bin"

    def user_path(self, name: str) -> Path:
        return self.root / "users" / f"{name}.json"

    # -- lifecycle

    @classmethod
    def create(cls, root: str | os.PathLike, profile: str, rng, force: bool = False) -> "Workspace":
        root = Path(root)
        if cls.meta_path(root).exists() and not force:
            raise WorkspaceError(f"{root} is already a workspace (use --force to reset)")
        if profile != group.PROFILE_NAME:
            raise ValueError(f"unsupported profile {profile!r}")
        root.mkdir(parents=True, exist_ok=True)
        if force:
            for p in (root / "users").glob("*.json"):
                p.unlink()
        ws = cls(root, profile, Idp.generate(rng), KeyPair.from_secret(group.random_scalar(rng)), Storage())
        ws.save()
        return ws

    @classmethod
    def open(cls, root: str | os.PathLike) -> "Workspace":
        root = Path(root)
        meta = _read_json(cls.meta_path(root), FORMAT)
        if meta.get("profile") != group.PROFILE_NAME:
            raise WorkspaceError(f"workspace profile {meta.get('profile')!r} is not supported")
        try:
            idp = Idp.from_seed(bytes.fromhex(meta["idp_seed"]))
            ckey = KeyPair.from_secret(int(meta["contract_sk"], 16))
            next_sn = int(meta["next_sn"])
        except (KeyError, ValueError) as exc:
            raise WorkspaceError(f"malformed workspace.json: {exc}") from None
        ledger_path = root / "ledger.bin"
        try:
            storage = Storage.restore(ledger_path)
        except FileNotFoundError:
            raise WorkspaceError(f"{ledger_path} does not exist") from None
        return cls(root, meta["profile"], idp, ckey, storage, next_sn)

    def save(self) -> None:
        _write_json(
            self.meta_path(self.root),
            {
                "format": FORMAT,
                "version": VERSION,
                "profile": self.profile,
                "idp_seed": self.idp.seed_bytes().hex(),
                "idp_verify_key": self.idp.verify_key_bytes().hex(),
                "contract_sk": f"{self.contract_key.sk:064x}",
                "next_sn": self.next_sn,
            },
        )
        self.storage.persist(self.ledger_path)

    # -- world and users

    def world(self, rng=None) -> Metaverse:
        w = Metaverse(self.storage, self.idp, self.contract_key, rng)
        w._next_sn = self.next_sn
        return w

    def absorb(self, world: Metaverse) -> None:
        self.next_sn = world._next_sn

    def has_user(self, name: str) -> bool:
        return self.user_path(name).exists()

    def load_user(self, name: str) -> User:
        if not valid_name(name):
            raise WorkspaceError(f"invalid user name {name!r}")
        return user_from_json(_read_json(self.user_path(name), USER_FORMAT))

    def save_user(self, user: User) -> None:
        _write_json(self.user_path(user.name), user_to_json(user))

    def user_names(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "users").glob("*.json"))

    def write_transcript(self, label: str, lines: list[str]) -> Path:
        d = self.root / "transcripts"
        d.mkdir(parents=True, exist_ok=True)
        n = len(list(d.glob("*.txt"))) + 1
        path = d / f"{n:04d}-{label}.txt"
        path.write_text("".join(line + "\n" for line in lines))
        return path
