"""Avatar authentication: claim, challenge, response, verify, then a session key.

The verifier recalls the first impression stored for ``Hid_A || Hid_B`` before
challenging. The prover answers with a signcrypted iris sample carrying the
challenge as a watermark; the opened sample must collide with the claimed
visible identity under the same chameleon hash and match the enrolled template.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PublicKey

from .. import biometric, group, ledger
from ..chameleon import check
from ..group import GroupElement
from ..identity import MIT, fi_index, mit_verify
from ..ledger import Storage
from ..rng import Rng, resolve
from ..signcryption import HybridEnvelope, SigncryptionFailure, dsc, open_hybrid, sc, seal_hybrid
from .messages import (
    CHALLENGE_BYTES,
    AvatarChallenge,
    AvatarClaim,
    AvatarResponse,
    Challenge,
    FirstImpressionHandoff,
    Reason,
    Rejected,
    SessionHandshake,
)
from .parties import User, fetch_mit

SESSION_KEY_TAG = b"antidisguise/session-key\x00"


class Phase(str, enum.Enum):
    CLAIM = "claim"
    CHALLENGE = "challenge"
    RESPONSE = "response"
    VERIFY = "verify"
    DONE = "done"
    FAILED = "failed"


def new_challenge(rng: Rng | None = None, clock: int = 0) -> Challenge:
    """Fresh challenge bits; ``clock`` is the ledger height at issue time (a logical timestamp)."""
    return Challenge(resolve(rng).token_bytes(CHALLENGE_BYTES), clock)


@dataclass(frozen=True)
class SessionKey:
    K_w: GroupElement
    transport_key: bytes

    @classmethod
    def derive(cls, K_w: GroupElement) -> "SessionKey":
        return cls(K_w, hashlib.sha256(SESSION_KEY_TAG + K_w.to_bytes()).digest())

    @property
    def fingerprint(self) -> str:
        return self.transport_key[:8].hex()


class Session:
    role = "session"

    def __init__(self) -> None:
        self.phase = Phase.CLAIM
        self.reject: Rejected | None = None

    def _expect(self, phase: Phase, stage: str) -> None:
        if self.phase is not phase:
            self._fail(Reason.PHASE_ORDER, stage)

    def _fail(self, reason: Reason, stage: str) -> None:
        self.phase = Phase.FAILED
        self.reject = Rejected(reason, stage)
        raise self.reject


class AvatarVerifier(Session):
    """B's side. ``challenge`` then ``verify``; any failed check is terminal."""

    role = "verifier"

    def __init__(self, verifier: User, storage: Storage, idp_key: Ed25519PublicKey, rng: Rng | None = None) -> None:
        super().__init__()
        self.verifier = verifier
        self.storage = storage
        self.idp_key = idp_key
        self.rng = resolve(rng)
        self.claim: AvatarClaim | None = None
        self.mit: MIT | None = None
        self.first_meeting = False
        self.recalled_scene: bytes | None = None
        self.pending: Challenge | None = None
        self.session_key: SessionKey | None = None
        self.pid: tuple[bytes, GroupElement] | None = None

    @property
    def index(self) -> bytes:
        assert self.claim is not None
        return fi_index(self.claim.hid, self.verifier.hid).to_bytes()

    def challenge(self, claim: AvatarClaim) -> AvatarChallenge:
        self._expect(Phase.CLAIM, "challenge")
        self.claim = claim
        mit = fetch_mit(self.storage, claim.hid)
        if mit is None:
            self._fail(Reason.MISSING_MIT, "challenge")
        if mit.hid != claim.hid:
            self._fail(Reason.MIT_MISMATCH, "challenge")
        if not mit_verify(self.idp_key, mit):
            self._fail(Reason.MIT_SIGNATURE, "challenge")
        if not check(mit.pk, claim.h, claim.M_a, claim.R_a):
            self._fail(Reason.VID_CHECK, "challenge")
        self.mit = mit

        fid = self.storage.ledger_get(ledger.fi_key(self.index))
        if fid is None:
            self.first_meeting = True
        else:
            try:
                scene = open_hybrid(mit.pk, self.storage.store_get(fid), claim.h, self.verifier.keypair.sk)
            except (SigncryptionFailure, ledger.StorageError):
                self._fail(Reason.FI_DECRYPT, "challenge")
            if not self.verifier.recalls(self.index, scene):
                self._fail(Reason.RECALL_MISMATCH, "challenge")
            self.recalled_scene = scene

        self.pending = new_challenge(self.rng, len(self.storage))
        self.phase = Phase.RESPONSE
        return AvatarChallenge(self.pending)

    def verify(self, response: AvatarResponse) -> SessionHandshake:
        self._expect(Phase.RESPONSE, "verify")
        assert self.claim is not None and self.mit is not None and self.pending is not None
        issued, self.pending = self.pending, None
        pk_A = self.mit.pk
        try:
            opened = dsc(pk_A, response.ct, response.h, self.verifier.keypair.sk)
            marked = biometric.MarkedSample.from_bytes(opened.M)
        except (SigncryptionFailure, biometric.BiometricError):
            self._fail(Reason.DSC_FAILURE, "verify")
        _, mark = biometric.extract(marked)
        if mark != issued.bits:
            self._fail(Reason.STALE_CHALLENGE, "verify")
        # PID must open the same hash the claimed VID opens
        if not check(pk_A, self.claim.h, opened.M, opened.R):
            self._fail(Reason.COLLISION_MISMATCH, "verify")
        if not biometric.match(marked, self.mit.template):
            self._fail(Reason.BIOMETRIC_MISMATCH, "verify")
        self.pid = (opened.M, opened.R)

        w = group.random_scalar(self.rng)
        self.session_key = SessionKey.derive(pk_A.primary() ** w)
        self.phase = Phase.DONE
        return SessionHandshake(group.g_pow(w).primary(), self.first_meeting)

    def accept_first_impression(self, handoff: FirstImpressionHandoff) -> bytes:
        """Open the owner's sealed scene, remember it, and return it for writing."""
        assert self.claim is not None and self.mit is not None
        if handoff.index != self.index:
            raise Rejected(Reason.INDEX_PARSE, "first-impression")
        try:
            scene = open_hybrid(self.mit.pk, handoff.envelope, self.claim.h, self.verifier.keypair.sk)
        except SigncryptionFailure:
            raise Rejected(Reason.FI_DECRYPT, "first-impression") from None
        self.verifier.remember(handoff.index, scene)
        return scene


class AvatarProver(Session):
    """A's side: claim, answer the challenge with a marked iris sample, finish the key."""

    role = "prover"

    def __init__(self, prover: User, verifier_pk: GroupElement, rng: Rng | None = None) -> None:
        super().__init__()
        self.prover = prover
        self.verifier_pk = verifier_pk
        self.rng = resolve(rng)
        self.session_key: SessionKey | None = None

    def claim(self) -> AvatarClaim:
        avatar = self.prover.require_avatar()
        self.phase = Phase.CHALLENGE
        return AvatarClaim(avatar.hid, avatar.h, avatar.M_a, avatar.R_a)

    def respond(self, msg: AvatarChallenge) -> AvatarResponse:
        self._expect(Phase.CHALLENGE, "response")
        avatar = self.prover.require_avatar()
        marked = biometric.embed(self.prover.scan_iris(self.rng), msg.challenge.bits)
        ct = sc(self.prover.keypair.sk, avatar.h, marked.to_bytes(), self.verifier_pk, self.rng)
        self.phase = Phase.VERIFY
        return AvatarResponse(ct.to_bytes(), avatar.h)

    def finish(self, msg: SessionHandshake) -> SessionKey:
        self._expect(Phase.VERIFY, "verify")
        self.session_key = SessionKey.derive(msg.gw ** self.prover.keypair.sk)
        self.phase = Phase.DONE
        return self.session_key


def fi_create(
    owner: User, receiver_hid, receiver_pk: GroupElement, scene: bytes, rng: Rng | None = None
) -> FirstImpressionHandoff:
    """Seal ``scene`` from ``owner`` to the receiver under index ``Hid_owner || Hid_receiver``."""
    if not scene:
        raise ValueError("first-impression scene must be non-empty")
    avatar = owner.require_avatar()
    env: HybridEnvelope = seal_hybrid(owner.keypair.sk, avatar.h, scene, receiver_pk, rng)
    index = fi_index(owner.hid, receiver_hid).to_bytes()
    return FirstImpressionHandoff(index, env.to_bytes())
