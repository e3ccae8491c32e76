"""Ciphertext authentication: the receiver writes a first impression through contract S.

S publicly verifies that the ciphertext names the owner and receiver encoded
in the index (``vc``), then challenges the writer to prove possession of the
receiver's key by signcrypting the challenge to S. Only then is the envelope
stored (content first, index second).
"""

from __future__ import annotations

from dataclasses import dataclass

from .. import group, ledger
from ..group import GroupElement
from ..identity import FirstImpressionIndex, IdentityError
from ..rng import Rng, resolve
from ..signcryption import HybridEnvelope, SigncryptionFailure, dsc, sc, vc
from .avatar import Phase, Session, new_challenge
from .messages import Challenge, CtChallenge, CtClaim, CtResponse, Reason, StoredReceipt
from .parties import Contract, User, fetch_mit


class ContractSession(Session):
    role = "contract"

    def __init__(self, contract: Contract, rng: Rng | None = None) -> None:
        super().__init__()
        self.contract = contract
        self.rng = resolve(rng)
        self.claim: CtClaim | None = None
        self.writer_pk: GroupElement | None = None
        self.pending: Challenge | None = None

    def challenge(self, claim: CtClaim) -> CtChallenge:
        self._expect(Phase.CLAIM, "challenge")
        self.claim = claim
        try:
            index = FirstImpressionIndex.from_bytes(claim.index)
        except IdentityError:
            self._fail(Reason.INDEX_PARSE, "challenge")
        storage = self.contract.storage
        mit_owner = fetch_mit(storage, index.owner)
        mit_writer = fetch_mit(storage, index.receiver)
        if mit_owner is None or mit_writer is None:
            self._fail(Reason.MISSING_MIT, "challenge")
        try:
            kem = HybridEnvelope.from_bytes(claim.envelope).kem
        except group.DecodeError:
            self._fail(Reason.VC_FALSE, "challenge")
        if not vc(mit_owner.pk, kem, claim.h_owner, claim.M_owner, claim.R_owner, mit_writer.pk):
            self._fail(Reason.VC_FALSE, "challenge")
        self.writer_pk = mit_writer.pk
        self.pending = new_challenge(self.rng, len(storage))
        self.phase = Phase.RESPONSE
        return CtChallenge(self.pending)

    def verify(self, response: CtResponse) -> StoredReceipt:
        self._expect(Phase.RESPONSE, "verify")
        assert self.claim is not None and self.writer_pk is not None and self.pending is not None
        issued, self.pending = self.pending, None
        try:
            opened = dsc(self.writer_pk, response.ct, response.h_writer, self.contract.keypair.sk)
        except SigncryptionFailure:
            self._fail(Reason.DSC_FAILURE, "verify")
        if opened.M != issued.bits:
            self._fail(Reason.STALE_CHALLENGE, "verify")
        storage = self.contract.storage
        fid = storage.store_put(self.claim.envelope, ledger.NS_FI_CONTENT)
        try:
            seq = storage.ledger_put(ledger.fi_key(self.claim.index), fid)
        except ledger.DuplicateKey:
            # content stays behind unreferenced; harmless under content addressing
            self._fail(Reason.ALREADY_WRITTEN, "verify")
        self.phase = Phase.DONE
        return StoredReceipt(fid, seq)


@dataclass
class CiphertextWriter:
    """Receiver B presenting an owner's first impression for storage."""

    writer: User
    index: bytes
    envelope: bytes
    h_owner: GroupElement
    M_owner: bytes
    R_owner: GroupElement
    contract_pk: GroupElement
    rng: Rng | None = None

    def claim(self) -> CtClaim:
        return CtClaim(self.index, self.envelope, self.h_owner, self.M_owner, self.R_owner)

    def respond(self, msg: CtChallenge) -> CtResponse:
        avatar = self.writer.require_avatar()
        ct = sc(self.writer.keypair.sk, avatar.h, msg.challenge.bits, self.contract_pk, self.rng)
        return CtResponse(ct.to_bytes(), avatar.h)
