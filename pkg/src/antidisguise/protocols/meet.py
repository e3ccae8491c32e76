"""End-to-end drivers: one-directional authentication and the mutual meeting."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from ..rng import Rng, resolve
from .avatar import AvatarProver, AvatarVerifier, SessionKey, fi_create
from .ciphertext import CiphertextWriter, ContractSession
from .messages import (
    Channel,
    FirstImpressionHandoff,
    MessageError,
    Reason,
    Rejected,
    RejectMsg,
    StoredReceipt,
    Transcript,
)
from .parties import Metaverse, User


@dataclass
class AuthResult:
    prover: str
    verifier: str
    recall: str  # "match" or "first-meeting"
    prover_key: SessionKey
    verifier_key: SessionKey
    receipt: StoredReceipt | None = None
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def keys_agree(self) -> bool:
        return self.prover_key.transport_key == self.verifier_key.transport_key


@dataclass
class MeetResult:
    forward: AuthResult
    backward: AuthResult
    transcript: Transcript

    @property
    def first_meeting(self) -> bool:
        return self.forward.recall == "first-meeting"


def _reject(channel: Channel, src: str, dst: str, exc: Rejected) -> Rejected:
    channel.send(src, dst, RejectMsg(exc.reason, exc.phase))
    return exc


def write_first_impression(
    world: Metaverse,
    writer: User,
    handoff: FirstImpressionHandoff,
    owner_claim,
    channel: Channel,
    rng: Rng | None = None,
) -> StoredReceipt:
    """Run the ciphertext protocol with ``writer`` as prover and contract S as verifier."""
    w = CiphertextWriter(
        writer,
        handoff.index,
        handoff.envelope,
        owner_claim.h,
        owner_claim.M_a,
        owner_claim.R_a,
        world.contract.pk,
        rng,
    )
    session = ContractSession(world.contract, rng)
    try:
        claim = channel.send(writer.name, "S", w.claim())
        ch = channel.send("S", writer.name, session.challenge(claim))
        resp = channel.send(writer.name, "S", w.respond(ch))
        return channel.send("S", writer.name, session.verify(resp))
    except Rejected as exc:
        raise _reject(channel, "S", writer.name, exc)


def authenticate(
    world: Metaverse,
    prover: User,
    verifier: User,
    channel: Channel,
    scene: bytes | None = None,
    rng: Rng | None = None,
) -> AuthResult:
    """``verifier`` authenticates ``prover``; on a first meeting the prover's FI is created and stored."""
    rng = resolve(rng)
    t: dict[str, float] = {}
    p = AvatarProver(prover, verifier.pk, rng)
    v = AvatarVerifier(verifier, world.storage, world.idp_key, rng)
    a, b = prover.name, verifier.name
    try:
        try:
            claim = channel.send(a, b, p.claim())
        except MessageError:
            v._fail(Reason.MALFORMED, "challenge")
        t0 = time.perf_counter()
        ch = v.challenge(claim)
        t["challenge"] = time.perf_counter() - t0
        ch = channel.send(b, a, ch)
        t0 = time.perf_counter()
        resp = p.respond(ch)
        t["response"] = time.perf_counter() - t0
        try:
            resp = channel.send(a, b, resp)
        except MessageError:
            v._fail(Reason.DSC_FAILURE, "verify")
        t0 = time.perf_counter()
        hs = v.verify(resp)
        t["verify"] = time.perf_counter() - t0
        hs = channel.send(b, a, hs)
        p.finish(hs)
    except Rejected as exc:
        raise _reject(channel, b, a, exc)

    receipt = None
    if hs.create_fi:
        if scene is None:
            raise ValueError("first meeting needs a scene to create the first impression")
        t0 = time.perf_counter()
        handoff = channel.send(a, b, fi_create(prover, verifier.hid, verifier.pk, scene, rng))
        try:
            v.accept_first_impression(handoff)
        except Rejected as exc:
            raise _reject(channel, b, a, exc)
        receipt = write_first_impression(world, verifier, handoff, claim, channel, rng)
        t["first-impression"] = time.perf_counter() - t0

    assert p.session_key is not None and v.session_key is not None
    return AuthResult(
        a,
        b,
        "first-meeting" if v.first_meeting else "match",
        p.session_key,
        v.session_key,
        receipt,
        t,
    )


def meet(
    world: Metaverse,
    a: User,
    b: User,
    scene_a: bytes | None = None,
    scene_b: bytes | None = None,
    rng: Rng | None = None,
    channel: Channel | None = None,
) -> MeetResult:
    """Mutual authentication: B verifies A, then A verifies B."""
    rng = resolve(rng)
    channel = channel or Channel()
    forward = authenticate(world, a, b, channel, scene_a, rng)
    backward = authenticate(world, b, a, channel, scene_b, rng)
    return MeetResult(forward, backward, channel.transcript)
