"""Adversary scenarios run against the real protocol engines.

Each scenario gives the adversary C her own registered identity plus a
:class:`PublicView` (ledger, content store, and the public avatar claims of
everyone else). Nothing in a scenario touches another party's secret key or
raw iris template. Every scenario also runs an honest control that must be
accepted, so a rejection is attributable to the attack and not to a broken
setup.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import json
import time
from dataclasses import asdict, dataclass, field

from . import biometric, ledger
from .identity import MIT, Hid, Mid, fi_index, hid_derive, mid_build
from .ledger import Storage
from .protocols.avatar import AvatarVerifier, fi_create
from .protocols.ciphertext import ContractSession
from .protocols.meet import authenticate, meet, write_first_impression
from .protocols.messages import AvatarClaim, AvatarResponse, Channel, CtClaim, CtResponse, Rejected
from .protocols.parties import Metaverse, User, fetch_mit
from .rng import Rng, resolve
from .signcryption import SigncryptionFailure, open_hybrid, sc, seal_hybrid

SCENARIOS = ("replacing", "forging", "disguise", "privacy")
SCENE_MARKER = b"FIRST-MEETING-SCENE:"


@dataclass
class Outcome:
    scenario: str
    variant: str
    defended: bool
    phase: str
    reason: str
    adversary_success: bool
    control_ok: bool
    elapsed_s: float = 0.0
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


class PublicView:
    """Everything an outsider can read: the public stores and public avatar claims."""

    def __init__(self, storage: Storage, claims: dict[str, AvatarClaim]) -> None:
        self._storage = storage
        self.claims = dict(claims)

    def ledger_get(self, key: bytes) -> bytes | None:
        return self._storage.ledger_get(key)

    def store_get(self, fid: bytes) -> bytes:
        return self._storage.store_get(fid)

    def transactions(self):
        return self._storage.transactions()

    def mit(self, hid: Hid) -> MIT | None:
        return fetch_mit(self._storage, hid)


def public_claim(user: User) -> AvatarClaim:
    av = user.require_avatar()
    return AvatarClaim(av.hid, av.h, av.M_a, av.R_a)


def random_mid(rng: Rng) -> Mid:
    return mid_build(
        rng.randbelow(1000),
        rng.randbelow(10**6),
        f"2024{1 + rng.randbelow(12):02d}{1 + rng.randbelow(28):02d}",
        rng.randbelow(10**6),
    )


def scene_for(user: User, rng: Rng, size: int = 2048) -> bytes:
    return SCENE_MARKER + user.name.encode() + b":" + rng.token_bytes(size)


@dataclass
class Stage:
    world: Metaverse
    a: User
    b: User
    c: User
    rng: Rng

    def view(self) -> PublicView:
        users = (self.a, self.b, self.c)
        return PublicView(self.world.storage, {u.name: public_claim(u) for u in users})


def stage(world: Metaverse | None = None, rng: Rng | None = None, tag: str = "") -> Stage:
    """Register fresh victims A, B and adversary C (own keys only) on ``world``."""
    rng = resolve(rng)
    world = world or Metaverse(rng=rng)
    users = []
    for role in ("A", "B", "C"):
        u = User.create(f"{role}{tag}", rng)
        world.register(u, random_mid(rng))
        u.make_avatar(b"avatar-look:" + u.name.encode(), rng)
        users.append(u)
    return Stage(world, *users, rng=rng)


def _outcome(scenario: str, variant: str, t0: float, **kw) -> Outcome:
    return Outcome(scenario, variant, elapsed_s=time.perf_counter() - t0, **kw)


# -- replacing ---------------------------------------------------------------


def run_replacing(st: Stage, variant: str = "baseline") -> Outcome:
    """C submits A's ciphertext for B under her own index ``Hid_C || Hid_B``."""
    t0 = time.perf_counter()
    w, a, b, c = st.world, st.a, st.b, st.c
    handoff = fi_create(a, b.hid, b.pk, scene_for(a, st.rng), st.rng)
    b.remember(handoff.index, open_hybrid(a.pk, handoff.envelope, a.require_avatar().h, b.keypair.sk))
    observed = handoff.envelope

    view = st.view()
    if variant == "baseline":
        owner = view.claims[c.name]
    elif variant == "claim-substitution":
        owner = view.claims[a.name]
    else:
        raise ValueError(f"unknown replacing variant {variant!r}")
    index_cb = fi_index(c.hid, b.hid).to_bytes()
    prior = w.storage.ledger_get(ledger.fi_key(index_cb))
    # content addressing makes "was this envelope stored" a per-attempt check even under concurrency
    observed_fid = ledger.fid_of(observed)
    stored_before = w.storage.store_has(observed_fid)
    session = ContractSession(w.contract, st.rng)
    try:
        session.challenge(CtClaim(index_cb, observed, owner.h, owner.M_a, owner.R_a))
        phase, reason, success = "challenge", "accepted", True
    except Rejected as exc:
        phase, reason, success = exc.phase, exc.reason.value, False
    success = success or w.storage.ledger_get(ledger.fi_key(index_cb)) != prior
    mutated = w.storage.store_has(observed_fid) != stored_before

    # control: the legitimate writer B stores the same ciphertext under I_AB
    receipt = write_first_impression(w, b, handoff, public_claim(a), Channel(), st.rng)
    control_ok = w.storage.ledger_get(ledger.fi_key(handoff.index)) == receipt.fid
    return _outcome(
        "replacing",
        variant,
        t0,
        defended=not success and not mutated,
        phase=phase,
        reason=reason,
        adversary_success=success,
        control_ok=control_ok,
    )


# -- forging -----------------------------------------------------------------


def run_forging(st: Stage, variant: str = "baseline") -> Outcome:
    """C signcrypts her own scene to B and tries to write it as if she were B."""
    t0 = time.perf_counter()
    w, a, b, c = st.world, st.a, st.b, st.c
    rng = st.rng

    # control first: honest B writes A's first impression; its transcript is public
    handoff = fi_create(a, b.hid, b.pk, scene_for(a, rng), rng)
    b.remember(handoff.index, open_hybrid(a.pk, handoff.envelope, a.require_avatar().h, b.keypair.sk))
    wire = Channel()
    receipt = write_first_impression(w, b, handoff, public_claim(a), wire, rng)
    control_ok = w.storage.ledger_get(ledger.fi_key(handoff.index)) == receipt.fid
    old_response = next(
        CtResponse.parse(e.payload) for e in wire.transcript.entries if e.tag == CtResponse.tag
    )

    view = st.view()
    c_claim = view.claims[c.name]
    h_b = view.claims[b.name].h
    forged = seal_hybrid(c.keypair.sk, c_claim.h, scene_for(a, rng), b.pk, rng)
    index_cb = fi_index(c.hid, b.hid).to_bytes()
    prior = w.storage.ledger_get(ledger.fi_key(index_cb))
    forged_fid = ledger.fid_of(forged.to_bytes())
    session = ContractSession(w.contract, rng)
    owner_passed = False
    try:
        ch = session.challenge(CtClaim(index_cb, forged.to_bytes(), c_claim.h, c_claim.M_a, c_claim.R_a))
        owner_passed = True
        if variant == "baseline":
            resp = CtResponse(sc(c.keypair.sk, c_claim.h, ch.challenge.bits, w.contract.pk, rng).to_bytes(), c_claim.h)
        elif variant == "writer-hash":
            resp = CtResponse(sc(c.keypair.sk, h_b, ch.challenge.bits, w.contract.pk, rng).to_bytes(), h_b)
        elif variant == "replay":
            resp = old_response
        else:
            raise ValueError(f"unknown forging variant {variant!r}")
        session.verify(resp)
        phase, reason, success = "verify", "accepted", True
    except Rejected as exc:
        phase, reason, success = exc.phase, exc.reason.value, False
    success = success or w.storage.ledger_get(ledger.fi_key(index_cb)) != prior
    mutated = w.storage.store_has(forged_fid)
    return _outcome(
        "forging",
        variant,
        t0,
        defended=not success and not mutated,
        phase=phase,
        reason=reason,
        adversary_success=success,
        control_ok=control_ok,
        details={"owner_check_passed": owner_passed},
    )


# -- disguise ----------------------------------------------------------------


def _victims_met(st: Stage) -> None:
    meet(st.world, st.a, st.b, scene_for(st.a, st.rng), scene_for(st.b, st.rng), st.rng)


def run_disguise(st: Stage, variant: str = "hid-a") -> Outcome:
    """C dresses up as A in front of B, who has met the real A before."""
    t0 = time.perf_counter()
    w, a, b, c = st.world, st.a, st.b, st.c
    rng = st.rng
    _victims_met(st)
    view = st.view()
    a_claim = view.claims[a.name]
    details: dict = {}
    success = False

    if variant == "hid-a":
        # C replays A's public claim verbatim, then must answer with a real response
        v = AvatarVerifier(b, w.storage, w.idp_key, rng)
        try:
            ch = v.challenge(a_claim)
            details["recall_before_response"] = v.recalled_scene is not None
            c_h = view.claims[c.name].h
            marked = biometric.embed(c.scan_iris(rng), ch.challenge.bits)
            ct = sc(c.keypair.sk, c_h, marked.to_bytes(), b.pk, rng)
            v.verify(AvatarResponse(ct.to_bytes(), c_h))
            phase, reason, success = "verify", "accepted", True
        except Rejected as exc:
            phase, reason = exc.phase, exc.reason.value
    elif variant in ("hid-c", "hid-c+replace", "hid-c+forge"):
        # C uses her own identity but an avatar that looks exactly like A
        c.make_avatar(a_claim.M_a, rng)
        try:
            res = authenticate(w, c, b, Channel(), scene=scene_for(c, rng), rng=rng)
            details["recall"] = res.recall
            phase, reason = "challenge", res.recall
            # success would mean B recognised C through a stored first impression
            success = res.recall == "match"
        except Rejected as exc:
            phase, reason = exc.phase, exc.reason.value
        if variant != "hid-c":
            sub = run_replacing if variant == "hid-c+replace" else run_forging
            # A and B already share a first impression, so a fresh victim stands in for A
            a2 = User.create(a.name + "'", rng)
            w.register(a2, random_mid(rng))
            a2.make_avatar(b"avatar-look:" + a2.name.encode(), rng)
            inner = sub(Stage(w, a2, b, c, rng))
            details["composed"] = inner.to_json()
            success = success or inner.adversary_success
            phase, reason = inner.phase, inner.reason
    else:
        raise ValueError(f"unknown disguise variant {variant!r}")

    # control: the real A is recognised through the stored first impression
    control = authenticate(w, a, b, Channel(), rng=rng)
    control_ok = control.recall == "match" and control.keys_agree
    return _outcome(
        "disguise",
        variant,
        t0,
        defended=not success,
        phase=phase,
        reason=reason,
        adversary_success=success,
        control_ok=control_ok,
        details=details,
    )


# -- privacy inference -------------------------------------------------------


def run_privacy_probe(st: Stage, candidates: int = 10_000, known: list[Mid] | None = None) -> Outcome:
    """C harvests the public stores and tries to open scenes and invert Hids."""
    t0 = time.perf_counter()
    w, c, rng = st.world, st.c, st.rng
    _victims_met(st)
    view = st.view()
    known = list(known or []) + [c.mid]

    opened = attempts = 0
    owner_hashes = [cl.h for cl in view.claims.values()]
    for tx in view.transactions():
        if not tx.key.startswith(ledger.FI_KEY_PREFIX):
            continue
        idx = tx.key[len(ledger.FI_KEY_PREFIX) :]
        if idx.endswith(c.hid.digest):
            continue  # C is the legitimate receiver of these
        env = view.store_get(tx.value)
        owner_mit = view.mit(Hid(idx[:32]))
        for h in owner_hashes:
            for pk in {owner_mit.pk, c.pk}:
                attempts += 1
                try:
                    open_hybrid(pk, env, h, c.keypair.sk)
                    opened += 1
                except SigncryptionFailure:
                    pass

    plaintext_leaks = 0
    for tx in view.transactions():
        if SCENE_MARKER in tx.value or len(tx.value) != ledger.FID_BYTES:
            plaintext_leaks += 1
        if tx.key.startswith(ledger.FI_KEY_PREFIX) and SCENE_MARKER in view.store_get(tx.value):
            plaintext_leaks += 1

    ledger_hids = set()
    for tx in view.transactions():
        if tx.key.startswith(ledger.MIT_KEY_PREFIX):
            ledger_hids.add(tx.key[len(ledger.MIT_KEY_PREFIX) :])
        elif tx.key.startswith(ledger.FI_KEY_PREFIX):
            idx = tx.key[len(ledger.FI_KEY_PREFIX) :]
            ledger_hids.update((idx[:32], idx[32:]))
    pool = [random_mid(rng) for _ in range(candidates)] + known
    recovered = {m.render() for m in pool if hid_derive(m).digest in ledger_hids}
    known_set = {m.render() for m in known}
    unknown_recovered = recovered - known_set
    control_ok = hid_derive(c.mid).digest in ledger_hids

    success = opened > 0 or plaintext_leaks > 0 or bool(unknown_recovered)
    return _outcome(
        "privacy",
        "baseline",
        t0,
        defended=not success,
        phase="probe",
        reason="no-leak" if not success else "leak",
        adversary_success=success,
        control_ok=control_ok,
        details={
            "open_attempts": attempts,
            "opened": opened,
            "plaintext_leaks": plaintext_leaks,
            "candidates": len(pool),
            "unknown_mids_recovered": len(unknown_recovered),
        },
    )


VARIANTS = {
    "replacing": ("baseline", "claim-substitution"),
    "forging": ("baseline", "writer-hash", "replay"),
    "disguise": ("hid-a", "hid-c", "hid-c+replace", "hid-c+forge"),
    "privacy": ("baseline",),
}


def run_scenario(name: str, variant: str | None = None, world: Metaverse | None = None, rng: Rng | None = None, tag: str = "") -> list[Outcome]:
    rng = resolve(rng)
    variants = VARIANTS[name] if variant is None else (variant,)
    out = []
    for v in variants:
        st = stage(world, rng, tag=f"{tag}{name}.{v}")
        if name == "replacing":
            out.append(run_replacing(st, v))
        elif name == "forging":
            out.append(run_forging(st, v))
        elif name == "disguise":
            out.append(run_disguise(st, v))
        elif name == "privacy":
            out.append(run_privacy_probe(st))
        else:
            raise ValueError(f"unknown scenario {name!r}")
    return out


def run_all(rng: Rng | None = None, concurrent: bool = False, world: Metaverse | None = None) -> list[Outcome]:
    """Every scenario; ``concurrent`` runs them in threads against one shared world."""
    rng = resolve(rng)
    if not concurrent:
        return [o for name in SCENARIOS for o in run_scenario(name, world=world, rng=rng)]
    world = world or Metaverse(rng=rng)
    with ThreadPoolExecutor(max_workers=len(SCENARIOS)) as pool:
        futs = [pool.submit(run_scenario, n, None, world, rng.fork(n), f"t{i}.") for i, n in enumerate(SCENARIOS)]
        return [o for f in futs for o in f.result()]


def report_json(outcomes: list[Outcome]) -> str:
    return json.dumps([o.to_json() for o in outcomes], indent=2)
