"""Desk-scale measurements: primitive medians, protocol key steps, storage growth."""

from __future__ import annotations

import os
import platform
import statistics
import time
from importlib import resources
from typing import Callable

from . import group, ledger
from .attacks import random_mid
from .chameleon import chameleon_hash, check, collide, keygen
from .protocols.avatar import fi_create
from .protocols.meet import meet, write_first_impression
from .protocols.messages import AvatarClaim, Channel
from .protocols.parties import Metaverse, User
from .rng import Rng, resolve
from .signcryption import dsc, open_hybrid, sc, vc

FRIEND_COUNTS = (20, 40, 60, 80, 100)


def sample_scene() -> bytes:
    """The bundled ~22 KiB grayscale image used as a default first-impression scene."""
    return (resources.files("antidisguise") / "data" / "sample_scene.pgm").read_bytes()


def environment() -> dict:
    return {
        "platform": platform.platform(),
        "python": platform.python_version(),
        "machine": platform.machine(),
        "processor": platform.processor() or "unknown",
        "cpus": os.cpu_count(),
        "backend": "mcl via pymcl (G1/G2/pairing), py_ecc hash_to_G1 (H1)",
        "profile": group.PROFILE_NAME,
    }


def _median_ms(fn: Callable[[], object], iterations: int) -> float:
    samples = []
    for _ in range(iterations):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples) * 1e3


def bench_crypto(iterations: int = 20, n_bytes: int = 16, rng: Rng | None = None) -> dict:
    rng = resolve(rng)
    a, b = keygen(rng=rng), keygen(rng=rng)
    M_a = b"visible identity"
    h, R = chameleon_hash(a.pk, M_a, rng)
    msg = lambda: rng.token_bytes(n_bytes)  # fresh message so H1 caching does not flatter sc
    ct = sc(a.sk, h, msg(), b.pk, rng)
    medians = {
        "sc": _median_ms(lambda: sc(a.sk, h, msg(), b.pk, rng), iterations),
        "vc": _median_ms(lambda: vc(a.pk, ct, h, M_a, R, b.pk), iterations),
        "dsc": _median_ms(lambda: dsc(a.pk, ct, h, b.sk), iterations),
        "check": _median_ms(lambda: check(a.pk, h, M_a, R), iterations),
        "collide": _median_ms(lambda: collide(a.sk, h, M_a, R, msg()), iterations),
        "h1": _median_ms(lambda: group.h1(msg()), iterations),
        "pairing": _median_ms(lambda: group.pair(h, group.GENERATOR), iterations),
    }
    return {"suite": "crypto", "iterations": iterations, "message_bits": 8 * n_bytes, "median_ms": medians}


def _fresh_user(world: Metaverse, name: str, rng: Rng) -> User:
    u = User.create(name, rng)
    world.register(u, random_mid(rng))
    u.make_avatar(b"avatar-look:" + name.encode(), rng)
    return u


def bench_protocol(iterations: int = 5, rng: Rng | None = None) -> dict:
    """First meeting (with FI creation and storage) once, then repeated recall meetings."""
    rng = resolve(rng)
    world = Metaverse(rng=rng)
    a, b = _fresh_user(world, "A", rng), _fresh_user(world, "B", rng)
    scene = sample_scene()
    t0 = time.perf_counter()
    first = meet(world, a, b, scene, scene, rng)
    first_s = time.perf_counter() - t0
    totals, steps = [], {}
    for _ in range(iterations):
        t0 = time.perf_counter()
        res = meet(world, a, b, rng=rng)
        totals.append(time.perf_counter() - t0)
        for leg in (res.forward, res.backward):
            for k, v in leg.timings.items():
                steps.setdefault(k, []).append(v)
    return {
        "suite": "protocol",
        "iterations": iterations,
        "first_meeting_s": first_s,
        "first_meeting_steps_ms": {
            k: 1e3 * (first.forward.timings.get(k, 0) + first.backward.timings.get(k, 0))
            for k in first.forward.timings
        },
        "second_meeting_median_s": statistics.median(totals),
        "second_meeting_step_median_ms": {k: 1e3 * statistics.median(v) for k, v in steps.items()},
    }


def bench_storage(friends=FRIEND_COUNTS, rng: Rng | None = None) -> dict:
    """Grow one user's friend list through the real ciphertext protocol and account storage."""
    rng = resolve(rng)
    world = Metaverse(rng=rng)
    me = _fresh_user(world, "me", rng)
    scene = sample_scene()
    rows = []
    made = 0
    for f in sorted(friends):
        while made < f:
            friend = _fresh_user(world, f"friend{made}", rng)
            handoff = fi_create(friend, me.hid, me.pk, scene, rng)
            me.remember(handoff.index, open_hybrid(friend.pk, handoff.envelope, friend.require_avatar().h, me.keypair.sk))
            av = friend.require_avatar()
            write_first_impression(world, me, handoff, AvatarClaim(av.hid, av.h, av.M_a, av.R_a), Channel(), rng)
            made += 1
        snap = world.storage.snapshot()
        rows.append(
            {
                "friends": f,
                "fi_reserved_bytes": world.storage.fi_footprint(me.hid.digest),
                "fi_expected_bytes": f * 33 * ledger.KIB,
                "fi_index_bytes": snap.usage.get(ledger.NS_FI_INDEX, ledger.NamespaceUsage()).bytes,
                "fi_content_bytes": snap.usage.get(ledger.NS_FI_CONTENT, ledger.NamespaceUsage()).bytes,
            }
        )
    mit_sizes = [len(c) for ns, c in world.storage.snapshot().content.values() if ns == ledger.NS_MIT_CONTENT]
    return {
        "suite": "storage",
        "rows": rows,
        "mit_record_max_bytes": max(mit_sizes),
        "mit_budget_bytes": ledger.BUDGETS[ledger.NS_MIT_CONTENT],
    }
