"""Acceptance criteria. Each test prints one PASS/FAIL line in the run summary."""

from __future__ import annotations

import time

import pytest

from antidisguise import attacks, bench, group, ledger
from antidisguise.chameleon import chameleon_hash, check, collide, keygen
from antidisguise.rng import Rng
from antidisguise.signcryption import Ciphertext, SigncryptionFailure, dsc, sc, vc

from .conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.slow

TRIALS = 1000
RUNS_PER_SCENARIO = 100
FORGERY_ATTEMPTS = 10_000


def report(name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_scheme_correctness():
    rng = Rng("accept:correctness")
    failures = 0
    for i in range(TRIALS):
        a, b = keygen(rng=rng), keygen(rng=rng)
        M_a = rng.token_bytes(24)
        h, R = chameleon_hash(a.pk, M_a, rng)
        n = (128, 2176)[i % 2]
        M = rng.token_bytes(n // 8)
        ct = sc(a.sk, h, M, b.pk, rng)
        try:
            opened = dsc(a.pk, ct.to_bytes(), h, b.sk)
        except SigncryptionFailure:
            failures += 1
            continue
        # the recovered pair must satisfy the opening equation on its own
        if opened.M != M or not check(a.pk, h, opened.M, opened.R) or not check(a.pk, h, M_a, R):
            failures += 1
    report("scheme correctness", failures == 0, f"{TRIALS} roundtrips over n in {{128, 2176}}, {failures} failures")


def test_public_verifiability():
    rng = Rng("accept:vc")
    honest_rejects = 0
    false_accepts = {"wrong pk_A+h_A": 0, "wrong pk_B": 0, "wrong VID triple": 0}
    for _ in range(TRIALS):
        a, b, c = keygen(rng=rng), keygen(rng=rng), keygen(rng=rng)
        M_a = rng.token_bytes(24)
        h, R = chameleon_hash(a.pk, M_a, rng)
        ct = sc(a.sk, h, rng.token_bytes(16), b.pk, rng)
        if not vc(a.pk, ct, h, M_a, R, b.pk):
            honest_rejects += 1
        M_c = rng.token_bytes(24)
        h_c, R_c = chameleon_hash(c.pk, M_c, rng)
        false_accepts["wrong pk_A+h_A"] += vc(c.pk, ct, h_c, M_c, R_c, b.pk)
        false_accepts["wrong pk_B"] += vc(a.pk, ct, h, M_a, R, c.pk)
        h2, R2 = chameleon_hash(a.pk, M_a, rng)  # the owner's other, unrelated VID
        false_accepts["wrong VID triple"] += vc(a.pk, ct, h2, M_a, R2, b.pk)
    ok = honest_rejects == 0 and not any(false_accepts.values())
    detail = f"{TRIALS} honest, {honest_rejects} rejected; false accepts " + ", ".join(
        f"{k}={v}/{TRIALS}" for k, v in false_accepts.items()
    )
    report("public verifiability", ok, detail)


def test_tamper_completeness():
    rng = Rng("accept:tamper")
    a, b = keygen(rng=rng), keygen(rng=rng)
    h, _ = chameleon_hash(a.pk, b"visible identity", rng)
    ct = sc(a.sk, h, rng.token_bytes(16), b.pk, rng)
    assert ct.n_bits == 128
    raw = ct.to_bytes()
    # K, Z and R'' are the trailing fields; everything before them is the header
    field_bits = 8 * (len(ct.K.to_bytes()) + len(ct.Z) + len(ct.Rpp.to_bytes()))
    start = 8 * len(raw) - field_bits
    accepts = 0
    for bit in range(start, 8 * len(raw)):
        flipped = bytearray(raw)
        flipped[bit // 8] ^= 1 << (bit % 8)
        try:
            dsc(a.pk, bytes(flipped), h, b.sk)
            accepts += 1
        except SigncryptionFailure:
            pass
    expected = 3 * group.L_BITS + 128
    report("tamper completeness", accepts == 0 and field_bits == expected, f"{field_bits} single-bit flips, {accepts} accepted")


def test_chameleon_collision_property():
    rng = Rng("accept:collide")
    failures = 0
    for _ in range(TRIALS):
        kp = keygen(rng=rng)
        M, M2 = rng.token_bytes(32), rng.token_bytes(32)
        h, R = chameleon_hash(kp.pk, M, rng)
        if not check(kp.pk, h, M2, collide(kp.sk, h, M, R, M2)):
            failures += 1
    kp = keygen(rng=rng)
    chain = [rng.token_bytes(32) for _ in range(4)]
    h, R = chameleon_hash(kp.pk, chain[0], rng)
    chained_ok = True
    for prev, nxt in zip(chain, chain[1:]):
        R = collide(kp.sk, h, prev, R, nxt)
        chained_ok &= check(kp.pk, h, nxt, R)
    report(
        "chameleon collision",
        failures == 0 and chained_ok,
        f"{TRIALS} collisions, {failures} failures; chained triple collision {'verifies' if chained_ok else 'FAILS'}",
    )


def test_attack_suite():
    rng = Rng("accept:attacks")
    summary, bad = [], []
    for name in attacks.SCENARIOS:
        variants = attacks.VARIANTS[name]
        successes = undefended = control_fail = 0
        seen = set()
        for i in range(RUNS_PER_SCENARIO):
            (o,) = attacks.run_scenario(name, variants[i % len(variants)], rng=rng.fork(f"{name}.{i}"))
            seen.add((o.variant, o.phase, o.reason))
            successes += o.adversary_success
            undefended += not o.defended
            control_fail += not o.control_ok
        if successes or undefended or control_fail:
            bad.append(name)
        summary.append(f"{name} {RUNS_PER_SCENARIO} runs, {successes} successes, {control_fail} control failures")
        # every run of a variant rejects at one and the same phase
        assert len(seen) == len(variants), seen
    report("attack suite", not bad, "; ".join(summary))


def test_timing_desk_scale():
    rng = Rng("accept:timing")
    crypto = bench.bench_crypto(iterations=51, rng=rng)
    proto = bench.bench_protocol(iterations=11, rng=rng)
    sc_ms = crypto["median_ms"]["sc"]
    meet_s = proto["second_meeting_median_s"]
    report(
        "timing",
        sc_ms <= 400 and meet_s <= 2.5,
        f"median sc {sc_ms:.1f} ms (limit 400), median second mutual meet {meet_s * 1e3:.0f} ms (limit 2500)"
        f" [vc {crypto['median_ms']['vc']:.1f} ms, dsc {crypto['median_ms']['dsc']:.1f} ms]",
    )


def test_storage_model():
    rng = Rng("accept:storage")
    res = bench.bench_storage(friends=(20, 40, 60, 80, 100), rng=rng)
    kib = 1024
    linear = all(r["fi_reserved_bytes"] == r["friends"] * 33 * kib for r in res["rows"])
    within = all(
        r["fi_index_bytes"] <= r["friends"] * kib and r["fi_content_bytes"] <= r["friends"] * 32 * kib
        for r in res["rows"]
    )
    mit_ok = res["mit_record_max_bytes"] <= 256 * kib and ledger.BUDGETS[ledger.NS_MIT_CONTENT] == 256 * kib
    rows = ", ".join(f"{r['friends']}->{r['fi_reserved_bytes']}" for r in res["rows"])
    report(
        "storage model",
        linear and within and mit_ok,
        f"FI bytes {rows}; largest MIT record {res['mit_record_max_bytes']} bytes (limit {256 * kib})",
    )


def test_unforgeability_smoke():
    rng = Rng("accept:forgery")
    a, b = keygen(rng=rng), keygen(rng=rng)
    M_a = b"visible identity"
    h, R = chameleon_hash(a.pk, M_a, rng)
    sc_accepts = check_accepts = 0
    t0 = time.perf_counter()
    for i in range(FORGERY_ATTEMPTS):
        n = 16 if i % 2 else 272
        forged = Ciphertext(group.random_element(rng), rng.token_bytes(n + group.L_BYTES), group.random_element(rng))
        try:
            dsc(a.pk, forged, h, b.sk)
            sc_accepts += 1
        except SigncryptionFailure:
            pass
        sc_accepts += vc(a.pk, forged, h, M_a, R, b.pk)
        check_accepts += check(a.pk, h, rng.token_bytes(16), group.random_element(rng))
    elapsed = time.perf_counter() - t0
    report(
        "unforgeability smoke",
        sc_accepts == 0 and check_accepts == 0,
        f"{FORGERY_ATTEMPTS} forged ciphertexts ({sc_accepts} accepted by dsc or vc), "
        f"{FORGERY_ATTEMPTS} forged openings ({check_accepts} accepted) in {elapsed:.0f} s",
    )

