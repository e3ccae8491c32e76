"""``antidisguise`` command-line entry point.

Exit codes: 0 success or expected outcome, 1 usage error, 2 verification
reject, 3 storage error, 4 I/O or workspace-format error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import attacks, bench, group, ledger
from .chameleon import check
from .identity import Hid, IdentityError, mid_build, mid_parse, mit_verify
from .ledger import Storage, StorageError
from .protocols.faults import TAMPER_POINTS, make_tamper
from .protocols.meet import meet
from .protocols.messages import Channel, Reason, Rejected, Transcript
from .protocols.parties import User, fetch_mit
from .rng import Rng
from .signcryption import HybridEnvelope, SigncryptionFailure, open_hybrid, vc
from .workspace import Workspace, WorkspaceError, valid_name

EXIT_OK, EXIT_USAGE, EXIT_REJECT, EXIT_STORAGE, EXIT_IO = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default; 2 means "reject" here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class Ctx:
    def __init__(self, args: argparse.Namespace) -> None:
        self.args = args
        self.root = Path(args.workspace)
        self.json = args.report == "json"
        key = [args.command] + [str(v) for k, v in sorted(vars(args).items()) if k in _RNG_KEYS and v is not None]
        self.rng = Rng(args.seed).fork(":".join(key)) if args.seed is not None else Rng()

    def open(self) -> Workspace:
        if self.args.profile != group.PROFILE_NAME:
            raise UsageError(f"unsupported profile {self.args.profile!r}")
        return Workspace.open(self.root)

    def emit(self, result: dict, text: list[str]) -> None:
        if self.json:
            print(json.dumps(result, indent=2, sort_keys=True, default=_json_default))
        else:
            for line in text:
                print(line)


_RNG_KEYS = {"name", "prover", "verifier", "scenario", "variant", "suite", "mid", "tamper"}


def _json_default(o):
    if isinstance(o, bytes):
        return o.hex()
    raise TypeError(type(o).__name__)


def _user(ws: Workspace, name: str) -> User:
    if not valid_name(name):
        raise UsageError(f"invalid user name {name!r}")
    if not ws.has_user(name):
        raise UsageError(f"unknown user {name!r}; run keygen first")
    return ws.load_user(name)


# -- lifecycle ---------------------------------------------------------------


def cmd_setup(ctx: Ctx) -> int:
    ws = Workspace.create(ctx.root, ctx.args.profile, ctx.rng, force=ctx.args.force)
    ctx.emit(
        {"workspace": str(ws.root), "profile": ws.profile, "idp_verify_key": ws.idp.verify_key_bytes()},
        [f"workspace {ws.root} ready ({ws.profile})", f"idp verify key {ws.idp.verify_key_bytes().hex()}"],
    )
    return EXIT_OK


def cmd_keygen(ctx: Ctx) -> int:
    ws = ctx.open()
    name = ctx.args.name
    if not valid_name(name):
        raise UsageError(f"invalid user name {name!r}")
    if ws.has_user(name):
        raise UsageError(f"user {name!r} already has a keypair")
    u = User.create(name, ctx.rng)
    ws.save_user(u)
    pk = u.pk.to_bytes()
    ctx.emit({"name": name, "pk": pk}, [f"{name}: pk {pk.hex()}"])
    return EXIT_OK


def _mid_from_args(args) -> object:
    if args.mid:
        return mid_parse(args.mid)
    fields = (args.country, args.district, args.date, args.psn)
    if any(f is None for f in fields):
        raise UsageError("give --mid or all of --country --district --date --psn")
    # numeric fields are zero-padded to their width, so "--psn 1" means 000001
    return mid_build(*(int(f) if f.isdigit() else f for f in fields))


def cmd_register(ctx: Ctx) -> int:
    ws = ctx.open()
    u = _user(ws, ctx.args.name)
    mid = _mid_from_args(ctx.args)
    world = ws.world(ctx.rng)
    if u.mid is not None:
        # the ledger is write-once per Hid; report the same error a duplicate write gives
        raise ledger.DuplicateKey(f"{u.name} is already registered as Hid {u.hid.hex}")
    mit = world.register(u, mid, ctx.args.sn)
    ws.absorb(world)
    ws.save_user(u)
    ws.save()
    back = fetch_mit(ws.storage, mit.hid)
    assert back is not None and back.to_bytes() == mit.to_bytes()
    ctx.emit(
        {"name": u.name, "mid": mid.render(), "hid": mit.hid.hex, "sn": mit.sn, "mit_bytes": len(mit.to_bytes())},
        [f"{u.name}: registered Mid {mid.render()}", f"  Hid {mit.hid.hex}  SN {mit.sn}  MIT {len(mit.to_bytes())} bytes"],
    )
    return EXIT_OK


def cmd_avatar_create(ctx: Ctx) -> int:
    ws = ctx.open()
    u = _user(ws, ctx.args.name)
    if u.mid is None:
        raise UsageError(f"{u.name} must be registered before creating an avatar")
    if ctx.args.visible_file:
        visible = Path(ctx.args.visible_file).read_bytes()
    elif ctx.args.visible is not None:
        visible = ctx.args.visible.encode()
    else:
        raise UsageError("give --visible TEXT or --visible-file PATH")
    if not visible:
        raise UsageError("visible identity must be non-empty")
    av = u.make_avatar(visible, ctx.rng)
    ws.save_user(u)
    ctx.emit(
        {"name": u.name, "h": av.h.to_bytes(), "visible_bytes": len(visible)},
        [f"{u.name}: avatar h {av.h.to_bytes().hex()} over {len(visible)} visible bytes"],
    )
    return EXIT_OK


# -- verification ------------------------------------------------------------


def _verify(ws: Workspace) -> list[tuple[str, bool]]:
    checks: list[tuple[str, bool]] = []
    st = ws.storage
    for tx in st.transactions():
        try:
            st.store_get(tx.value)
            ok = True
        except StorageError:
            ok = False
        checks.append((f"content {tx.key.hex()[:24]} resolves and re-hashes", ok))
        if tx.key.startswith(ledger.MIT_KEY_PREFIX):
            mit = fetch_mit(st, Hid(tx.key[len(ledger.MIT_KEY_PREFIX) :]))
            checks.append((f"MIT {tx.key.hex()[8:24]} IDP signature", mit is not None and mit_verify(ws.idp.verify_key, mit)))

    users = {n: ws.load_user(n) for n in ws.user_names()}
    by_hid = {u.hid.digest: u for u in users.values() if u.mid is not None}
    for u in users.values():
        if u.mid is None:
            continue
        mit = fetch_mit(st, u.hid)
        checks.append((f"{u.name}: MIT on ledger binds pk", mit is not None and mit.pk == u.pk))
        if mit is not None:
            checks.append((f"{u.name}: MIT template matches enrolment", mit.template.code == u.template().code))
        if u.avatar is not None:
            av = u.avatar
            checks.append((f"{u.name}: avatar VID opens h", check(u.pk, av.h, av.M_a, av.R_a)))
            if av.pid is not None:
                checks.append((f"{u.name}: avatar PID opens h", check(u.pk, av.h, *av.pid)))

    for tx in st.transactions():
        if not tx.key.startswith(ledger.FI_KEY_PREFIX):
            continue
        idx = tx.key[len(ledger.FI_KEY_PREFIX) :]
        owner, receiver = by_hid.get(idx[:32]), by_hid.get(idx[32:])
        label = f"FI {owner.name if owner else '?'}->{receiver.name if receiver else '?'}"
        try:
            env = HybridEnvelope.from_bytes(st.store_get(tx.value))
        except (group.DecodeError, StorageError):
            checks.append((f"{label}: envelope parses", False))
            continue
        if owner is not None and receiver is not None and owner.avatar is not None:
            av = owner.avatar
            checks.append((f"{label}: publicly verifiable (vc)", vc(owner.pk, env.kem, av.h, av.M_a, av.R_a, receiver.pk)))
            if bytes(idx) in receiver.memory:
                try:
                    scene = open_hybrid(owner.pk, env, av.h, receiver.keypair.sk)
                    ok = receiver.recalls(idx, scene)
                except SigncryptionFailure:
                    ok = False
                checks.append((f"{label}: receiver recalls the scene", ok))
    return checks


def cmd_verify_workspace(ctx: Ctx) -> int:
    ws = ctx.open()
    checks = _verify(ws)
    ok = all(v for _, v in checks)
    ctx.emit(
        {"ok": ok, "checks": [{"check": c, "ok": v} for c, v in checks]},
        [f"{'ok  ' if v else 'FAIL'} {c}" for c, v in checks] + [f"{len(checks)} checks, {'all passed' if ok else 'FAILURES'}"],
    )
    return EXIT_OK if ok else EXIT_REJECT


# -- meet --------------------------------------------------------------------


def _leg_lines(leg) -> list[str]:
    lines = [
        f"{leg.verifier} verifies {leg.prover}: accepted",
        f"  recall: {leg.recall}",
        f"  key fingerprint {leg.prover}={leg.prover_key.fingerprint} {leg.verifier}={leg.verifier_key.fingerprint}"
        f" ({'equal' if leg.keys_agree else 'DIFFERENT'})",
    ]
    if leg.receipt is not None:
        lines.append(f"  FI {leg.prover}->{leg.verifier} stored: seq {leg.receipt.seq} fid {leg.receipt.fid.hex()}")
    lines.append("  " + " ".join(f"{k}={1e3 * v:.1f}ms" for k, v in leg.timings.items()))
    return lines


def _leg_json(leg) -> dict:
    return {
        "prover": leg.prover,
        "verifier": leg.verifier,
        "recall": leg.recall,
        "keys_agree": leg.keys_agree,
        "fingerprints": {leg.prover: leg.prover_key.fingerprint, leg.verifier: leg.verifier_key.fingerprint},
        "receipt": None if leg.receipt is None else {"seq": leg.receipt.seq, "fid": leg.receipt.fid},
        "timings_s": leg.timings,
    }


def _scene(path: str | None) -> bytes:
    return Path(path).read_bytes() if path else bench.sample_scene()


def cmd_meet(ctx: Ctx) -> int:
    ws = ctx.open()
    names = (ctx.args.prover, ctx.args.verifier)
    for n in names:
        if not valid_name(n):
            raise UsageError(f"invalid user name {n!r}")
    if names[0] == names[1]:
        raise UsageError("prover and verifier must differ")
    users = [ws.load_user(n) if ws.has_user(n) else None for n in names]
    if any(u is None or u.mid is None for u in users):
        missing = [n for n, u in zip(names, users) if u is None or u.mid is None]
        return _report_reject(ctx, Rejected(Reason.MISSING_MIT, "challenge"), {"unregistered": missing})
    a, b = users
    for u in users:
        if u.avatar is None:
            raise UsageError(f"{u.name} has no avatar; run avatar-create first")
    scene_a, scene_b = _scene(ctx.args.scene), _scene(ctx.args.scene_verifier or ctx.args.scene)
    tamper = make_tamper(ctx.args.tamper, ctx.rng.fork("tamper")) if ctx.args.tamper else None
    channel = Channel(Transcript(), tamper)
    world = ws.world(ctx.rng)
    try:
        res = meet(world, a, b, scene_a, scene_b, ctx.rng, channel)
    except Rejected as exc:
        _persist_meet(ws, world, a, b, channel, names)
        return _report_reject(ctx, exc, {"transcript": channel.transcript.lines()})
    path = _persist_meet(ws, world, a, b, channel, names)
    ctx.emit(
        {
            "outcome": "accepted",
            "first_meeting": res.first_meeting,
            "forward": _leg_json(res.forward),
            "backward": _leg_json(res.backward),
            "transcript_file": str(path),
            "transcript": res.transcript.lines(),
        },
        [f"meet {a.name} <-> {b.name}"]
        + _leg_lines(res.forward)
        + _leg_lines(res.backward)
        + [f"transcript: {path} ({len(res.transcript.entries)} frames)"],
    )
    return EXIT_OK


def _persist_meet(ws, world, a, b, channel, names) -> Path:
    ws.absorb(world)
    ws.save_user(a)
    ws.save_user(b)
    ws.save()
    return ws.write_transcript(f"{names[0]}-{names[1]}", channel.transcript.lines())


def _report_reject(ctx: Ctx, exc: Rejected, extra: dict) -> int:
    ctx.emit(
        {"outcome": "reject", "reason": exc.reason.value, "phase": exc.phase, **extra},
        [f"reject: {exc.reason.value} (phase {exc.phase})"],
    )
    return EXIT_REJECT


# -- attacks and benchmarks --------------------------------------------------


def cmd_attack(ctx: Ctx) -> int:
    a = ctx.args
    world = None
    if Workspace.meta_path(ctx.root).exists():
        # borrow the workspace's IDP and contract over a scratch copy of its ledger
        ws = ctx.open()
        world = ws.world(ctx.rng)
        world.storage = Storage.from_bytes(ws.storage.to_bytes())
        world.contract.storage = world.storage
    if a.scenario != "all" and a.variant and a.variant not in attacks.VARIANTS[a.scenario]:
        raise UsageError(f"scenario {a.scenario} has variants {', '.join(attacks.VARIANTS[a.scenario])}")
    outcomes: list[attacks.Outcome] = []
    for i in range(a.runs):
        rng = ctx.rng.fork(f"run{i}")
        if a.scenario == "all":
            outcomes += attacks.run_all(rng, concurrent=a.stress, world=world)
        else:
            outcomes += attacks.run_scenario(a.scenario, a.variant, world, rng, tag=f"r{i}.")
    ok = all(o.defended and o.control_ok for o in outcomes)
    text = [
        f"{o.scenario:<9} {o.variant:<18} outcome={'Reject' if o.defended else 'ACCEPTED'} "
        f"phase={o.phase} reason={o.reason} control={'ok' if o.control_ok else 'FAILED'}"
        for o in outcomes
    ]
    successes = sum(o.adversary_success for o in outcomes)
    text.append(f"{len(outcomes)} runs, adversary successes: {successes}")
    ctx.emit({"ok": ok, "adversary_successes": successes, "outcomes": [o.to_json() for o in outcomes]}, text)
    return EXIT_OK if ok else EXIT_REJECT


def cmd_bench(ctx: Ctx) -> int:
    a = ctx.args
    suites = ("crypto", "protocol", "storage") if a.suite == "all" else (a.suite,)
    result: dict = {"environment": bench.environment()}
    text = ["environment: " + ", ".join(f"{k}={v}" for k, v in result["environment"].items())]
    for s in suites:
        if s == "crypto":
            r = bench.bench_crypto(a.iterations, rng=ctx.rng.fork("crypto"))
            text.append(f"crypto medians over {r['iterations']} runs (n={r['message_bits']} bits):")
            text += [f"  {k:<8} {v:8.2f} ms" for k, v in r["median_ms"].items()]
        elif s == "protocol":
            r = bench.bench_protocol(max(1, a.iterations // 4), rng=ctx.rng.fork("protocol"))
            text.append(f"protocol: first meeting {r['first_meeting_s']:.3f} s, second meeting median {r['second_meeting_median_s']:.3f} s")
            text += [f"  {k:<16} {v:8.2f} ms" for k, v in r["second_meeting_step_median_ms"].items()]
        else:
            friends = tuple(int(x) for x in a.friends.split(","))
            r = bench.bench_storage(friends, rng=ctx.rng.fork("storage"))
            text.append("storage: friends  FI reserved (bytes)  f*33 KiB  actual index+content")
            text += [
                f"  {row['friends']:>7}  {row['fi_reserved_bytes']:>19}  {row['fi_expected_bytes']:>8}  "
                f"{row['fi_index_bytes'] + row['fi_content_bytes']}"
                for row in r["rows"]
            ]
            text.append(f"  MIT record {r['mit_record_max_bytes']} bytes (budget {r['mit_budget_bytes']})")
        result[s] = r
    ctx.emit(result, text)
    return EXIT_OK


def cmd_ledger_dump(ctx: Ctx) -> int:
    ws = ctx.open()
    txs = ws.storage.transactions()
    ctx.emit(
        {"entries": [{"seq": t.seq, "key": t.key, "value": t.value} for t in txs]},
        [f"{t.key.hex()} -> {t.value.hex()}" for t in txs],
    )
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="antidisguise", description="First-impression avatar authentication simulator")
    p.add_argument("--workspace", default="./workspace", help="workspace directory (default ./workspace)")
    p.add_argument("--seed", default=None, help="seed every randomized step (reproducible, NOT secure)")
    p.add_argument("--profile", default=group.PROFILE_NAME, help=f"parameter profile (only {group.PROFILE_NAME})")
    p.add_argument("--report", choices=("text", "json"), default="text")
    p.add_argument("--tamper", choices=TAMPER_POINTS, default=None, help="corrupt one wire field during meet")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("setup", help="create a workspace with mock IDP and contract keys")
    s.add_argument("--force", action="store_true", help="reset an existing workspace")
    s.set_defaults(func=cmd_setup)

    s = sub.add_parser("keygen", help="create a user keypair")
    s.add_argument("name")
    s.set_defaults(func=cmd_keygen)

    s = sub.add_parser("register", help="issue a MIT through the mock IDP and store it")
    s.add_argument("name")
    s.add_argument("--mid", help="23-digit Mid")
    s.add_argument("--country")
    s.add_argument("--district")
    s.add_argument("--date", help="YYYYMMDD")
    s.add_argument("--psn")
    s.add_argument("--sn", type=int, default=None, help="MIT serial number (default: next free)")
    s.set_defaults(func=cmd_register)

    s = sub.add_parser("avatar-create", help="bind a visible identity to a fresh chameleon hash")
    s.add_argument("name")
    s.add_argument("--visible", help="visible identity as text")
    s.add_argument("--visible-file", help="visible identity read from a file")
    s.set_defaults(func=cmd_avatar_create)

    s = sub.add_parser("verify-workspace", help="re-check every stored signature and chameleon relation")
    s.set_defaults(func=cmd_verify_workspace)

    s = sub.add_parser("meet", help="mutual avatar authentication (first meeting stores FIs)")
    s.add_argument("prover")
    s.add_argument("verifier")
    s.add_argument("--scene", help="scene file for the prover's first impression (default: bundled sample)")
    s.add_argument("--scene-verifier", help="scene file for the verifier's first impression")
    s.set_defaults(func=cmd_meet)

    s = sub.add_parser("attack", help="run adversary scenarios with honest controls")
    s.add_argument("scenario", choices=attacks.SCENARIOS + ("all",))
    s.add_argument("--variant", default=None)
    s.add_argument("--runs", type=int, default=1)
    s.add_argument("--stress", action="store_true", help="run scenarios concurrently on one ledger (with 'all')")
    s.set_defaults(func=cmd_attack)

    s = sub.add_parser("bench", help="desk-scale measurements")
    s.add_argument("suite", choices=("crypto", "protocol", "storage", "all"))
    s.add_argument("--iterations", type=int, default=20)
    s.add_argument("--friends", default=",".join(map(str, bench.FRIEND_COUNTS)))
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("ledger", help="ledger inspection")
    lsub = s.add_subparsers(dest="ledger_command", required=True, parser_class=_Parser)
    d = lsub.add_parser("dump", help="print entries as hex key -> hex value")
    d.set_defaults(func=cmd_ledger_dump)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        ctx = Ctx(args)
        return args.func(ctx)
    except (UsageError, IdentityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Rejected as exc:
        print(f"reject: {exc.reason.value} (phase {exc.phase})", file=sys.stderr)
        return EXIT_REJECT
    except ledger.DuplicateKey as exc:
        print(f"error: {Reason.ALREADY_WRITTEN.value}: {exc}", file=sys.stderr)
        return EXIT_STORAGE
    except StorageError as exc:
        print(f"storage error: {exc}", file=sys.stderr)
        return EXIT_STORAGE
    except (WorkspaceError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
