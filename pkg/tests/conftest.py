from __future__ import annotations

import pytest

from antidisguise.attacks import random_mid
from antidisguise.protocols.parties import Metaverse, User
from antidisguise.rng import Rng


@pytest.fixture
def rng():
    return Rng(20240601)


def make_user(world: Metaverse, name: str, rng: Rng, look: bytes | None = None) -> User:
    u = User.create(name, rng)
    world.register(u, random_mid(rng))
    u.make_avatar(look if look is not None else b"look:" + name.encode(), rng)
    return u


@pytest.fixture
def world(rng):
    return Metaverse(rng=rng)


@pytest.fixture
def trio(world, rng):
    return tuple(make_user(world, n, rng) for n in ("alice", "bob", "carol"))


# one pass/fail line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
