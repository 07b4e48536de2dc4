"""Shared fixtures and the one-line-per-criterion acceptance report."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from dpopkit import RandomGraphParams, build_constraint_graph, build_pseudotree_from_order, load_instance
from dpopkit.errors import InvalidParams

PKG_FIXTURES = Path(__file__).resolve().parents[1] / "src" / "dpopkit" / "fixtures"
TEST_FIXTURES = Path(__file__).resolve().parent / "fixtures"

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def record(criterion: str, ok: bool, detail: str = "") -> None:
    _ACCEPTANCE.append((criterion, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}" + (f" -- {detail}" if detail else ""))


def small_corpus(n: int = 200) -> list[RandomGraphParams]:
    """Seeded random instances small enough for the literal oracle.

    |X| in 3..10, |A| <= 5, d in {2, 3, 4}; p1 cycles through 0.3/0.5/0.7
    and p2 through 0.0/0.3/0.6/0.9 so every pair is covered.
    """
    p1s, p2s = (0.3, 0.5, 0.7), (0.0, 0.3, 0.6, 0.9)
    out, i = [], 0
    while len(out) < n:
        r = random.Random(i)
        i += 1
        d = r.choice((2, 3, 4))
        nv = r.randint(3, 10)
        na = r.randint(1, min(5, nv))
        p = RandomGraphParams(na, nv, d, p1s[len(out) % 3], p2s[(len(out) // 3) % 4], seed=1000 + i)
        try:
            p.validate()
        except InvalidParams:
            continue
        out.append(p)
    return out


@pytest.fixture(scope="session")
def corpus():
    return small_corpus()


@pytest.fixture(scope="session")
def star4():
    return load_instance(PKG_FIXTURES / "star4.dcop")


@pytest.fixture(scope="session")
def star4_tree(star4):
    return build_pseudotree_from_order(build_constraint_graph(star4), "a1", ["a1", "a2", "a3", "a4"])
