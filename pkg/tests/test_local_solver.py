import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from dpopkit import (AgentContext, Constraint, HardRule, Table, UtilTable, build_constraint_graph, compute_separators,
                     compute_util, join_tables, lookup_value)
from dpopkit.errors import MissingEntry, ScopeMismatch, SolveTimeout
from dpopkit.local_solver import STRATEGIES, build_contexts
from dpopkit.utility import NEG_INF


@pytest.fixture
def star4_contexts(star4, star4_tree):
    seps = compute_separators(star4_tree, build_constraint_graph(star4), star4)
    return build_contexts(star4, star4_tree, seps)


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_star4_leaf_and_middle(star4_contexts, strategy):
    leaf = compute_util(star4_contexts["a3"], strategy)
    assert leaf.table.variables == ("x2",)
    assert leaf.table.rows == {(0,): 20, (1,): 8}
    assert leaf.cache.entries == {(0,): ((1,), 20), (1,): ((0,), 8)}
    assert lookup_value(leaf.cache, (1,)) == (0,)

    ctx = star4_contexts["a2"]
    ctx.child_tables = [leaf.table, compute_util(star4_contexts["a4"], strategy).table]
    mid = compute_util(ctx, strategy)
    assert mid.table.rows == {(0,): 45, (1,): 48}
    assert lookup_value(mid.cache, (1,)) == (0,)


def test_star4_joins():
    x2 = (("x2", 0, 1),)
    t = UtilTable(x2, {(0,): 20, (1,): 8})
    assert join_tables([t, t], x2).rows == {(0,): 40, (1,): 16}
    c21 = UtilTable((("x2", 0, 1), ("x1", 0, 1)), {(0, 0): 5, (0, 1): 8, (1, 0): 20, (1, 1): 2})
    joined = join_tables([c21, t, t], (("x2", 0, 1), ("x1", 0, 1)))
    assert sorted(joined.rows.values()) == [18, 36, 45, 48]
    with pytest.raises(ScopeMismatch):
        join_tables([c21], x2)


def test_sparse_join_drops_infeasible_rows():
    a = UtilTable((("x", 0, 1),), {(1,): 3}, dense=False)
    b = UtilTable((("x", 0, 1),), {(0,): 1, (1,): 1})
    j = join_tables([a, b], (("x", 0, 1),))
    assert j.rows == {(1,): 4} and not j.dense


def test_missing_entry():
    ctx = AgentContext("a", ("x",), ("y",), {"x": (0, 1), "y": (0, 1)},
                       (Constraint("c", ("x", "y"), HardRule((1, 1), "=", 3)),))
    res = compute_util(ctx, "sparse")
    assert res.table.rows == {}
    with pytest.raises(MissingEntry):
        lookup_value(res.cache, (0,))
    dense = compute_util(ctx, "dense")
    assert dense.table.rows == {(0,): NEG_INF, (1,): NEG_INF}


def test_scope_mismatch():
    ctx = AgentContext("a", ("x",), (), {"x": (0, 1)}, (Constraint("c", ("x", "z"), Table({})),))
    with pytest.raises(ScopeMismatch):
        compute_util(ctx)
    bad_child = AgentContext("a", ("x",), (), {"x": (0, 1)}, (), [UtilTable((("x", 0, 2),), {})])
    with pytest.raises(ScopeMismatch):
        compute_util(bad_child)


def test_deadline():
    doms = {f"v{i}": (0, 9) for i in range(6)}
    ctx = AgentContext("a", tuple(doms), (), doms)
    with pytest.raises(SolveTimeout):
        compute_util(ctx, "dense", deadline=0.0)


def random_context(rnd: random.Random) -> AgentContext:
    nl, nh = rnd.randint(1, 3), rnd.randint(0, 2)
    low = tuple(f"l{i}" for i in range(nl))
    high = tuple(f"h{i}" for i in range(nh))
    domains = {}
    for v in (*low, *high):
        lo = rnd.randint(-1, 1)
        domains[v] = (lo, lo + rnd.randint(0, 3))
    names = [*low, *high]
    cons = []
    for i in range(rnd.randint(0, 4)):
        scope = tuple(rnd.sample(names, rnd.randint(1, min(3, len(names)))))
        if rnd.random() < 0.3:
            body = HardRule(tuple(rnd.choice((-1, 1, 2)) for _ in scope), rnd.choice(("=", "<=", "!=", ">")),
                            rnd.randint(-1, 2), rnd.randint(0, 3))
        else:
            rows = {}
            for tup in itertools.product(*(range(domains[v][0], domains[v][1] + 1) for v in scope)):
                if rnd.random() < 0.6:
                    rows[tup] = rnd.randint(-5, 20)
            body = Table(rows, default_neginf=rnd.random() < 0.6)
        cons.append(Constraint(f"c{i}", scope, body))
    children = []
    for _ in range(rnd.randint(0, 2)):
        scope = tuple(rnd.sample(names, rnd.randint(1, len(names))))
        ent = tuple((v, *domains[v]) for v in scope)
        rows = {t: rnd.randint(0, 30) for t in itertools.product(*(range(lo, hi + 1) for _, lo, hi in ent))
                if rnd.random() < 0.7}
        children.append(UtilTable(ent, rows, dense=False))
    return AgentContext("a", low, high, domains, tuple(cons), children)


def double_loop(ctx: AgentContext):
    """Reference max-projection: enumerate high x low and keep the first maximiser."""
    def rng(v):
        lo, hi = ctx.domains[v]
        return range(lo, hi + 1)

    best = {}
    for h in itertools.product(*(rng(v) for v in ctx.high_vars)):
        top = None
        for l in itertools.product(*(rng(v) for v in ctx.low_vars)):
            theta = dict(zip(ctx.high_vars, h)) | dict(zip(ctx.low_vars, l))
            u = 0
            for c in ctx.constraints:
                x = c.body.lookup(tuple(theta[v] for v in c.scope))
                u = NEG_INF if NEG_INF in (u, x) else u + x
            for t in ctx.child_tables:
                x = t.rows.get(tuple(theta[v] for v in t.variables), NEG_INF)
                u = NEG_INF if NEG_INF in (u, x) else u + x
            if top is None or u > top[1]:
                top = (l, u)
        best[h] = top
    return best


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32))
def test_strategies_match_double_loop(seed):
    ctx = random_context(random.Random(seed))
    ref = double_loop(ctx)
    finite = {h: e for h, e in ref.items() if e[1] != NEG_INF}
    dense = compute_util(ctx, "dense")
    assert dense.table.rows == {h: u for h, (_, u) in ref.items()}
    assert {h: e for h, e in dense.cache.entries.items() if e[1] != NEG_INF} == finite
    for s in ("sparse", "rules"):
        res = compute_util(ctx, s)
        assert res.table.rows == {h: u for h, (_, u) in finite.items()}
        assert res.cache.entries == finite
        assert not res.table.dense
