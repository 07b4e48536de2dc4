import pytest

from dpopkit import RandomGraphParams, Status, build_constraint_graph, compute_separators, generate_random, solve
from dpopkit.errors import ProtocolViolation
from dpopkit.local_solver import build_contexts
from dpopkit.runtime import (AgentState, DpopAgent, DpopMessage, Kind, Phase, RunOptions, advance_clock,
                             merge_clock)
from dpopkit.utility import NEG_INF

from conftest import small_corpus


def _state(name="p"):
    return AgentState(name, None, set())


def test_clock_takes_the_slowest_child():
    st = _state()
    merge_clock(st, DpopMessage(Kind.UTIL, "c1", "p", 5))
    merge_clock(st, DpopMessage(Kind.UTIL, "c2", "p", 9))
    assert advance_clock(st, 3) == 12
    assert st.clock_trace == [5, 9, 12]


def test_clock_never_moves_back():
    st = _state()
    advance_clock(st, 20)
    assert merge_clock(st, DpopMessage(Kind.VALUE, "q", "p", 4), latency=10) == 20
    assert merge_clock(st, DpopMessage(Kind.VALUE, "q", "p", 15), latency=10) == 25


@pytest.mark.parametrize("k,c", [(1, 7), (4, 3), (10, 1)])
def test_chain_clock_is_additive(k, c):
    clock = 0
    for _ in range(k):
        st = _state()
        merge_clock(st, DpopMessage(Kind.UTIL, "prev", "p", clock))
        clock = advance_clock(st, c)
    assert clock == k * c


def test_phases_only_move_forward():
    st = _state()
    st.enter(Phase.WAITING_VALUE)
    with pytest.raises(ProtocolViolation):
        st.enter(Phase.COMPUTING_UTIL)


def critical_path(report, latency):
    """Simulated runtime predicted from per-agent costs and the tree shape."""
    tree = report.tree
    finish = {}
    for a in reversed(tree.order):
        ready = max((finish[c] + latency for c in tree.children[a]), default=0)
        finish[a] = ready + report.agent_costs[a]
    if report.status is not Status.OPTIMAL and report.metrics.abort_messages == 0:
        return max(finish.values())
    return max(finish[tree.root_of(a)] + latency * tree.depth[a] for a in tree.order)


@pytest.mark.parametrize("latency", [0, 100])
def test_simulated_runtime_is_critical_path(latency):
    for p in small_corpus(40):
        rep = solve(generate_random(p), "sparse", latency=latency)
        assert rep.metrics.simulated_runtime_ns == critical_path(rep, latency)


def test_value_before_util_is_rejected(star4, star4_tree):
    seps = compute_separators(star4_tree, build_constraint_graph(star4), star4)
    ctx = build_contexts(star4, star4_tree, seps)["a2"]
    agent = DpopAgent(AgentState("a2", ctx, {"a3", "a4"}), star4_tree, seps, RunOptions(), lambda m: None)
    gen = agent.lifecycle()
    next(gen)
    with pytest.raises(ProtocolViolation):
        gen.send(DpopMessage(Kind.VALUE, "a1", "a2", 0, bindings=(("x1", 0),)))


def test_wrong_separator_in_util_is_rejected(star4, star4_tree):
    seps = compute_separators(star4_tree, build_constraint_graph(star4), star4)
    ctx = build_contexts(star4, star4_tree, seps)["a2"]
    agent = DpopAgent(AgentState("a2", ctx, {"a3", "a4"}), star4_tree, seps, RunOptions(), lambda m: None)
    gen = agent.lifecycle()
    next(gen)
    with pytest.raises(ProtocolViolation):
        gen.send(DpopMessage(Kind.UTIL, "a3", "a2", 0, scope=(("x1", 0, 1),), rows=((1, 0),)))


@pytest.mark.parametrize("scheduler", ["deterministic", "threads"])
def test_star4_schedulers(star4, star4_tree, scheduler):
    rep = solve(star4, "rules", pinned_tree=star4_tree, scheduler=scheduler)
    assert rep.status is Status.OPTIMAL and rep.utility == 48
    assert rep.assignment == {"x1": 1, "x2": 0, "x3": 1, "x4": 1}
    assert rep.to_text().splitlines()[0] == "status=Optimal utility=48 strategy=rules"


@pytest.mark.parametrize("scheduler", ["deterministic", "threads"])
def test_infeasible(scheduler):
    inst = generate_random(RandomGraphParams(5, 15, 6, 0.6, 0.6, seed=1))
    rep = solve(inst, "rules", scheduler=scheduler)
    assert rep.status is Status.INFEASIBLE and rep.exit_code == 2
    assert rep.utility == NEG_INF and rep.assignment is None
    assert rep.metrics.util_messages == 4
    assert rep.metrics.abort_messages == 4 and rep.metrics.value_messages == 0


@pytest.mark.parametrize("scheduler", ["deterministic", "threads"])
def test_timeout(scheduler):
    inst = generate_random(RandomGraphParams(2, 14, 8, 0.9, 0.0, seed=3))
    rep = solve(inst, "dense", timeout=0.2, scheduler=scheduler)
    assert rep.status is Status.TIMEOUT and rep.exit_code == 3


def test_single_agent_and_forest():
    inst = generate_random(RandomGraphParams(1, 4, 3, 0.5, 0.3, seed=9))
    rep = solve(inst, "sparse")
    assert rep.metrics.util_messages == 0 and rep.metrics.value_messages == 0
    forest = generate_random(RandomGraphParams(5, 10, 2, 0.1, 0.0, seed=4))
    rep = solve(forest, "dense")
    comps = len(rep.tree.roots)
    assert comps > 1
    assert rep.metrics.util_messages == rep.metrics.value_messages == len(forest.agents) - comps


def test_traces_and_util_scopes():
    for p in small_corpus(30):
        inst = generate_random(p)
        rep = solve(inst, "rules", scheduler="threads")
        for a, trace in rep.clock_traces.items():
            assert trace == sorted(trace)
        for a, table in rep.tables.items():
            anc = set(rep.tree.ancestors(a))
            assert all(inst.owner[v] in anc for v in table.variables)
