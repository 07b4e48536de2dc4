import random

import networkx as nx
import pytest

from dpopkit import (Constraint, DcopInstance, RandomGraphParams, Table, Variable, build_constraint_graph,
                     build_pseudotree, build_pseudotree_from_order, compute_separators, generate_random,
                     induced_width, validate_pseudotree)
from dpopkit.errors import InvalidParams, NotADfsTraversal
from dpopkit.pseudotree import PseudoTree, dump_tree


def chain_instance(agent_edges, n_agents):
    """One binary variable per agent, one zero table per agent edge."""
    agents = [f"a{i}" for i in range(n_agents)]
    variables = {f"x{i}": Variable(f"x{i}", 0, 1) for i in range(n_agents)}
    cons = {}
    for i, j in agent_edges:
        cid = f"c{i}_{j}"
        cons[cid] = Constraint(cid, (f"x{i}", f"x{j}"), Table({}))
    return DcopInstance(variables, cons, tuple(agents), {f"x{i}": f"a{i}" for i in range(n_agents)})


def random_instances(n, seed):
    rnd = random.Random(seed)
    out = []
    while len(out) < n:
        nv = rnd.randint(2, 12)
        p = RandomGraphParams(rnd.randint(1, min(6, nv)), nv, 2, rnd.choice([0.1, 0.2, 0.4, 0.7]), 0.0,
                              rnd.randrange(2**32))
        try:
            out.append(generate_random(p))
        except InvalidParams:
            pass
    return out


def test_path():
    inst = chain_instance([(0, 1), (1, 2), (2, 3)], 4)
    g = build_constraint_graph(inst)
    t = build_pseudotree(g)
    assert t.roots == ("a1",)
    assert t.order == ("a1", "a2", "a3", "a0")
    assert t.parent == {"a0": "a1", "a2": "a1", "a3": "a2"}
    assert all(not pp for pp in t.pseudo_parents.values())
    seps = compute_separators(t, g, inst)
    assert seps["a3"] == ("x2",) and seps["a1"] == ()
    assert induced_width(t, seps) == 1


def test_triangle_has_a_back_edge():
    inst = chain_instance([(0, 1), (1, 2), (0, 2)], 3)
    g = build_constraint_graph(inst)
    t = build_pseudotree(g)
    assert t.order == ("a0", "a1", "a2")
    assert t.pseudo_parents["a2"] == ("a0",)
    seps = compute_separators(t, g, inst)
    assert seps["a2"] == ("x0", "x1")
    assert seps["a1"] == ("x0",)
    assert dump_tree(t, seps) == "a0 - [] sep=[]\na1 a0 [] sep=[x0]\na2 a1 [a0] sep=[x0,x1]\n"


def test_disconnected_graph_is_a_forest():
    inst = chain_instance([(0, 1), (2, 3), (3, 4)], 6)
    t = build_pseudotree(build_constraint_graph(inst))
    assert t.roots == ("a3", "a0", "a5")
    assert validate_pseudotree(t, build_constraint_graph(inst)) == []


def test_from_order(star4):
    g = build_constraint_graph(star4)
    t = build_pseudotree_from_order(g, "a1", ["a1", "a2", "a3", "a4"])
    assert t.parent == {"a2": "a1", "a3": "a2", "a4": "a2"}
    assert t.children["a2"] == ("a3", "a4")
    with pytest.raises(NotADfsTraversal):
        build_pseudotree_from_order(g, "a3", ["a3", "a4", "a2", "a1"])
    with pytest.raises(NotADfsTraversal):
        build_pseudotree_from_order(g, "a1", ["a1", "a2", "a3"])
    with pytest.raises(NotADfsTraversal):
        build_pseudotree_from_order(g, "a1", ["a2", "a1", "a3", "a4"])


def test_validate_reports_each_condition(star4):
    g = build_constraint_graph(star4)
    good = build_pseudotree_from_order(g, "a1", ["a1", "a2", "a3", "a4"])
    bad_edge = PseudoTree(("a1",), {"a2": "a1", "a3": "a1", "a4": "a2"},
                          {"a1": ("a2", "a3"), "a2": ("a4",), "a3": (), "a4": ()},
                          {a: () for a in g.agents}, {"a1": 0, "a2": 1, "a3": 1, "a4": 2}, ("a1", "a2", "a4", "a3"))
    msgs = validate_pseudotree(bad_edge, g)
    assert any(m.startswith("(a)") for m in msgs) and any(m.startswith("(c)") for m in msgs)
    missing = PseudoTree(("a1",), {"a2": "a1"}, {"a1": ("a2",), "a2": ()}, {}, {"a1": 0, "a2": 1}, ("a1", "a2"))
    assert any(m.startswith("(b)") for m in validate_pseudotree(missing, g))
    assert validate_pseudotree(good, g) == []


def test_heuristic_trees_are_valid():
    for inst in random_instances(500, seed=7):
        g = build_constraint_graph(inst)
        t = build_pseudotree(g)
        assert validate_pseudotree(t, g) == []
        deg = {a: len(g.agent_adjacency[a]) for a in g.agents}
        assert t.roots[0] == min(g.agents, key=lambda a: (-deg[a], a))
        assert len(t.roots) == nx.number_connected_components(
            nx.Graph([*g.agent_edges, *((a, a) for a in g.agents)]))


def brute_separator(inst, g, t, a):
    below = {v for b in t.subtree(a) for v in inst.vars_of(b)}
    above = {v for b in t.ancestors(a) for v in inst.vars_of(b)}
    return {y for x in below for y in g.adjacency[x] if y in above}


def elimination_width(inst, g, t):
    """Eliminate agent clusters in reverse DFS order on the variable graph."""
    h = nx.Graph()
    h.add_nodes_from(g.nodes)
    h.add_edges_from(g.edges)
    width = 0
    for a in reversed(t.order):
        mine = set(inst.vars_of(a))
        nbrs = {y for x in mine for y in h[x]} - mine
        width = max(width, len(nbrs))
        h.add_edges_from((u, v) for u in nbrs for v in nbrs if u < v)
        h.remove_nodes_from(mine)
    return width


def test_separators_and_width_against_oracles():
    for inst in random_instances(300, seed=11):
        g = build_constraint_graph(inst)
        t = build_pseudotree(g)
        seps = compute_separators(t, g, inst)
        for a in t.order:
            assert set(seps[a]) == brute_separator(inst, g, t, a)
            assert len(seps[a]) == len(set(seps[a]))
        assert induced_width(t, seps) == elimination_width(inst, g, t)
