"""Agent-level DFS pseudo-trees, separators and induced width."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import NotADfsTraversal
from .model import ConstraintGraph, DcopInstance


@dataclass(frozen=True)
class PseudoTree:
    """A rooted DFS forest over agents.

    ``order`` is the DFS preorder (roots in the order they were chosen);
    ``pseudo_parents`` holds non-parent ancestors linked by a constraint edge.
    """

    roots: tuple[str, ...]
    parent: Mapping[str, str]
    children: Mapping[str, tuple[str, ...]]
    pseudo_parents: Mapping[str, tuple[str, ...]]
    depth: Mapping[str, int]
    order: tuple[str, ...]

    @property
    def root(self) -> str:
        return self.roots[0]

    def is_root(self, a: str) -> bool:
        return a not in self.parent

    def is_leaf(self, a: str) -> bool:
        return not self.children[a]

    def ancestors(self, a: str) -> list[str]:
        """Strict ancestors of ``a``, nearest first."""
        out = []
        while a in self.parent:
            a = self.parent[a]
            out.append(a)
        return out

    def subtree(self, a: str) -> list[str]:
        out, stack = [], [a]
        while stack:
            b = stack.pop()
            out.append(b)
            stack.extend(self.children[b])
        return out

    def root_of(self, a: str) -> str:
        while a in self.parent:
            a = self.parent[a]
        return a

    @property
    def edges(self) -> list[tuple[str, str]]:
        return [(p, c) for c, p in self.parent.items()]


def _finish(graph: ConstraintGraph, roots, parent, children, order) -> PseudoTree:
    depth = {}
    for a in order:
        depth[a] = depth[parent[a]] + 1 if a in parent else 0
    pseudo = {}
    for a in order:
        anc = set()
        b = a
        while b in parent:
            b = parent[b]
            anc.add(b)
        links = [n for n in graph.agent_adjacency[a] if n in anc and n != parent.get(a)]
        pseudo[a] = tuple(sorted(links, key=lambda n: (depth[n], n)))
    return PseudoTree(
        roots=tuple(roots),
        parent=dict(parent),
        children={a: tuple(children[a]) for a in order},
        pseudo_parents=pseudo,
        depth=depth,
        order=tuple(order),
    )


def build_pseudotree(graph: ConstraintGraph) -> PseudoTree:
    """DFS with the max-degree heuristic (ties broken by smallest agent id).

    Each component is rooted at its maximum-degree agent; neighbours are
    visited in decreasing degree order.
    """
    adj = graph.agent_adjacency
    deg = {a: len(adj[a]) for a in graph.agents}
    rank = sorted(graph.agents, key=lambda a: (-deg[a], a))
    visited: set[str] = set()
    parent: dict[str, str] = {}
    children: dict[str, list[str]] = {a: [] for a in graph.agents}
    order: list[str] = []
    roots: list[str] = []

    for r in rank:
        if r in visited:
            continue
        roots.append(r)
        visited.add(r)
        order.append(r)
        stack = [(r, iter(sorted(adj[r], key=lambda a: (-deg[a], a))))]
        while stack:
            node, it = stack[-1]
            for nxt in it:
                if nxt not in visited:
                    visited.add(nxt)
                    parent[nxt] = node
                    children[node].append(nxt)
                    order.append(nxt)
                    stack.append((nxt, iter(sorted(adj[nxt], key=lambda a: (-deg[a], a)))))
                    break
            else:
                stack.pop()
    return _finish(graph, roots, parent, children, order)


def build_pseudotree_from_order(graph: ConstraintGraph, root: str, order: Sequence[str]) -> PseudoTree:
    """Rebuild the tree implied by an explicit DFS visiting order.

    ``order`` lists agents in preorder starting with ``root``.  Each agent is
    attached to the deepest agent on the current DFS path it is connected
    to; an agent with no connection to the path starts a new tree, which is
    only legal when it has no visited neighbours at all.
    """
    adj = {a: set(n) for a, n in graph.agent_adjacency.items()}
    if not order or order[0] != root:
        raise NotADfsTraversal(f"order must start with the root {root!r}")
    if sorted(order) != sorted(graph.agents):
        raise NotADfsTraversal("order must list every agent exactly once")
    parent: dict[str, str] = {}
    children: dict[str, list[str]] = {a: [] for a in graph.agents}
    roots = [root]
    path = [root]
    visited = {root}
    for a in order[1:]:
        while path and path[-1] not in adj[a]:
            path.pop()
        if path:
            parent[a] = path[-1]
            children[path[-1]].append(a)
        elif adj[a] & visited:
            raise NotADfsTraversal(f"agent {a!r} is connected to visited agents but not to the DFS path")
        else:
            roots.append(a)
        path.append(a)
        visited.add(a)
    tree = _finish(graph, roots, parent, children, list(order))
    problems = validate_pseudotree(tree, graph)
    if problems:
        raise NotADfsTraversal("; ".join(problems))
    return tree


def validate_pseudotree(tree: PseudoTree, graph: ConstraintGraph) -> list[str]:
    """Check the three pseudo-tree conditions; return one message per violation."""
    problems = []
    agent_edges = graph.agent_edges
    # (a) tree edges must be constraint edges
    for p, c in tree.edges:
        if (min(p, c), max(p, c)) not in agent_edges:
            problems.append(f"(a) tree edge {p}-{c} has no constraint between the agents")
    # (b) rooted forest covering every agent once
    structural = []
    agents = set(graph.agents)
    if set(tree.order) != agents or len(tree.order) != len(agents):
        structural.append("(b) tree does not cover every agent exactly once")
    for c, p in tree.parent.items():
        if c not in tree.children.get(p, ()):
            structural.append(f"(b) {c} has parent {p} but is not listed among its children")
    for a in tree.order:
        seen = {a}
        b = a
        while b in tree.parent:
            b = tree.parent[b]
            if b in seen:
                structural.append(f"(b) cycle through agent {a}")
                break
            seen.add(b)
        else:
            if b not in tree.roots:
                structural.append(f"(b) agent {a} reaches {b}, which is not a root")
    if structural:
        return problems + structural
    # (c) constrained agents share a branch
    for x, y in sorted(agent_edges):
        if x not in tree.ancestors(y) and y not in tree.ancestors(x):
            problems.append(f"(c) constrained agents {x} and {y} lie on different branches")
    return problems


@dataclass(frozen=True)
class Separators:
    sep: Mapping[str, tuple[str, ...]]

    def __getitem__(self, agent: str) -> tuple[str, ...]:
        return self.sep[agent]

    def __iter__(self):
        return iter(self.sep)

    def items(self):
        return self.sep.items()


def linked_ancestor_vars(tree: PseudoTree, graph: ConstraintGraph, instance: DcopInstance, a: str) -> set[str]:
    anc = set(tree.ancestors(a))
    return {y for x in instance.vars_of(a) for y in graph.adjacency[x] if graph.owner[y] in anc}


def compute_separators(tree: PseudoTree, graph: ConstraintGraph, instance: DcopInstance) -> Separators:
    sep: dict[str, tuple[str, ...]] = {}

    def key(v):
        return (tree.depth[graph.owner[v]], v)

    for a in reversed(tree.order):
        s = linked_ancestor_vars(tree, graph, instance, a)
        for c in tree.children[a]:
            s.update(sep[c])
        s.difference_update(instance.vars_of(a))
        sep[a] = tuple(sorted(s, key=key))
    return Separators({a: sep[a] for a in tree.order})


def induced_width(tree: PseudoTree, separators: Separators) -> int:
    return max((len(s) for _, s in separators.items()), default=0)


def dump_tree(tree: PseudoTree, separators: Separators) -> str:
    """One line per agent in DFS order: ``agent parent [pseudo-parents] sep=[vars]``."""
    lines = []
    for a in tree.order:
        lines.append(f"{a} {tree.parent.get(a, '-')} [{','.join(tree.pseudo_parents[a])}] "
                     f"sep=[{','.join(separators[a])}]")
    return "\n".join(lines) + "\n"


