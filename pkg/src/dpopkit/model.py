"""DCOP problem representation: variables, constraints, instances, graphs."""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Mapping, Union

from . import utility as U
from .errors import InvalidInstance, OutOfDomain, UnboundVariable
from .utility import NEG_INF

Assignment = Mapping[str, int]

RELATIONS: dict[str, Callable[[int, int], bool]] = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


@dataclass(frozen=True)
class Variable:
    id: str
    low: int
    high: int

    def __post_init__(self):
        if self.low > self.high:
            raise InvalidInstance(f"variable {self.id!r}: empty domain [{self.low}, {self.high}]")

    @property
    def domain(self) -> range:
        return range(self.low, self.high + 1)

    @property
    def size(self) -> int:
        return self.high - self.low + 1

    def __contains__(self, value: int) -> bool:
        return self.low <= value <= self.high


@dataclass(frozen=True)
class Table:
    """Enumerated utility relation.

    ``rows`` maps value tuples (in scope order) to finite utilities.  Tuples
    not listed evaluate to 0, or to NEG_INF when ``default_neginf`` is set.
    """

    rows: Mapping[tuple[int, ...], int]
    default_neginf: bool = False

    @property
    def default(self) -> int:
        return NEG_INF if self.default_neginf else 0

    def lookup(self, values: tuple[int, ...]) -> int:
        return self.rows.get(values, self.default)


@dataclass(frozen=True)
class HardRule:
    """Linear relation ``sum(coeffs[i] * scope[i]) <op> bound``.

    Evaluates to ``satisfied`` when the relation holds and NEG_INF otherwise.
    """

    coeffs: tuple[int, ...]
    op: str
    bound: int
    satisfied: int = 0

    def __post_init__(self):
        if self.op not in RELATIONS:
            raise InvalidInstance(f"unknown relational operator {self.op!r}")

    def holds(self, values: tuple[int, ...]) -> bool:
        lhs = sum(c * v for c, v in zip(self.coeffs, values))
        return RELATIONS[self.op](lhs, self.bound)

    def lookup(self, values: tuple[int, ...]) -> int:
        return self.satisfied if self.holds(values) else NEG_INF


Body = Union[Table, HardRule]


@dataclass(frozen=True)
class Constraint:
    id: str
    scope: tuple[str, ...]
    body: Body

    def __post_init__(self):
        if not self.scope:
            raise InvalidInstance(f"constraint {self.id!r} has an empty scope")
        if len(set(self.scope)) != len(self.scope):
            raise InvalidInstance(f"constraint {self.id!r} repeats a variable in its scope")
        if isinstance(self.body, HardRule) and len(self.body.coeffs) != len(self.scope):
            raise InvalidInstance(f"constraint {self.id!r}: coefficient count differs from arity")

    @property
    def arity(self) -> int:
        return len(self.scope)

    @property
    def is_rule(self) -> bool:
        return isinstance(self.body, HardRule)


@dataclass(frozen=True)
class DcopInstance:
    """The tuple (X, D, F, A, alpha).

    ``variables`` and ``constraints`` are keyed by id; ``owner`` maps every
    variable id to an agent in ``agents``.
    """

    variables: Mapping[str, Variable]
    constraints: Mapping[str, Constraint]
    agents: tuple[str, ...]
    owner: Mapping[str, str]
    name: str = "instance"
    _owned: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        agents = set(self.agents)
        if len(agents) != len(self.agents):
            raise InvalidInstance("duplicate agent id")
        for vid, var in self.variables.items():
            if vid != var.id:
                raise InvalidInstance(f"variable key {vid!r} differs from its id {var.id!r}")
            if vid not in self.owner:
                raise InvalidInstance(f"variable {vid!r} has no owner")
            if self.owner[vid] not in agents:
                raise InvalidInstance(f"variable {vid!r} owned by unknown agent {self.owner[vid]!r}")
        for vid in self.owner:
            if vid not in self.variables:
                raise InvalidInstance(f"owner map mentions unknown variable {vid!r}")
        for cid, con in self.constraints.items():
            if cid != con.id:
                raise InvalidInstance(f"constraint key {cid!r} differs from its id {con.id!r}")
            for vid in con.scope:
                if vid not in self.variables:
                    raise InvalidInstance(f"constraint {cid!r} mentions unknown variable {vid!r}")
            if isinstance(con.body, Table):
                doms = [self.variables[v] for v in con.scope]
                for tup, u in con.body.rows.items():
                    if len(tup) != len(doms):
                        raise InvalidInstance(f"constraint {cid!r}: row {tup} has wrong arity")
                    for var, val in zip(doms, tup):
                        if val not in var:
                            raise InvalidInstance(f"constraint {cid!r}: row {tup} outside domain of {var.id!r}")
                    U.check_finite(u)
        owned: dict[str, list[str]] = {a: [] for a in self.agents}
        for vid in sorted(self.variables):
            owned[self.owner[vid]].append(vid)
        object.__setattr__(self, "_owned", {a: tuple(vs) for a, vs in owned.items()})

    def vars_of(self, agent: str) -> tuple[str, ...]:
        """Variables owned by ``agent``, sorted by id."""
        return self._owned[agent]

    @property
    def max_domain(self) -> int:
        return max((v.size for v in self.variables.values()), default=1)

    def search_space(self) -> int:
        n = 1
        for v in self.variables.values():
            n *= v.size
        return n


def _scope_values(c: Constraint, theta: Assignment) -> tuple[int, ...]:
    try:
        return tuple(theta[v] for v in c.scope)
    except KeyError as e:
        raise UnboundVariable(e.args[0]) from None


def evaluate_constraint(c: Constraint, theta: Assignment) -> int:
    return c.body.lookup(_scope_values(c, theta))


def evaluate(instance: DcopInstance, theta: Assignment) -> int:
    """Total utility of a complete assignment (NEG_INF if any constraint is violated)."""
    for vid, var in instance.variables.items():
        if vid not in theta:
            raise UnboundVariable(vid)
        if theta[vid] not in var:
            raise OutOfDomain(vid, theta[vid])
    acc = 0
    for c in instance.constraints.values():
        acc = U.add(acc, evaluate_constraint(c, theta))
    return acc


@dataclass(frozen=True)
class ConstraintGraph:
    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]
    agents: tuple[str, ...]
    agent_edges: frozenset[tuple[str, str]]
    adjacency: Mapping[str, tuple[str, ...]]
    agent_adjacency: Mapping[str, tuple[str, ...]]
    owner: Mapping[str, str]

    def degree(self, agent: str) -> int:
        return len(self.agent_adjacency[agent])


def _pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a < b else (b, a)


def build_constraint_graph(instance: DcopInstance) -> ConstraintGraph:
    edges = set()
    for c in instance.constraints.values():
        for x, y in combinations(c.scope, 2):
            edges.add(_pair(x, y))
    agent_edges = set()
    for x, y in edges:
        ax, ay = instance.owner[x], instance.owner[y]
        if ax != ay:
            agent_edges.add(_pair(ax, ay))

    def adjacency(nodes, pairs):
        adj = {n: set() for n in nodes}
        for a, b in pairs:
            adj[a].add(b)
            adj[b].add(a)
        return {n: tuple(sorted(adj[n])) for n in sorted(adj)}

    nodes = tuple(sorted(instance.variables))
    agents = tuple(sorted(instance.agents))
    return ConstraintGraph(
        nodes=nodes,
        edges=frozenset(edges),
        agents=agents,
        agent_edges=frozenset(agent_edges),
        adjacency=adjacency(nodes, edges),
        agent_adjacency=adjacency(agents, agent_edges),
        owner=dict(instance.owner),
    )
