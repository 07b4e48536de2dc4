"""Per-agent UTIL computation and VALUE lookup.

All three strategies share one depth-first enumeration over the separator
variables (``high_vars``) followed by the agent's own variables
(``low_vars``).  Every utility factor is evaluated at the depth where its
scope becomes fully bound, so a partial sum is available at every node.

* ``dense``  -- no pruning; emits every separator tuple, NEG_INF included.
* ``sparse`` -- no pruning; emits finite rows only.
* ``rules``  -- prunes a branch as soon as a bound factor yields NEG_INF
  (hard rules are checked before tables) and forward-checks the last free
  variable of every factor; emits finite rows only.

The reported ``cost`` counts single-variable bindings tried plus values
examined by forward checking.  It is the deterministic compute cost used by
the simulated clock.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Mapping, NamedTuple, Sequence

from . import utility as U
from .errors import MissingEntry, ScopeMismatch, SolveTimeout
from .model import Constraint, DcopInstance, HardRule
from .pseudotree import PseudoTree, Separators
from .utility import NEG_INF

STRATEGIES = ("dense", "sparse", "rules")

ScopeEntry = tuple[str, int, int]


@dataclass
class UtilTable:
    """Utility relation over an ordered scope of ``(variable, low, high)``.

    A dense table stores every tuple of the cross product (NEG_INF included);
    a sparse table stores finite rows only and reads absent tuples as NEG_INF.
    """

    scope: tuple[ScopeEntry, ...]
    rows: dict[tuple[int, ...], int]
    dense: bool = True

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _, _ in self.scope)

    def get(self, values: tuple[int, ...]) -> int:
        return self.rows.get(values, NEG_INF)

    def finite_rows(self) -> dict[tuple[int, ...], int]:
        return {t: u for t, u in self.rows.items() if u != NEG_INF}

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def capacity(self) -> int:
        """Number of tuples in the scope's cross product."""
        n = 1
        for _, lo, hi in self.scope:
            n *= hi - lo + 1
        return n

    def as_rows(self) -> list[list[int]]:
        """Wire rows ``[u, v1, ..., vk]`` in tuple order."""
        return [[self.rows[t], *t] for t in sorted(self.rows)]


def _cross(scope: Sequence[ScopeEntry]):
    return product(*(range(lo, hi + 1) for _, lo, hi in scope))


def join_tables(tables: Sequence[UtilTable], on: Sequence[ScopeEntry]) -> UtilTable:
    on = tuple(on)
    names = [v for v, _, _ in on]
    index = {v: i for i, v in enumerate(names)}
    picks = []
    for t in tables:
        missing = [v for v in t.variables if v not in index]
        if missing:
            raise ScopeMismatch(f"table variables {missing} are not in the join scope {names}")
        picks.append((t, [index[v] for v in t.variables]))
    dense = all(t.dense for t in tables)
    rows = {}
    for tup in _cross(on):
        acc = 0
        for t, pos in picks:
            acc = U.add(acc, t.get(tuple(tup[p] for p in pos)))
            if acc == NEG_INF:
                break
        if dense or acc != NEG_INF:
            rows[tup] = acc
    return UtilTable(on, rows, dense)


@dataclass
class ArgmaxCache:
    """Maximising own-variable tuple per separator tuple: ``h -> (l, utility)``."""

    high_vars: tuple[str, ...]
    low_vars: tuple[str, ...]
    entries: dict[tuple[int, ...], tuple[tuple[int, ...], int]] = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)


def lookup_value(cache: ArgmaxCache, high_assignment: tuple[int, ...]) -> tuple[int, ...]:
    try:
        return cache.entries[tuple(high_assignment)][0]
    except KeyError:
        raise MissingEntry(tuple(high_assignment)) from None


@dataclass
class AgentContext:
    agent: str
    low_vars: tuple[str, ...]
    high_vars: tuple[str, ...]
    domains: Mapping[str, tuple[int, int]]
    constraints: tuple[Constraint, ...] = ()
    child_tables: list[UtilTable] = field(default_factory=list)

    def scope_of(self, names: Sequence[str]) -> tuple[ScopeEntry, ...]:
        return tuple((v, *self.domains[v]) for v in names)

    def objective(self, low: Sequence[int], high: Sequence[int]) -> int:
        """Local constraints plus child tables evaluated at ``(low, high)``."""
        theta = dict(zip(self.low_vars, low))
        theta.update(zip(self.high_vars, high))
        acc = 0
        for c in self.constraints:
            acc = U.add(acc, c.body.lookup(tuple(theta[v] for v in c.scope)))
        for t in self.child_tables:
            acc = U.add(acc, t.get(tuple(theta[v] for v in t.variables)))
        return acc


class UtilResult(NamedTuple):
    table: UtilTable
    cache: ArgmaxCache
    cost: int


def assign_constraints(instance: DcopInstance, tree: PseudoTree) -> dict[str, list[Constraint]]:
    """Give each constraint to the deepest agent owning a variable of its scope."""
    out: dict[str, list[Constraint]] = {a: [] for a in instance.agents}
    for cid in sorted(instance.constraints):
        c = instance.constraints[cid]
        owners = {instance.owner[v] for v in c.scope}
        out[max(owners, key=lambda a: (tree.depth[a], a))].append(c)
    return out


def build_contexts(instance: DcopInstance, tree: PseudoTree, separators: Separators) -> dict[str, AgentContext]:
    assigned = assign_constraints(instance, tree)
    contexts = {}
    for a in tree.order:
        low = instance.vars_of(a)
        high = separators[a]
        domains = {v: (instance.variables[v].low, instance.variables[v].high) for v in (*low, *high)}
        contexts[a] = AgentContext(a, low, tuple(high), domains, tuple(assigned[a]))
    return contexts


class _Factor(NamedTuple):
    positions: tuple[int, ...]
    lookup: Callable[[tuple[int, ...]], int]
    rule: bool


def _factors(ctx: AgentContext, order: Sequence[str]) -> list[list[_Factor]]:
    index = {v: i for i, v in enumerate(order)}
    levels: list[list[_Factor]] = [[] for _ in order]

    def place(names, lookup, rule, what):
        try:
            pos = tuple(index[v] for v in names)
        except KeyError as e:
            raise ScopeMismatch(f"{what} mentions {e.args[0]!r}, outside the agent's low/high variables") from None
        if not pos:
            raise ScopeMismatch(f"{what} has an empty scope")
        levels[max(pos)].append(_Factor(pos, lookup, rule))

    for c in ctx.constraints:
        place(c.scope, c.body.lookup, isinstance(c.body, HardRule), f"constraint {c.id!r}")
    for i, t in enumerate(ctx.child_tables):
        for v, lo, hi in t.scope:
            if v in ctx.domains and (lo, hi) != ctx.domains[v]:
                raise ScopeMismatch(f"child table {i} declares {v} in [{lo}, {hi}], expected {ctx.domains[v]}")
        place(t.variables, t.get, False, f"child table {i}")
    for fs in levels:
        fs.sort(key=lambda f: not f.rule)
    return levels


def _forward_checks(levels: list[list[_Factor]]) -> tuple[list[tuple[_Factor, int]], list[list[tuple[_Factor, int]]]]:
    """Schedule domain filtering for factors with one variable left unbound.

    A factor over positions ``p1 < ... < pk`` filters the domain of ``pk``
    right after ``p(k-1)`` is bound; unary factors filter before the search.
    """
    unary: list[tuple[_Factor, int]] = []
    at: list[list[tuple[_Factor, int]]] = [[] for _ in levels]
    for fs in levels:
        for f in fs:
            pos = sorted(set(f.positions))
            if len(pos) == 1:
                unary.append((f, pos[0]))
            else:
                at[pos[-2]].append((f, pos[-1]))
    return unary, at


def compute_util(ctx: AgentContext, strategy: str = "sparse", deadline: float | None = None) -> UtilResult:
    """Join local constraints with child tables and max-project the own variables.

    Returns the UTIL table over ``high_vars``, the argmax cache and the
    enumeration cost.  Ties between maximising own tuples go to the
    lexicographically smallest one.  ``deadline`` is a ``time.monotonic``
    instant after which SolveTimeout is raised.

    Under ``rules`` a branch is cut as soon as a bound factor is NEG_INF, and
    a factor with a single unbound variable removes that variable's values
    that would make it NEG_INF (forward checking).  Each value tried and each
    value checked during filtering adds one to the cost.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if set(ctx.low_vars) & set(ctx.high_vars):
        raise ScopeMismatch(f"agent {ctx.agent}: low and high variables overlap")
    order = (*ctx.high_vars, *ctx.low_vars)
    levels = _factors(ctx, order)
    doms = [list(range(ctx.domains[v][0], ctx.domains[v][1] + 1)) for v in order]
    n, n_high = len(order), len(ctx.high_vars)
    prune = strategy == "rules"
    values = [0] * n
    best: dict[tuple[int, ...], tuple[tuple[int, ...], int]] = {}
    cost = 0

    def supported(f: _Factor, u: int) -> list[int]:
        nonlocal cost
        keep = []
        for x in doms[u]:
            values[u] = x
            if f.lookup(tuple(values[p] for p in f.positions)) != NEG_INF:
                keep.append(x)
        cost += len(doms[u])
        return keep

    if prune:
        unary, checks = _forward_checks(levels)
        for f, u in unary:
            doms[u] = supported(f, u)
    else:
        checks = [[] for _ in order]

    def descend(level: int, acc: int) -> None:
        nonlocal cost
        if level == n:
            h = tuple(values[:n_high])
            cur = best.get(h)
            if cur is None or acc > cur[1]:
                best[h] = (tuple(values[n_high:]), acc)
            return
        fs = levels[level]
        fc = checks[level]
        for v in doms[level]:
            cost += 1
            if deadline is not None and cost & 0xFFF == 0 and time.monotonic() > deadline:
                raise SolveTimeout(f"agent {ctx.agent}: deadline passed during UTIL computation")
            values[level] = v
            s = acc
            for f in fs:
                if s == NEG_INF:
                    break
                s = U.add(s, f.lookup(tuple(values[p] for p in f.positions)))
            if prune and s == NEG_INF:
                continue
            saved = []
            wiped = False
            for f, u in fc:
                keep = supported(f, u)
                saved.append((u, doms[u]))
                doms[u] = keep
                if not keep:
                    wiped = True
                    break
            if not wiped:
                descend(level + 1, s)
            for u, old in reversed(saved):
                doms[u] = old

    if all(doms):
        descend(0, 0)

    scope = ctx.scope_of(ctx.high_vars)
    cache = ArgmaxCache(ctx.high_vars, ctx.low_vars)
    if strategy == "dense":
        rows = {h: u for h, (_, u) in sorted(best.items())}
        cache.entries = dict(sorted(best.items()))
    else:
        finite = {h: e for h, e in sorted(best.items()) if e[1] != NEG_INF}
        rows = {h: u for h, (_, u) in finite.items()}
        cache.entries = finite
    return UtilResult(UtilTable(scope, rows, dense=strategy == "dense"), cache, cost)
