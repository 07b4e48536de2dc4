"""Centralised exhaustive reference solver.

``brute_force`` enumerates every total assignment in lexicographic order of
(sorted variable id, value) and keeps the first maximiser.  The default path
does this literally, vectorised over chunks of the assignment space.  With
``skip_infeasible=True`` it walks the same lexicographic order depth-first and
skips a subtree only once a fully bound constraint is NEG_INF; since NEG_INF
absorbs the whole sum, the result is identical.  No utility bounds are used.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np

from . import utility as U
from .errors import InstanceTooLarge
from .model import DcopInstance, HardRule
from .utility import NEG_INF

DEFAULT_CAP = 10**7
CHUNK = 1 << 16

_NP_RELATIONS = {
    "=": np.equal, "!=": np.not_equal, "<": np.less,
    "<=": np.less_equal, ">": np.greater, ">=": np.greater_equal,
}


class OracleResult(NamedTuple):
    utility: int
    assignment: Optional[dict[str, int]]


def _check_cap(instance: DcopInstance, cap: Optional[int]) -> None:
    if cap is not None and instance.search_space() > cap:
        raise InstanceTooLarge(f"{instance.search_space()} assignments exceed the cap of {cap}")


def _dense_tables(instance: DcopInstance, names: list[str]):
    """Per table constraint: (positions, utility array, feasibility array)."""
    index = {v: i for i, v in enumerate(names)}
    out = []
    for c in instance.constraints.values():
        pos = [index[v] for v in c.scope]
        if isinstance(c.body, HardRule):
            out.append((pos, c.body, None))
            continue
        vs = [instance.variables[v] for v in c.scope]
        shape = tuple(v.size for v in vs)
        util = np.zeros(shape, dtype=object)
        ok = np.full(shape, not c.body.default_neginf, dtype=bool)
        for tup, u in c.body.rows.items():
            key = tuple(x - v.low for x, v in zip(tup, vs))
            util[key] = u
            ok[key] = True
        out.append((pos, util, ok))
    return out


def _enumerate(instance: DcopInstance, cap: Optional[int]):
    """Yield (names, digits, totals, feasible) for each chunk of assignments."""
    _check_cap(instance, cap)
    names = sorted(instance.variables)
    lows = np.array([instance.variables[v].low for v in names], dtype=np.int64)
    sizes = [instance.variables[v].size for v in names]
    space = instance.search_space()
    factors = _dense_tables(instance, names)
    bound = sum(int(np.abs(f[1]).max()) if f[2] is not None and f[1].size else abs(f[1].satisfied)
                for f in factors)
    dtype = np.int64 if bound < 2**62 else object
    prepared = []
    for pos, util, ok in factors:
        if ok is None:
            prepared.append((pos, util, None))
        else:
            prepared.append((pos, util.astype(dtype), ok))

    for start in range(0, space, CHUNK):
        idx = np.arange(start, min(space, start + CHUNK), dtype=np.int64)
        offsets = np.empty((idx.size, len(names)), dtype=np.int64)
        rem = idx.copy()
        for k in range(len(names) - 1, -1, -1):
            rem, offsets[:, k] = np.divmod(rem, sizes[k])
        digits = offsets + lows
        totals = np.zeros(idx.size, dtype=dtype)
        feasible = np.ones(idx.size, dtype=bool)
        for pos, util, ok in prepared:
            if ok is None:
                rule: HardRule = util
                lhs = np.zeros(idx.size, dtype=np.int64)
                for c, p in zip(rule.coeffs, pos):
                    lhs += c * digits[:, p]
                feasible &= _NP_RELATIONS[rule.op](lhs, rule.bound)
                totals += rule.satisfied
            else:
                key = tuple(offsets[:, p] for p in pos)
                feasible &= ok[key]
                totals += util[key]
        yield names, digits, totals, feasible


def brute_force(instance: DcopInstance, cap: Optional[int] = DEFAULT_CAP,
                skip_infeasible: bool = False) -> OracleResult:
    """Maximum utility and the lexicographically smallest maximiser.

    Returns ``(NEG_INF, None)`` when every assignment is infeasible.
    """
    if skip_infeasible:
        return _backtrack(instance, cap)
    best_u, best = NEG_INF, None
    for names, digits, totals, feasible in _enumerate(instance, cap):
        if not feasible.any():
            continue
        hits = np.flatnonzero(feasible)
        sub = totals[hits]
        if sub.dtype == object:
            j = max(range(len(sub)), key=lambda k: (sub[k], -k))
        else:
            j = int(np.argmax(sub))
        i = hits[j]
        u = int(totals[i])
        if best is None or u > best_u:
            best_u = U.check_finite(u)
            best = {v: int(x) for v, x in zip(names, digits[i])}
    return OracleResult(best_u, best)


def count_feasible(instance: DcopInstance, cap: Optional[int] = DEFAULT_CAP,
                   skip_infeasible: bool = False) -> int:
    if skip_infeasible:
        return _backtrack(instance, cap, count_only=True)
    return sum(int(f.sum()) for _, _, _, f in _enumerate(instance, cap))


def _backtrack(instance: DcopInstance, cap: Optional[int], count_only: bool = False):
    _check_cap(instance, cap)
    names = sorted(instance.variables)
    index = {v: i for i, v in enumerate(names)}
    at_level: list[list] = [[] for _ in names]
    for c in instance.constraints.values():
        pos = tuple(index[v] for v in c.scope)
        at_level[max(pos)].append((pos, c.body.lookup))
    domains = [instance.variables[v].domain for v in names]
    values = [0] * len(names)
    best = [NEG_INF, None]
    count = 0

    def rec(level: int, acc: int) -> None:
        nonlocal count
        if level == len(names):
            count += 1
            if best[1] is None or acc > best[0]:
                best[0], best[1] = acc, dict(zip(names, values))
            return
        for x in domains[level]:
            values[level] = x
            s = acc
            for pos, lookup in at_level[level]:
                s = U.add(s, lookup(tuple(values[p] for p in pos)))
                if s == NEG_INF:
                    break
            if s != NEG_INF:
                rec(level + 1, s)

    rec(0, 0)
    if count_only:
        return count
    return OracleResult(best[0], best[1])

