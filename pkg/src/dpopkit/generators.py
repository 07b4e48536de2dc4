"""Benchmark generators: Erdos-Renyi G(n, M) random DCOPs and microgrid DCOPs.

Both generators draw from numpy's PCG64 bit generator seeded directly with
the 64-bit seed, so identical parameters give identical instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb, floor

import numpy as np

from .errors import InvalidParams
from .model import Constraint, DcopInstance, HardRule, Table, Variable
from .topologies import topology_edges

RNG_ALGORITHM = f"numpy.PCG64 (numpy {np.__version__})"
UTILITY_RANGE = (0, 1000)


def _rng(seed: int) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise InvalidParams(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def _ratio(p) -> Fraction:
    return Fraction(str(p)) if isinstance(p, float) else Fraction(p)


def round_half_up(x: Fraction) -> int:
    return floor(x + Fraction(1, 2))


@dataclass(frozen=True)
class RandomGraphParams:
    num_agents: int
    num_variables: int
    domain_size: int
    density: float
    tightness: float
    seed: int = 0

    @property
    def block(self) -> int:
        return -(-self.num_variables // self.num_agents)

    @property
    def num_edges(self) -> int:
        return round_half_up(_ratio(self.density) * comb(self.num_variables, 2))

    @property
    def infeasible_per_table(self) -> int:
        return round_half_up(_ratio(self.tightness) * self.domain_size**2)

    def validate(self) -> None:
        if self.num_agents < 1 or self.num_variables < 1:
            raise InvalidParams("need at least one agent and one variable")
        if self.num_agents > self.num_variables:
            raise InvalidParams("num_agents must not exceed num_variables")
        if self.domain_size < 1:
            raise InvalidParams("domain_size must be positive")
        if not 0 < _ratio(self.density) <= 1:
            raise InvalidParams("density must lie in (0, 1]")
        if not 0 <= _ratio(self.tightness) <= 1:
            raise InvalidParams("tightness must lie in [0, 1]")
        if self.block * (self.num_agents - 1) >= self.num_variables:
            raise InvalidParams(
                f"blocks of {self.block} variables leave an agent empty "
                f"({self.num_variables} variables, {self.num_agents} agents)")

    def describe(self) -> str:
        return (f"agents={self.num_agents} vars={self.num_variables} dom={self.domain_size} "
                f"p1={self.density} p2={self.tightness} seed={self.seed}")


def _ids(prefix: str, n: int) -> list[str]:
    width = len(str(max(n - 1, 0)))
    return [f"{prefix}{i:0{width}d}" for i in range(n)]


def generate_random(params: RandomGraphParams) -> DcopInstance:
    params.validate()
    rng = _rng(params.seed)
    n, d = params.num_variables, params.domain_size
    var_ids = _ids("x", n)
    agent_ids = _ids("a", params.num_agents)

    pairs = list(combinations(range(n), 2))
    picked = sorted(rng.choice(len(pairs), size=params.num_edges, replace=False).tolist())
    k = params.infeasible_per_table
    lo, hi = UTILITY_RANGE

    constraints = {}
    for idx in picked:
        i, j = pairs[idx]
        infeasible = set(rng.choice(d * d, size=k, replace=False).tolist())
        utils = rng.integers(lo, hi + 1, size=d * d).tolist()
        rows = {(t // d, t % d): utils[t] for t in range(d * d) if t not in infeasible}
        cid = f"c_{var_ids[i]}_{var_ids[j]}"
        constraints[cid] = Constraint(cid, (var_ids[i], var_ids[j]), Table(rows, default_neginf=True))

    owner = {v: agent_ids[i // params.block] for i, v in enumerate(var_ids)}
    return DcopInstance(
        variables={v: Variable(v, 0, d - 1) for v in var_ids},
        constraints=constraints,
        agents=tuple(agent_ids),
        owner=owner,
        name=f"random-n{n}-a{params.num_agents}-d{d}-p{params.density}-q{params.tightness}-s{params.seed}",
    )


@dataclass(frozen=True)
class GridParams:
    """Microgrid parameters.

    ``domain_size`` is the odd cardinality 2k+1 of the flow range [-k, k];
    ``line_capacity`` (default k) bounds each flow variable's domain.
    """

    topology: str
    domain_size: int = 5
    line_capacity: int | None = None
    seed: int = 0
    nodes: int | None = None

    @property
    def half_range(self) -> int:
        return (self.domain_size - 1) // 2

    @property
    def capacity(self) -> int:
        return self.half_range if self.line_capacity is None else self.line_capacity

    def validate(self) -> None:
        if self.domain_size < 1 or self.domain_size % 2 == 0:
            raise InvalidParams("domain_size must be a positive odd number")
        if not 0 <= self.capacity <= self.half_range:
            raise InvalidParams("line_capacity must lie in [0, max domain value]")


def generate_grid(params: GridParams) -> DcopInstance:
    """One agent per bus.

    Each bus ``i`` owns ``n<i>_gen`` in [0, k], ``n<i>_con`` in [0, k] and one
    outgoing flow ``n<i>_f<j>`` in [-cap, cap] per incident line.  Lines carry
    a no-loss rule, buses a balance rule, and two unary tables price
    generation (cost) and consumption (benefit) up to per-bus limits.
    """
    params.validate()
    edges = topology_edges(params.topology, params.nodes)
    rng = _rng(params.seed)
    k, cap = params.half_range, params.capacity

    nbrs: dict[int, list[int]] = {}
    for a, b in edges:
        nbrs.setdefault(a, []).append(b)
        nbrs.setdefault(b, []).append(a)
    buses = sorted(nbrs)

    def agent(i):
        return f"n{i}"

    def flow(i, j):
        return f"n{i}_f{j}"

    variables: dict[str, Variable] = {}
    owner: dict[str, str] = {}
    constraints: dict[str, Constraint] = {}

    def add_var(vid, bus, low, high):
        variables[vid] = Variable(vid, low, high)
        owner[vid] = agent(bus)

    def add_con(cid, scope, body):
        constraints[cid] = Constraint(cid, tuple(scope), body)

    for i in buses:
        add_var(f"n{i}_gen", i, 0, k)
        add_var(f"n{i}_con", i, 0, k)
        for j in sorted(nbrs[i]):
            add_var(flow(i, j), i, -cap, cap)

    for a, b in sorted((min(e), max(e)) for e in edges):
        add_con(f"line_{a}_{b}", [flow(a, b), flow(b, a)], HardRule((1, 1), "=", 0))

    for i in buses:
        outs = [flow(i, j) for j in sorted(nbrs[i])]
        add_con(f"bal_{i}", [f"n{i}_gen", f"n{i}_con", *outs],
                HardRule((1, -1, *([-1] * len(outs))), "=", 0))
        cost, benefit = rng.integers(1, 11, size=2).tolist()
        gen_cap, con_cap = rng.integers(0, k + 1, size=2).tolist()
        add_con(f"cost_{i}", [f"n{i}_gen"],
                Table({(g,): -cost * g for g in range(gen_cap + 1)}, default_neginf=True))
        add_con(f"load_{i}", [f"n{i}_con"],
                Table({(c,): benefit * c for c in range(con_cap + 1)}, default_neginf=True))

    name = params.topology if params.nodes is None else f"{params.topology}{params.nodes}"
    return DcopInstance(
        variables=dict(sorted(variables.items())),
        constraints=dict(sorted(constraints.items())),
        agents=tuple(sorted(agent(i) for i in buses)),
        owner=owner,
        name=f"grid-{name}-d{params.domain_size}-s{params.seed}",
    )
