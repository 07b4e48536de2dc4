"""Parameter sweeps and CSV statistics.

Each run produces one :class:`BenchRow`; rows are aggregated per
configuration (every parameter except the repetition seed) into the
solved-percentage / mean-runtime summary.  Infeasible counts as solved since
it is a proven answer; Timeout rows are excluded from the means.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from itertools import product
from statistics import mean
from typing import Iterable, Optional, Sequence

from . import utility as U
from .generators import GridParams, RandomGraphParams, generate_grid, generate_random
from .runtime import Status, solve

SCHEMA_VERSION = 1
SOLVED_THRESHOLD = 0.85


@dataclass(frozen=True)
class RunSpec:
    kind: str
    strategy: str
    seed: int
    agents: int = 0
    vars: int = 0
    dom: int = 0
    p1: float = 0.0
    p2: float = 0.0
    topology: str = ""
    timeout: Optional[float] = 600.0

    @property
    def config(self) -> tuple:
        return (self.kind, self.agents, self.vars, self.dom, self.p1, self.p2, self.topology, self.strategy)

    def instance(self):
        if self.kind == "random":
            return generate_random(RandomGraphParams(self.agents, self.vars, self.dom, self.p1, self.p2, self.seed))
        name, _, nodes = self.topology.partition(":")
        return generate_grid(GridParams(name, self.dom, seed=self.seed, nodes=int(nodes) if nodes else None))


@dataclass
class BenchRow:
    schema: int
    instance: str
    kind: str
    agents: int
    vars: int
    dom: int
    p1: float
    p2: float
    topology: str
    seed: int
    strategy: str
    status: str
    utility: str
    simulated_runtime_ns: int
    util_messages: int
    value_messages: int
    total_rows_sent: int
    max_table_rows: int
    induced_width: int
    enumerated: int
    wall_time_ns: int


COLUMNS = [f.name for f in fields(BenchRow)]


def run_one(spec: RunSpec) -> BenchRow:
    inst = spec.instance()
    rep = solve(inst, spec.strategy, timeout=spec.timeout)
    m = rep.metrics
    return BenchRow(
        schema=SCHEMA_VERSION, instance=inst.name, kind=spec.kind, agents=len(inst.agents),
        vars=len(inst.variables), dom=spec.dom, p1=spec.p1, p2=spec.p2, topology=spec.topology,
        seed=spec.seed, strategy=spec.strategy, status=rep.status.value, utility=U.fmt(rep.utility),
        simulated_runtime_ns=m.simulated_runtime_ns, util_messages=m.util_messages,
        value_messages=m.value_messages, total_rows_sent=m.total_rows_sent,
        max_table_rows=m.max_table_rows, induced_width=m.induced_width, enumerated=m.enumerated,
        wall_time_ns=m.wall_time_ns,
    )


def random_sweep(agents: Sequence[int], vars: Sequence[int], dom: Sequence[int], p1: Sequence[float],
                 p2: Sequence[float], strategies: Sequence[str], reps: int, base_seed: int = 0,
                 timeout: Optional[float] = 600.0) -> list[RunSpec]:
    specs = []
    for a, n, d, q1, q2, s in product(agents, vars, dom, p1, p2, strategies):
        for r in range(reps):
            specs.append(RunSpec("random", s, base_seed + r, a, n, d, q1, q2, timeout=timeout))
    return specs


def grid_sweep(topologies: Sequence[str], dom: Sequence[int], strategies: Sequence[str], reps: int,
               base_seed: int = 0, timeout: Optional[float] = 600.0) -> list[RunSpec]:
    return [RunSpec("grid", s, base_seed + r, dom=d, topology=t, timeout=timeout)
            for t, d, s in product(topologies, dom, strategies) for r in range(reps)]


def run_sweep(specs: Iterable[RunSpec], jobs: int = 1) -> list[BenchRow]:
    specs = list(specs)
    if jobs <= 1:
        return [run_one(s) for s in specs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_one, specs))


@dataclass
class SummaryRow:
    kind: str
    agents: int
    vars: int
    dom: int
    p1: float
    p2: float
    topology: str
    strategy: str
    runs: int
    solved: int
    solved_pct: float
    mean_runtime_ns: Optional[float]
    mean_max_table_rows: Optional[float]
    failed: bool


def summarize(rows: Sequence[BenchRow]) -> list[SummaryRow]:
    groups: dict[tuple, list[BenchRow]] = {}
    for r in rows:
        groups.setdefault((r.kind, r.agents, r.vars, r.dom, r.p1, r.p2, r.topology, r.strategy), []).append(r)
    out = []
    for key, rs in groups.items():
        solved = [r for r in rs if r.status != Status.TIMEOUT.value]
        frac = len(solved) / len(rs)
        out.append(SummaryRow(
            *key, runs=len(rs), solved=len(solved), solved_pct=round(100 * frac, 2),
            mean_runtime_ns=mean(r.simulated_runtime_ns for r in solved) if solved else None,
            mean_max_table_rows=mean(r.max_table_rows for r in solved) if solved else None,
            failed=frac < SOLVED_THRESHOLD,
        ))
    return out


def write_rows(rows: Sequence, out) -> None:
    if not rows:
        return
    w = csv.DictWriter(out, fieldnames=[f.name for f in fields(rows[0])], lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if v is None else v) for k, v in asdict(r).items()})


def format_summary(summary: Sequence[SummaryRow]) -> str:
    buf = io.StringIO()
    buf.write("# solved includes Infeasible; Timeout runs are excluded from the means; "
              f"failed = solved below {int(SOLVED_THRESHOLD * 100)}%\n")
    write_rows(summary, buf)
    return buf.getvalue()
