"""DPOP agents, in-process transport and the solve driver.

Each agent's lifecycle is a generator that yields whenever it needs the next
incoming message.  Two schedulers drive the generators:

* ``deterministic`` -- single thread; messages are delivered from one global
  FIFO queue, agents are started leaves-first.
* ``threads`` -- one thread per agent, blocking on a per-agent queue.

Both produce identical reports (wall time aside) because every agent's
output depends only on the messages it receives, not on their interleaving.
"""

from __future__ import annotations

import queue
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Generator, Optional, Protocol

from . import utility as U
from .errors import MissingEntry, NotADfsTraversal, ProtocolViolation, SolveTimeout
from .local_solver import STRATEGIES, AgentContext, ArgmaxCache, UtilTable, build_contexts, compute_util, lookup_value
from .model import DcopInstance, build_constraint_graph
from .pseudotree import (PseudoTree, Separators, build_pseudotree, compute_separators, induced_width,
                         validate_pseudotree)
from .utility import NEG_INF


class Kind(str, Enum):
    UTIL = "UTIL"
    VALUE = "VALUE"
    ABORT = "ABORT"


@dataclass(frozen=True)
class DpopMessage:
    """One protocol message.

    UTIL carries ``scope`` (``(var, low, high)`` triples) and ``rows``
    (``(u, v1, ..., vk)``); VALUE carries ``bindings`` (``(var, value)``).
    ABORT tells a subtree that its root found no feasible assignment.
    """

    kind: Kind
    sender: str
    to: str
    send_clock: int
    scope: tuple = ()
    rows: tuple = ()
    dense: bool = True
    bindings: tuple = ()

    def table(self) -> UtilTable:
        return UtilTable(tuple(self.scope), {tuple(r[1:]): r[0] for r in self.rows}, self.dense)

    def trace_line(self) -> str:
        head = f"{self.kind.value} from={self.sender} to={self.to} clk={self.send_clock}"
        if self.kind is Kind.UTIL:
            scope = ",".join(f"{v}:{lo}..{hi}" for v, lo, hi in self.scope)
            return f"{head} scope=[{scope}] rows={len(self.rows)}"
        if self.kind is Kind.VALUE:
            return f"{head} bind=[{','.join(f'{v}={x}' for v, x in self.bindings)}]"
        return head


def util_message(sender: str, to: str, clock: int, table: UtilTable) -> DpopMessage:
    rows = tuple((table.rows[t], *t) for t in sorted(table.rows))
    return DpopMessage(Kind.UTIL, sender, to, clock, scope=tuple(table.scope), rows=rows, dense=table.dense)


class Transport(Protocol):
    """Reliable, per-channel FIFO, unbounded message delivery."""

    def send(self, msg: DpopMessage) -> None: ...

    def receive(self, agent: str, timeout: Optional[float] = None) -> DpopMessage: ...


class InProcessTransport:
    """One thread-safe inbox per agent."""

    def __init__(self, agents):
        self.inboxes = {a: queue.Queue() for a in agents}

    def send(self, msg: DpopMessage) -> None:
        self.inboxes[msg.to].put(msg)

    def receive(self, agent: str, timeout: Optional[float] = None) -> DpopMessage:
        return self.inboxes[agent].get(timeout=timeout)


class Phase(Enum):
    WAITING_UTILS = 1
    COMPUTING_UTIL = 2
    WAITING_VALUE = 3
    DONE = 4


@dataclass
class AgentState:
    agent: str
    context: AgentContext
    pending_children: set[str]
    phase: Phase = Phase.WAITING_UTILS
    clock: int = 0
    cache: Optional[ArgmaxCache] = None
    table: Optional[UtilTable] = None
    enumerated: int = 0
    known: dict[str, int] = field(default_factory=dict)
    assignment: dict[str, int] = field(default_factory=dict)
    clock_trace: list[int] = field(default_factory=list)
    infeasible: bool = False

    def enter(self, phase: Phase) -> None:
        if phase.value < self.phase.value:
            raise ProtocolViolation(f"agent {self.agent}: phase {self.phase.name} cannot go back to {phase.name}")
        self.phase = phase


def advance_clock(state: AgentState, compute_cost: int) -> int:
    state.clock += compute_cost
    state.clock_trace.append(state.clock)
    return state.clock


def merge_clock(state: AgentState, msg: DpopMessage, latency: int = 0) -> int:
    state.clock = max(state.clock, msg.send_clock + latency)
    state.clock_trace.append(state.clock)
    return state.clock


@dataclass
class RunOptions:
    strategy: str = "sparse"
    deterministic_cost: bool = True
    latency: int = 0
    deadline: Optional[float] = None


class DpopAgent:
    def __init__(self, state: AgentState, tree: PseudoTree, separators: Separators, options: RunOptions,
                 send):
        self.state = state
        self.tree = tree
        self.separators = separators
        self.options = options
        self._send = send

    @property
    def id(self) -> str:
        return self.state.agent

    def send(self, msg: DpopMessage) -> None:
        self._send(msg)

    def _timed(self, fn):
        t0 = time.perf_counter_ns()
        out = fn()
        return out, time.perf_counter_ns() - t0

    def _receive(self, msg: DpopMessage) -> None:
        if msg.to != self.id:
            raise ProtocolViolation(f"agent {self.id} received a message addressed to {msg.to}")
        merge_clock(self.state, msg, self.options.latency)

    def lifecycle(self) -> Generator[None, DpopMessage, None]:
        st, tree, me = self.state, self.tree, self.id
        tables: dict[str, UtilTable] = {}
        while st.pending_children:
            msg = yield
            self._receive(msg)
            if msg.kind is not Kind.UTIL or msg.sender not in st.pending_children:
                raise ProtocolViolation(
                    f"agent {me} expected UTIL from {sorted(st.pending_children)}, got {msg.kind.value} from {msg.sender}")
            ancestors = set(tree.ancestors(msg.sender))
            sep = set(self.separators[msg.sender])
            for v, _, _ in msg.scope:
                if v not in sep:
                    raise ProtocolViolation(f"UTIL from {msg.sender} mentions {v}, outside its separator")
            if not ancestors:
                raise ProtocolViolation(f"UTIL from root agent {msg.sender}")
            st.pending_children.discard(msg.sender)
            tables[msg.sender] = msg.table()

        st.enter(Phase.COMPUTING_UTIL)
        st.context.child_tables = [tables[c] for c in tree.children[me]]
        result, wall = self._timed(lambda: compute_util(st.context, self.options.strategy, self.options.deadline))
        st.table, st.cache, st.enumerated = result.table, result.cache, result.cost
        advance_clock(st, result.cost if self.options.deterministic_cost else wall)

        if not tree.is_root(me):
            parent = tree.parent[me]
            self.send(util_message(me, parent, st.clock, result.table))
            st.enter(Phase.WAITING_VALUE)
            msg = yield
            self._receive(msg)
            if msg.sender != parent or msg.kind is Kind.UTIL:
                raise ProtocolViolation(f"agent {me} expected VALUE from {parent}, got {msg.kind.value} from {msg.sender}")
            if msg.kind is Kind.ABORT:
                st.infeasible = True
                for c in tree.children[me]:
                    self.send(DpopMessage(Kind.ABORT, me, c, st.clock))
                st.enter(Phase.DONE)
                return
            bound = dict(msg.bindings)
            if set(bound) != set(self.separators[me]):
                raise ProtocolViolation(f"VALUE to {me} binds {sorted(bound)}, separator is {list(self.separators[me])}")
            st.known.update(bound)
        elif result.table.get(()) == NEG_INF:
            st.infeasible = True
            for c in tree.children[me]:
                self.send(DpopMessage(Kind.ABORT, me, c, st.clock))
            st.enter(Phase.DONE)
            return

        h = tuple(st.known[v] for v in st.context.high_vars)
        low, wall = self._timed(lambda: lookup_value(st.cache, h))
        advance_clock(st, 0 if self.options.deterministic_cost else wall)
        st.assignment = dict(zip(st.context.low_vars, low))
        st.known.update(st.assignment)
        for c in tree.children[me]:
            bindings = tuple((v, st.known[v]) for v in self.separators[c])
            self.send(DpopMessage(Kind.VALUE, me, c, st.clock, bindings=bindings))
        st.enter(Phase.DONE)


def run_agent(agent: DpopAgent, transport: Transport, stop: Optional[threading.Event] = None,
              poll: float = 0.05) -> None:
    """Drive one agent to completion with blocking receives."""
    proc = agent.lifecycle()
    try:
        next(proc)
        while True:
            while True:
                if stop is not None and stop.is_set():
                    return
                if agent.options.deadline is not None and time.monotonic() > agent.options.deadline:
                    raise SolveTimeout(f"agent {agent.id}: deadline passed while waiting")
                try:
                    msg = transport.receive(agent.id, timeout=poll)
                    break
                except queue.Empty:
                    continue
            proc.send(msg)
    except StopIteration:
        return


@dataclass
class Metrics:
    util_messages: int = 0
    value_messages: int = 0
    abort_messages: int = 0
    total_rows_sent: int = 0
    max_table_rows: int = 0
    induced_width: int = 0
    simulated_runtime_ns: int = 0
    enumerated: int = 0
    wall_time_ns: int = 0


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    TIMEOUT = "Timeout"


EXIT_CODES = {Status.OPTIMAL: 0, Status.INFEASIBLE: 2, Status.TIMEOUT: 3}


@dataclass
class SolveReport:
    status: Status
    utility: int
    assignment: Optional[dict[str, int]]
    metrics: Metrics
    tree: PseudoTree
    separators: Separators
    tables: dict[str, UtilTable] = field(default_factory=dict)
    agent_costs: dict[str, int] = field(default_factory=dict)
    clock_traces: dict[str, list[int]] = field(default_factory=dict)
    trace: list[str] = field(default_factory=list)
    strategy: str = "sparse"

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def to_text(self, include_wall: bool = True) -> str:
        m = self.metrics
        lines = [f"status={self.status.value} utility={U.fmt(self.utility)} strategy={self.strategy}"]
        if self.assignment is not None:
            lines.append("assignment " + " ".join(f"{v}={x}" for v, x in sorted(self.assignment.items())))
        lines.append(
            f"util_messages={m.util_messages} value_messages={m.value_messages} "
            f"abort_messages={m.abort_messages} total_rows_sent={m.total_rows_sent} "
            f"max_table_rows={m.max_table_rows} induced_width={m.induced_width}")
        lines.append(f"simulated_runtime_ns={m.simulated_runtime_ns} enumerated={m.enumerated}")
        if include_wall:
            lines.append(f"wall_time_ns={m.wall_time_ns}")
        return "\n".join(lines) + "\n"


def _deterministic(agents: dict[str, DpopAgent], tree: PseudoTree, deadline: Optional[float],
                   on_send) -> None:
    inbox: deque[DpopMessage] = deque()
    on_send.append(inbox.append)
    procs = {}
    for a in reversed(tree.order):
        proc = agents[a].lifecycle()
        try:
            next(proc)
            procs[a] = proc
        except StopIteration:
            pass
    while inbox:
        if deadline is not None and time.monotonic() > deadline:
            raise SolveTimeout("deadline passed between deliveries")
        msg = inbox.popleft()
        proc = procs.get(msg.to)
        if proc is None:
            raise ProtocolViolation(f"message for finished agent {msg.to}: {msg.trace_line()}")
        try:
            proc.send(msg)
        except StopIteration:
            del procs[msg.to]
    if procs:
        raise ProtocolViolation(f"agents still waiting after all messages were delivered: {sorted(procs)}")


def _threaded(agents: dict[str, DpopAgent], transport: InProcessTransport) -> None:
    stop = threading.Event()
    errors: list[BaseException] = []

    def body(agent):
        try:
            run_agent(agent, transport, stop)
        except BaseException as e:
            errors.append(e)
            stop.set()

    threads = [threading.Thread(target=body, args=(ag,), name=f"agent-{a}", daemon=True)
               for a, ag in agents.items()]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        timeouts = [e for e in errors if isinstance(e, SolveTimeout)]
        raise timeouts[0] if timeouts else errors[0]


def solve(instance: DcopInstance, strategy: str = "sparse", timeout: Optional[float] = None,
          pinned_tree: Optional[PseudoTree] = None, scheduler: str = "deterministic",
          deterministic_cost: bool = True, latency: int = 0) -> SolveReport:
    """Run DPOP on every component of ``instance`` and assemble the report.

    ``deterministic_cost`` charges each UTIL computation its enumeration
    count on the simulated clock; otherwise measured wall nanoseconds.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if scheduler not in ("deterministic", "threads"):
        raise ValueError(f"unknown scheduler {scheduler!r}")
    t0 = time.perf_counter_ns()
    deadline = None if timeout is None else time.monotonic() + timeout
    graph = build_constraint_graph(instance)
    if pinned_tree is None:
        tree = build_pseudotree(graph)
    else:
        problems = validate_pseudotree(pinned_tree, graph)
        if problems:
            raise NotADfsTraversal("; ".join(problems))
        tree = pinned_tree
    seps = compute_separators(tree, graph, instance)
    contexts = build_contexts(instance, tree, seps)
    options = RunOptions(strategy, deterministic_cost, latency, deadline)

    metrics = Metrics(induced_width=induced_width(tree, seps))
    trace: list[str] = []
    lock = threading.Lock()
    sinks: list = []
    transport = InProcessTransport(tree.order)

    def send(msg: DpopMessage) -> None:
        with lock:
            if msg.kind is Kind.UTIL:
                metrics.util_messages += 1
                metrics.total_rows_sent += len(msg.rows)
            elif msg.kind is Kind.VALUE:
                metrics.value_messages += 1
            else:
                metrics.abort_messages += 1
            trace.append(msg.trace_line())
        if sinks:
            sinks[0](msg)
        else:
            transport.send(msg)

    agents = {}
    for a in tree.order:
        state = AgentState(a, contexts[a], set(tree.children[a]))
        agents[a] = DpopAgent(state, tree, seps, options, send)

    status = Status.OPTIMAL
    try:
        if scheduler == "deterministic":
            _deterministic(agents, tree, deadline, sinks)
        else:
            _threaded(agents, transport)
    except SolveTimeout:
        status = Status.TIMEOUT
    except MissingEntry:
        status = Status.INFEASIBLE

    states = {a: ag.state for a, ag in agents.items()}
    tables = {a: s.table for a, s in states.items() if s.table is not None}
    metrics.max_table_rows = max((len(t) for t in tables.values()), default=0)
    metrics.simulated_runtime_ns = max((s.clock for s in states.values()), default=0)
    metrics.enumerated = sum(s.enumerated for s in states.values())

    utility, assignment = NEG_INF, None
    if status is Status.OPTIMAL:
        if any(s.infeasible for s in states.values()):
            status = Status.INFEASIBLE
        else:
            utility = 0
            for r in tree.roots:
                utility = U.add(utility, states[r].table.get(()))
            assignment = {}
            for s in states.values():
                assignment.update(s.assignment)
            if set(assignment) != set(instance.variables):
                raise ProtocolViolation("VALUE phase left variables unassigned")
    metrics.wall_time_ns = time.perf_counter_ns() - t0
    return SolveReport(
        status=status, utility=utility, assignment=assignment, metrics=metrics, tree=tree,
        separators=seps, tables=tables, agent_costs={a: s.enumerated for a, s in states.items()},
        clock_traces={a: list(s.clock_trace) for a, s in states.items()},
        trace=trace, strategy=strategy,
    )


__all__ = [
    "DpopAgent", "DpopMessage", "InProcessTransport", "Kind", "Metrics", "SolveReport",
    "Status", "advance_clock", "merge_clock", "run_agent", "solve",
]
