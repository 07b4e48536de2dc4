"""Line-oriented text format for DCOP instances.

Grammar (UTF-8, ``#`` starts a comment)::

    dcop 1
    name <string>
    agent <id>
    var <id> <owner> <low> <high>
    con <id> table <0|neginf> <var> ...
        <u> <v1> ... <vr>
    con <id> rule <c1>*<var1> [+|-] <c2>*<var2> ... <op> <u> [util <s>]

Table rows are indented and belong to the preceding ``con ... table`` line.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Iterable, Union

from .errors import InstanceSyntaxError, InvalidInstance, SemanticError
from .model import RELATIONS, Constraint, DcopInstance, HardRule, Table, Variable
from .utility import INT64_MAX, NEG_INF

FORMAT_VERSION = 1

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")
_TERM = re.compile(r"([+-]?\d+)\*([A-Za-z_][A-Za-z0-9_.]*)\Z")


def _tokens(line: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]


def _int(tok: str, col: int, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise InstanceSyntaxError(f"expected an integer, got {tok!r}", lineno, col) from None


def _ident(tok: str, col: int, lineno: int) -> str:
    if not _IDENT.match(tok):
        raise InstanceSyntaxError(f"invalid identifier {tok!r}", lineno, col)
    return tok


class _Parser:
    def __init__(self):
        self.name = "instance"
        self.agents: dict[str, int] = {}
        self.variables: dict[str, tuple[Variable, str, int]] = {}
        self.constraints: dict[str, dict] = {}
        self.open_table: dict | None = None
        self.seen_header = False

    def line(self, lineno: int, raw: str) -> None:
        text = raw.split("#", 1)[0].rstrip()
        if not text.strip():
            return
        toks = _tokens(text)
        if text[0] in " \t":
            if self.open_table is None:
                raise InstanceSyntaxError("indented row outside a table constraint", lineno, toks[0][1])
            self.row(lineno, toks)
            return
        self.open_table = None
        kw, col = toks[0]
        if not self.seen_header:
            if kw != "dcop" or len(toks) != 2:
                raise InstanceSyntaxError("document must start with 'dcop <version>'", lineno, col)
            version = _int(toks[1][0], toks[1][1], lineno)
            if version != FORMAT_VERSION:
                raise InstanceSyntaxError(f"unsupported format version {version}", lineno, toks[1][1])
            self.seen_header = True
            return
        handler = {"name": self.name_line, "agent": self.agent, "var": self.var, "con": self.con}.get(kw)
        if handler is None:
            raise InstanceSyntaxError(f"unknown keyword {kw!r}", lineno, col)
        handler(lineno, text, toks)

    def name_line(self, lineno, text, toks):
        if len(toks) < 2:
            raise InstanceSyntaxError("'name' needs a value", lineno, len(text) + 1)
        self.name = text[toks[1][1] - 1:].strip()

    def agent(self, lineno, text, toks):
        if len(toks) != 2:
            raise InstanceSyntaxError("expected 'agent <id>'", lineno, toks[0][1])
        aid = _ident(*toks[1], lineno)
        if aid in self.agents:
            raise SemanticError(f"duplicate agent {aid!r}", aid, lineno)
        self.agents[aid] = lineno

    def var(self, lineno, text, toks):
        if len(toks) != 5:
            raise InstanceSyntaxError("expected 'var <id> <owner> <low> <high>'", lineno, toks[0][1])
        vid = _ident(*toks[1], lineno)
        owner = _ident(*toks[2], lineno)
        low = _int(*toks[3], lineno)
        high = _int(*toks[4], lineno)
        if vid in self.variables:
            raise SemanticError(f"duplicate variable {vid!r}", vid, lineno)
        if low > high:
            raise SemanticError(f"variable {vid!r} has an empty domain", vid, lineno)
        self.variables[vid] = (Variable(vid, low, high), owner, lineno)

    def con(self, lineno, text, toks):
        if len(toks) < 3:
            raise InstanceSyntaxError("expected 'con <id> table|rule ...'", lineno, toks[0][1])
        cid = _ident(*toks[1], lineno)
        if cid in self.constraints:
            raise SemanticError(f"duplicate constraint {cid!r}", cid, lineno)
        kind, kcol = toks[2]
        if kind == "table":
            if len(toks) < 5:
                raise InstanceSyntaxError("table needs a default and at least one variable", lineno, kcol)
            default, dcol = toks[3]
            if default not in ("0", "neginf"):
                raise InstanceSyntaxError(f"table default must be 0 or neginf, got {default!r}", lineno, dcol)
            scope = [_ident(*t, lineno) for t in toks[4:]]
            entry = {"kind": "table", "scope": scope, "default_neginf": default == "neginf",
                     "rows": {}, "line": lineno}
            self.constraints[cid] = entry
            self.open_table = entry
        elif kind == "rule":
            self.constraints[cid] = self.rule(lineno, toks[3:])
        else:
            raise InstanceSyntaxError(f"constraint kind must be table or rule, got {kind!r}", lineno, kcol)

    def rule(self, lineno, toks):
        if not toks:
            raise InstanceSyntaxError("empty rule", lineno, 1)
        satisfied = 0
        if len(toks) >= 2 and toks[-2][0] == "util":
            satisfied = _int(*toks[-1], lineno)
            toks = toks[:-2]
        if len(toks) < 3:
            raise InstanceSyntaxError("rule needs '<terms> <op> <bound>'", lineno, toks[0][1])
        op, ocol = toks[-2]
        if op not in RELATIONS:
            raise InstanceSyntaxError(f"unknown relational operator {op!r}", lineno, ocol)
        bound = _int(*toks[-1], lineno)
        coeffs: list[int] = []
        scope: list[str] = []
        sign = 1
        expect_term = True
        for tok, col in toks[:-2]:
            if expect_term:
                m = _TERM.match(tok)
                if not m:
                    raise InstanceSyntaxError(f"expected '<coeff>*<var>', got {tok!r}", lineno, col)
                coeffs.append(sign * int(m.group(1)))
                scope.append(m.group(2))
                expect_term = False
            else:
                if tok not in "+-" or len(tok) != 1:
                    raise InstanceSyntaxError(f"expected '+' or '-', got {tok!r}", lineno, col)
                sign = 1 if tok == "+" else -1
                expect_term = True
        if expect_term:
            raise InstanceSyntaxError("dangling operator in rule", lineno, toks[-3][1])
        return {"kind": "rule", "scope": scope, "coeffs": coeffs, "op": op, "bound": bound,
                "satisfied": satisfied, "line": lineno}

    def row(self, lineno, toks):
        entry = self.open_table
        if len(toks) != len(entry["scope"]) + 1:
            raise InstanceSyntaxError(
                f"row needs {len(entry['scope']) + 1} fields, got {len(toks)}", lineno, toks[0][1])
        u = _int(*toks[0], lineno)
        if u <= NEG_INF or u > INT64_MAX:
            raise InstanceSyntaxError(f"utility {u} outside the finite range", lineno, toks[0][1])
        values = tuple(_int(t, c, lineno) for t, c in toks[1:])
        if values in entry["rows"]:
            raise SemanticError(f"duplicate row {values} in a table", None, lineno)
        entry["rows"][values] = u

    def finish(self) -> DcopInstance:
        if not self.seen_header:
            raise InstanceSyntaxError("missing 'dcop <version>' header", 1, 1)
        owner = {}
        for vid, (var, ag, lineno) in self.variables.items():
            if ag not in self.agents:
                raise SemanticError(f"variable {vid!r} owned by unknown agent {ag!r}", ag, lineno)
            owner[vid] = ag
        for aid, lineno in self.agents.items():
            if aid not in owner.values():
                raise SemanticError(f"agent {aid!r} owns no variables", aid, lineno)
        constraints = {}
        for cid, e in self.constraints.items():
            for v in e["scope"]:
                if v not in self.variables:
                    raise SemanticError(f"constraint {cid!r} mentions undeclared variable {v!r}", v, e["line"])
            if len(set(e["scope"])) != len(e["scope"]):
                raise SemanticError(f"constraint {cid!r} repeats a variable", cid, e["line"])
            if e["kind"] == "table":
                doms = [self.variables[v][0] for v in e["scope"]]
                for tup in e["rows"]:
                    for var, val in zip(doms, tup):
                        if val not in var:
                            raise SemanticError(
                                f"constraint {cid!r}: value {val} outside the domain of {var.id!r}", var.id, e["line"])
                body = Table(dict(e["rows"]), e["default_neginf"])
            else:
                body = HardRule(tuple(e["coeffs"]), e["op"], e["bound"], e["satisfied"])
            constraints[cid] = Constraint(cid, tuple(e["scope"]), body)
        try:
            return DcopInstance(
                variables={vid: t[0] for vid, t in sorted(self.variables.items())},
                constraints=dict(sorted(constraints.items())),
                agents=tuple(sorted(self.agents)),
                owner=owner,
                name=self.name,
            )
        except InvalidInstance as e:
            raise SemanticError(str(e)) from e


def parse_instance(document: Union[bytes, str]) -> DcopInstance:
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    p = _Parser()
    for lineno, raw in enumerate(document.splitlines(), start=1):
        p.line(lineno, raw)
    return p.finish()


def _rule_text(c: Constraint) -> str:
    r = c.body
    parts = []
    for i, (coef, var) in enumerate(zip(r.coeffs, c.scope)):
        if i == 0:
            parts.append(f"{coef}*{var}")
        else:
            parts.append(f"{'+' if coef >= 0 else '-'} {abs(coef)}*{var}")
    text = f"{' '.join(parts)} {r.op} {r.bound}"
    if r.satisfied != 0:
        text += f" util {r.satisfied}"
    return text


def serialize_instance(instance: DcopInstance, comments: Iterable[str] = ()) -> bytes:
    out = [f"dcop {FORMAT_VERSION}"]
    out.extend(f"# {c}" for c in comments)
    out.append(f"name {instance.name}")
    out.extend(f"agent {a}" for a in sorted(instance.agents))
    for vid in sorted(instance.variables):
        v = instance.variables[vid]
        out.append(f"var {vid} {instance.owner[vid]} {v.low} {v.high}")
    for cid in sorted(instance.constraints):
        c = instance.constraints[cid]
        if isinstance(c.body, Table):
            default = "neginf" if c.body.default_neginf else "0"
            out.append(f"con {cid} table {default} {' '.join(c.scope)}")
            for tup in sorted(c.body.rows):
                out.append(f"  {c.body.rows[tup]} {' '.join(map(str, tup))}")
        else:
            out.append(f"con {cid} rule {_rule_text(c)}")
    return ("\n".join(out) + "\n").encode("utf-8")


def load_instance(path: Union[str, Path]) -> DcopInstance:
    return parse_instance(Path(path).read_bytes())


def save_instance(instance: DcopInstance, path: Union[str, Path], comments: Iterable[str] = ()) -> None:
    Path(path).write_bytes(serialize_instance(instance, comments))
