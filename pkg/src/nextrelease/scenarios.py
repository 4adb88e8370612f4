"""Scenario specifications and their execution.

A scenario program declares systems, the events they own, and scenario
rules. A rule is triggered by an event and then walks its body, where each
step either requests an event or waits for one (``receive``). Rules only
interact through shared events; execution repeatedly selects one requested
event and advances every rule waiting for it.

DSL example::

    system EVU stakeholder
    system App
    system EV
    event App.enterChargingPreferences()
    event App.calculateChargingPlan()
    scenario plan on EVU -> App.enterChargingPreferences {
        request App.calculateChargingPlan()
    }
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

CONSTITUENT = "ConstituentSystem"
STAKEHOLDER = "ExternalStakeholder"
SUBSYSTEM = "Subsystem"

SOS = "SoS"
CS_INTERNAL = "CSInternal"

PARAM_TYPES = {"string": str, "int": int, "bool": bool}


class ScenarioSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        where = f" (line {line}, column {col})" if line else ""
        super().__init__(message + where)
        self.line = line
        self.col = col


class EventError(ValueError):
    pass


@dataclass(frozen=True)
class SystemDef:
    id: str
    kind: str = CONSTITUENT
    parent: str | None = None


@dataclass(frozen=True)
class EventDecl:
    owner: str
    name: str
    params: tuple[tuple[str, str], ...] = ()

    @property
    def key(self) -> str:
        return f"{self.owner}.{self.name}"


@dataclass(frozen=True)
class EventInstance:
    owner: str
    name: str
    sender: str | None = None
    args: tuple[tuple[str, object], ...] = ()

    @property
    def key(self) -> str:
        return f"{self.owner}.{self.name}"

    def __str__(self):
        head = f"{self.sender} -> " if self.sender else ""
        return f"{head}{self.key}({format_args(self.args, sep=', ')})"


@dataclass(frozen=True)
class EventPattern:
    """Event template; ``sender`` None matches any sender, args match literally."""

    owner: str
    name: str
    sender: str | None = None
    args: tuple[tuple[str, object], ...] = ()

    @property
    def key(self) -> str:
        return f"{self.owner}.{self.name}"

    def matches(self, e: EventInstance) -> bool:
        if (self.owner, self.name) != (e.owner, e.name):
            return False
        if self.sender is not None and self.sender != e.sender:
            return False
        given = dict(e.args)
        return all(k in given and given[k] == v for k, v in self.args)

    def instance(self) -> EventInstance:
        return EventInstance(self.owner, self.name, self.sender, self.args)

    def __str__(self):
        return str(self.instance())


@dataclass(frozen=True)
class BodyStep:
    action: str  # "request" | "receive"
    pattern: EventPattern


@dataclass(frozen=True)
class ScenarioRule:
    id: str
    trigger: EventPattern
    body: tuple[BodyStep, ...]


@dataclass(frozen=True)
class ScenarioProgram:
    systems: tuple[SystemDef, ...]
    events: tuple[EventDecl, ...]
    rules: tuple[ScenarioRule, ...]
    level: str = SOS

    def system(self, sid: str) -> SystemDef | None:
        return next((s for s in self.systems if s.id == sid), None)

    def event(self, owner: str, name: str) -> EventDecl | None:
        return next((e for e in self.events if e.owner == owner and e.name == name), None)

    def without_rule(self, rule_id: str) -> "ScenarioProgram":
        rules = tuple(r for r in self.rules if r.id != rule_id)
        return ScenarioProgram(self.systems, self.events, rules, self.level)

    def referenced_systems(self) -> set[str]:
        """Systems that own or send a declared event or appear in a rule."""
        refs = {e.owner for e in self.events}
        for r in self.rules:
            for p in [r.trigger] + [s.pattern for s in r.body]:
                refs.add(p.owner)
                if p.sender:
                    refs.add(p.sender)
        return refs


# -- parsing ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>(?:\#|//)[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<int>-?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<punct>[.(){},:=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        mo = _TOKEN_RE.match(text, pos)
        if mo is None:
            raise ScenarioSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = mo.lastgroup
        val = mo.group()
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, val, line, pos - line_start + 1))
        nl = val.count("\n")
        if nl:
            line += nl
            line_start = pos + val.rindex("\n") + 1
        pos = mo.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ScenarioSyntaxError(msg, tok.line, tok.col)

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, text) -> bool:
        return self.tok.text == text and self.tok.kind in ("ident", "punct", "arrow")

    def expect(self, text) -> _Tok:
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def ident(self) -> _Tok:
        if self.tok.kind != "ident":
            raise self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def literal(self):
        t = self.next()
        if t.kind == "int":
            return int(t.text)
        if t.kind == "string":
            return json.loads(t.text)
        if t.kind == "ident" and t.text in ("true", "false"):
            return t.text == "true"
        raise self.error(f"expected literal, found {t.text!r}", t)

    def pattern(self) -> tuple[EventPattern, _Tok]:
        start = self.tok
        first = self.ident().text
        sender = None
        if self.at("->"):
            self.next()
            sender, first = first, self.ident().text
        self.expect(".")
        name = self.ident().text
        args = []
        if self.at("("):
            self.next()
            while not self.at(")"):
                key = self.ident().text
                self.expect("=")
                args.append((key, self.literal()))
                if not self.at(")"):
                    self.expect(",")
            self.expect(")")
        return EventPattern(first, name, sender, tuple(args)), start


def parse_scenario_spec(text: str, level: str = SOS) -> ScenarioProgram:
    """Parse and resolve a scenario program; raises ScenarioSyntaxError."""
    if level not in (SOS, CS_INTERNAL):
        raise ValueError(f"unknown level {level!r}")
    p = _Parser(text)
    systems: list[tuple[SystemDef, _Tok]] = []
    events: list[tuple[EventDecl, _Tok]] = []
    rules: list[tuple[ScenarioRule, list]] = []

    while p.tok.kind != "eof":
        kw = p.ident()
        if kw.text == "system":
            sid = p.ident()
            kind, parent = CONSTITUENT, None
            if p.at("stakeholder"):
                p.next()
                kind = STAKEHOLDER
            elif p.at("subsystem"):
                p.next()
                p.expect("of")
                kind, parent = SUBSYSTEM, p.ident().text
            systems.append((SystemDef(sid.text, kind, parent), sid))
        elif kw.text == "event":
            owner = p.ident()
            p.expect(".")
            name = p.ident().text
            p.expect("(")
            params = []
            while not p.at(")"):
                pname = p.ident().text
                p.expect(":")
                ptype = p.ident()
                if ptype.text not in PARAM_TYPES:
                    raise p.error(f"unknown parameter type {ptype.text!r}", ptype)
                params.append((pname, ptype.text))
                if not p.at(")"):
                    p.expect(",")
            p.expect(")")
            events.append((EventDecl(owner.text, name, tuple(params)), owner))
        elif kw.text == "scenario":
            rid = p.ident().text
            p.expect("on")
            trigger = p.pattern()
            p.expect("{")
            body = []
            while not p.at("}"):
                if p.tok.kind == "eof":
                    raise p.error(f"expected '}}' to close scenario {rid!r}")
                act = p.ident()
                if act.text not in ("request", "receive"):
                    raise p.error(f"expected request or receive, found {act.text!r}", act)
                body.append((act.text, p.pattern()))
            close = p.expect("}")
            if not body:
                raise p.error(f"scenario {rid!r} has an empty body", close)
            rule = ScenarioRule(rid, trigger[0], tuple(BodyStep(a, pat) for a, (pat, _) in body))
            rules.append((rule, [(None, trigger)] + body))
        else:
            raise p.error(f"expected system, event or scenario, found {kw.text!r}", kw)

    return _resolve(systems, events, rules, level)


def _resolve(systems, events, rules, level) -> ScenarioProgram:
    sysmap = {}
    for s, tok in systems:
        if s.id in sysmap:
            raise ScenarioSyntaxError(f"duplicate system {s.id!r}", tok.line, tok.col)
        sysmap[s.id] = s
    for s, tok in systems:
        if s.kind == SUBSYSTEM:
            parent = sysmap.get(s.parent)
            if parent is None or parent.kind != CONSTITUENT:
                raise ScenarioSyntaxError(
                    f"subsystem {s.id!r} needs a constituent system parent, got {s.parent!r}",
                    tok.line, tok.col,
                )
    evmap = {}
    for e, tok in events:
        if e.owner not in sysmap:
            raise ScenarioSyntaxError(f"undeclared system {e.owner!r}", tok.line, tok.col)
        if e.key in evmap:
            raise ScenarioSyntaxError(f"duplicate event {e.key!r}", tok.line, tok.col)
        names = [n for n, _ in e.params]
        if len(set(names)) != len(names):
            raise ScenarioSyntaxError(f"duplicate parameter in event {e.key!r}", tok.line, tok.col)
        evmap[e.key] = e
    if not rules:
        raise ScenarioSyntaxError("no scenario rules")
    seen = set()
    for rule, parts in rules:
        if rule.id in seen:
            raise ScenarioSyntaxError(f"duplicate scenario {rule.id!r}", parts[0][1][1].line, 1)
        seen.add(rule.id)
        for action, (pat, tok) in parts:
            try:
                check_pattern(pat, sysmap, evmap, complete=action == "request")
            except EventError as exc:
                raise ScenarioSyntaxError(str(exc), tok.line, tok.col) from None
    return ScenarioProgram(
        tuple(s for s, _ in systems),
        tuple(e for e, _ in events),
        tuple(r for r, _ in rules),
        level,
    )


def check_pattern(pat: EventPattern, systems, events, complete: bool = False):
    """Validate a pattern against declarations; ``complete`` demands every argument."""
    if pat.sender is not None and pat.sender not in systems:
        raise EventError(f"undeclared system {pat.sender!r}")
    decl = events.get(pat.key)
    if decl is None:
        raise EventError(f"undeclared event {pat.key!r}")
    types = dict(decl.params)
    names = [k for k, _ in pat.args]
    if len(set(names)) != len(names):
        raise EventError(f"repeated argument in {pat.key!r}")
    for k, v in pat.args:
        if k not in types:
            raise EventError(f"event {pat.key!r} has no parameter {k!r}")
        want = PARAM_TYPES[types[k]]
        if type(v) is not want:
            raise EventError(f"argument {k!r} of {pat.key!r} must be {types[k]}")
    if complete and len(pat.args) != len(types):
        raise EventError(f"event {pat.key!r} expects {len(types)} arguments, got {len(pat.args)}")


def parse_event_expression(text: str) -> EventPattern:
    """Parse a standalone ``[sender ->] Owner.name(args)`` expression."""
    p = _Parser(text)
    pat, _ = p.pattern()
    if p.tok.kind != "eof":
        raise p.error(f"trailing input {p.tok.text!r}")
    return pat


def load_scenario_file(path) -> ScenarioProgram:
    path = Path(path)
    level = CS_INTERNAL if path.name.endswith(".internal.scn") else SOS
    return parse_scenario_spec(path.read_text(encoding="utf-8"), level)


# -- execution -------------------------------------------------------------


@dataclass
class Activation:
    rule: int
    pc: int
    serial: int


@dataclass(frozen=True)
class Selected:
    event: EventInstance


@dataclass(frozen=True)
class Quiescent:
    pass


@dataclass(frozen=True)
class Trace:
    events: tuple[EventInstance, ...]
    budget_exhausted: bool = False

    def __len__(self):
        return len(self.events)

    def format(self) -> str:
        return format_trace(self.events)


PRIORITY = "priority"
RANDOM = "random"


@dataclass
class ExecutionState:
    """Mutable run state of one program.

    ``strategy`` is ``"priority"`` (lowest rule index, then body position,
    wins) or ``"random"`` (uniform over pending requests, seeded).
    """

    program: ScenarioProgram
    strategy: str = PRIORITY
    rng_seed: int = 0
    activations: list[Activation] = field(default_factory=list)
    trace: list[EventInstance] = field(default_factory=list)
    injected: list[bool] = field(default_factory=list)
    _serial: int = 0
    _rng: random.Random = field(init=False, repr=False)

    def __post_init__(self):
        if self.strategy not in (PRIORITY, RANDOM):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        self._rng = random.Random(self.rng_seed)
        self._systems = {s.id: s for s in self.program.systems}
        self._events = {e.key: e for e in self.program.events}

    @property
    def step_count(self) -> int:
        return len(self.trace)

    def active_rules(self) -> list[str]:
        return [self.program.rules[a.rule].id for a in self.activations]

    def pending_requests(self) -> list[tuple[Activation, EventPattern]]:
        out = []
        for a in self.activations:
            st = self.program.rules[a.rule].body[a.pc]
            if st.action == "request":
                out.append((a, st.pattern))
        out.sort(key=lambda item: (item[0].rule, item[0].pc, item[0].serial))
        return out

    def _occur(self, e: EventInstance, injected: bool):
        self.trace.append(e)
        self.injected.append(injected)
        still = []
        for a in self.activations:
            body = self.program.rules[a.rule].body
            if body[a.pc].pattern.matches(e):
                a.pc += 1
            if a.pc < len(body):
                still.append(a)
        for idx, rule in enumerate(self.program.rules):
            if rule.trigger.matches(e):
                still.append(Activation(idx, 0, self._serial))
                self._serial += 1
        self.activations = still

    def inject(self, e: EventInstance) -> "ExecutionState":
        if not isinstance(e, EventInstance):
            raise TypeError("inject expects an EventInstance")
        pat = EventPattern(e.owner, e.name, e.sender, e.args)
        check_pattern(pat, self._systems, self._events, complete=True)
        self._occur(e, True)
        return self

    def step(self):
        pending = self.pending_requests()
        if not pending:
            return Quiescent()
        if self.strategy == PRIORITY:
            _, pat = pending[0]
        else:
            _, pat = pending[self._rng.randrange(len(pending))]
        e = pat.instance()
        self._occur(e, False)
        return Selected(e)

    def run_to_quiescence(self, budget: int) -> Trace:
        if budget <= 0:
            raise ValueError("budget must be > 0")
        for _ in range(budget):
            if isinstance(self.step(), Quiescent):
                return Trace(tuple(self.trace), False)
        return Trace(tuple(self.trace), bool(self.pending_requests()))


def new_state(program: ScenarioProgram, strategy: str = PRIORITY, seed: int = 0) -> ExecutionState:
    return ExecutionState(program, strategy, seed)


def inject(state: ExecutionState, e: EventInstance) -> ExecutionState:
    return state.inject(e)


def step(state: ExecutionState):
    return state.step()


def run_to_quiescence(state: ExecutionState, budget: int) -> Trace:
    return state.run_to_quiescence(budget)


def format_args(args, sep=",") -> str:
    def lit(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return json.dumps(v)
        return str(v)

    return sep.join(f"{k}={lit(v)}" for k, v in args)


def format_trace(events) -> str:
    """One line per event: ``seq<TAB>sender<TAB>owner.name<TAB>args``."""
    lines = [
        f"{i}\t{e.sender or '-'}\t{e.key}\t{format_args(e.args)}"
        for i, e in enumerate(events, start=1)
    ]
    return "".join(line + "\n" for line in lines)
