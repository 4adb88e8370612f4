"""Test-driven scenario specification.

Usage scenarios become step skeletons (anchored regexes over the step text).
A bindings file attaches an engine event to each skeleton: ``When`` steps
trigger an event, ``Then`` steps wait to observe one. Executing the bound
skeletons against a scenario program yields a verdict per usage scenario.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .features import FeatureSpec
from .scenarios import (
    EventError,
    EventPattern,
    ExecutionState,
    PRIORITY,
    Quiescent,
    ScenarioProgram,
    ScenarioSyntaxError,
    check_pattern,
    format_trace,
    parse_event_expression,
)

TRIGGER = "Trigger"
RECEIVE = "Receive"

PASS = "Pass"
FAIL_UNBOUND = "FailUnbound"
FAIL_NOT_OBSERVED = "FailNotObserved"
FAIL_BUDGET = "FailBudget"


class BindingError(ValueError):
    pass


@dataclass(frozen=True)
class Binding:
    action: str
    event: EventPattern


@dataclass(frozen=True)
class StepSkeleton:
    feature_id: str
    scenario_name: str
    step_index: int
    resolved_keyword: str
    pattern: str
    text: str = ""
    binding: Binding | None = None


@dataclass(frozen=True)
class BindingEntry:
    pattern: str
    action: str
    event: EventPattern
    line: int = 0


_META = re.compile(r"([.^$*+?{}\[\]\\|()])")


def step_pattern(text: str) -> str:
    # re.escape also escapes spaces; keep patterns readable
    return "^" + _META.sub(r"\\\1", text) + "$"


def generate_step_skeletons(spec: FeatureSpec) -> list[StepSkeleton]:
    return [
        StepSkeleton(spec.id, sc.name, i, st.resolved_keyword, step_pattern(st.text), st.text)
        for sc in spec.scenarios
        for i, st in enumerate(sc.steps)
    ]


def format_steps_file(spec: FeatureSpec) -> str:
    """``.steps`` text: scenario comments, then ``keyword<TAB>pattern`` lines."""
    out = [f"# feature: {spec.id}"]
    for sc in spec.scenarios:
        out.append(f"# scenario: {sc.name}")
        out.extend(f"{st.resolved_keyword}\t{step_pattern(st.text)}" for st in sc.steps)
    return "\n".join(out) + "\n"


def parse_bindings(text: str) -> list[BindingEntry]:
    """Parse ``pattern<TAB>trigger|receive<TAB>event-expression`` lines."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 3:
            raise BindingError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
        pattern, action, expr = (p.strip() for p in parts)
        action = action.lower()
        if action not in ("trigger", "receive"):
            raise BindingError(f"line {lineno}: unknown action {action!r}")
        try:
            re.compile(pattern)
            event = parse_event_expression(expr)
        except re.error as exc:
            raise BindingError(f"line {lineno}: bad pattern: {exc}") from None
        except ScenarioSyntaxError as exc:
            raise BindingError(f"line {lineno}: bad event expression: {exc}") from None
        entries.append(BindingEntry(pattern, TRIGGER if action == "trigger" else RECEIVE, event, lineno))
    return entries


def load_bindings(path) -> list[BindingEntry]:
    return parse_bindings(Path(path).read_text(encoding="utf-8"))


def _entry_for(sk: StepSkeleton, entries):
    subject = sk.text if sk.text else None
    for e in entries:
        if e.pattern == sk.pattern or (subject is not None and re.search(e.pattern, subject)):
            return e
    return None


def bind_steps(skeletons, entries, program: ScenarioProgram | None = None) -> list[StepSkeleton]:
    """Attach the first matching binding entry to each skeleton.

    An entry matches when its pattern equals the skeleton pattern or
    searches successfully in the step text.
    """
    if program is not None:
        systems = {s.id: s for s in program.systems}
        events = {e.key: e for e in program.events}
    out = []
    for sk in skeletons:
        e = _entry_for(sk, entries)
        if e is None:
            out.append(sk)
            continue
        want = TRIGGER if sk.resolved_keyword == "When" else RECEIVE
        if e.action != want:
            raise BindingError(
                f"{e.action} bound to {sk.resolved_keyword} step {sk.pattern!r}; "
                f"{sk.resolved_keyword} steps need {want}"
            )
        if program is not None:
            try:
                check_pattern(e.event, systems, events, complete=e.action == TRIGGER)
            except EventError as exc:
                raise BindingError(f"step {sk.pattern!r}: {exc}") from None
        out.append(
            StepSkeleton(sk.feature_id, sk.scenario_name, sk.step_index,
                         sk.resolved_keyword, sk.pattern, sk.text, Binding(e.action, e.event))
        )
    return out


def unmatched_bindings(skeletons, entries) -> list[BindingEntry]:
    used = {_entry_for(sk, entries) for sk in skeletons} - {None}
    return [e for e in entries if e not in used]


@dataclass(frozen=True)
class ScenarioVerdict:
    feature_id: str
    scenario_name: str
    verdict: str
    step_index: int | None = None
    trace: tuple = ()

    def as_dict(self) -> dict:
        return {
            "feature": self.feature_id,
            "scenario": self.scenario_name,
            "verdict": self.verdict,
            "step": self.step_index,
            "trace": format_trace(self.trace).splitlines(),
        }


@dataclass
class TestReport:
    __test__ = False  # not a pytest class

    verdicts: list[ScenarioVerdict] = field(default_factory=list)

    @property
    def totals(self) -> dict[str, int]:
        counts = {PASS: 0, FAIL_UNBOUND: 0, FAIL_NOT_OBSERVED: 0, FAIL_BUDGET: 0}
        for v in self.verdicts:
            counts[v.verdict] += 1
        return counts

    @property
    def passed(self) -> bool:
        return all(v.verdict == PASS for v in self.verdicts)

    def merge(self, other: "TestReport") -> "TestReport":
        merged = sorted(self.verdicts + other.verdicts, key=lambda v: (v.feature_id, v.scenario_name))
        return TestReport(merged)

    def to_json(self) -> str:
        doc = {
            "passed": self.passed,
            "totals": self.totals,
            "scenarios": [v.as_dict() for v in self.verdicts],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def table(self) -> str:
        rows = [("feature", "scenario", "verdict", "step")]
        for v in self.verdicts:
            rows.append((v.feature_id, v.scenario_name, v.verdict,
                         "" if v.step_index is None else str(v.step_index)))
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        t = self.totals
        lines.append(f"{len(self.verdicts)} scenarios: " + ", ".join(f"{k}={t[k]}" for k in t))
        return "\n".join(lines)


def execute_test(spec: FeatureSpec, skeletons, program: ScenarioProgram, budget: int = 100,
                 strategy: str = PRIORITY, seed: int = 0) -> TestReport:
    """Run every usage scenario of ``spec`` on a fresh execution state.

    ``budget`` caps the engine steps spent per scenario.
    """
    if budget <= 0:
        raise ValueError("budget must be > 0")
    by_scenario: dict[str, list[StepSkeleton]] = {}
    for sk in skeletons:
        if sk.feature_id == spec.id:
            by_scenario.setdefault(sk.scenario_name, []).append(sk)
    report = TestReport()
    for sc in spec.scenarios:
        steps = sorted(by_scenario.get(sc.name, []), key=lambda s: s.step_index)
        report.verdicts.append(_run_scenario(spec.id, sc, steps, program, budget, strategy, seed))
    return report


def _run_scenario(fid, sc, steps, program, budget, strategy, seed) -> ScenarioVerdict:
    state = ExecutionState(program, strategy, seed)
    used = 0
    by_index = {s.step_index: s for s in steps}

    def verdict(kind, idx=None):
        return ScenarioVerdict(fid, sc.name, kind, idx, tuple(state.trace))

    for idx in range(len(sc.steps)):
        sk = by_index.get(idx)
        if sk is None or sk.binding is None:
            return verdict(FAIL_UNBOUND, idx)
        b = sk.binding
        if b.action == TRIGGER:
            try:
                state.inject(b.event.instance())
            except (EventError, TypeError):
                return verdict(FAIL_UNBOUND, idx)
            continue
        while True:
            if used >= budget:
                return verdict(FAIL_BUDGET, idx)
            res = state.step()
            if isinstance(res, Quiescent):
                return verdict(FAIL_NOT_OBSERVED, idx)
            used += 1
            if b.event.matches(res.event):
                break
    return verdict(PASS)
