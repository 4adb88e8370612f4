"""Feature files: a strict Gherkin subset with usage scenarios.

Supported lines: ``Feature:``, ``Scenario:``, ``When``/``Then``/``And`` steps,
``@tag`` lines and ``#`` comments. Two tags carry meaning:
``@id:<slug>`` (before ``Feature:``) and ``@stakeholder:<id>`` (before a
``Scenario:``, or before ``Feature:`` to apply to every scenario).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

WEIGHT_TOLERANCE = 1e-9

STEP_KEYWORDS = ("When", "Then", "And")
REJECTED_KEYWORDS = ("Given", "But", "Background:", "Examples:", "Scenario Outline:")


class FeatureSyntaxError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"{message}, line {line}")
        self.line = line


@dataclass(frozen=True)
class UsageStep:
    keyword: str
    text: str
    resolved_keyword: str


@dataclass(frozen=True)
class UsageScenario:
    name: str
    steps: tuple[UsageStep, ...]
    stakeholder_tags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class FeatureSpec:
    id: str
    title: str
    description: str
    scenarios: tuple[UsageScenario, ...]
    source_path: str = field(default="", compare=False)


@dataclass(frozen=True)
class Stakeholder:
    id: str
    display_name: str
    weight: float


def slugify(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")


def _split_keyword(line: str):
    for kw in STEP_KEYWORDS:
        if line == kw or line.startswith(kw + " "):
            return kw, line[len(kw):].strip()
    return None, line


def _parse_tags(line: str, lineno: int) -> list[tuple[str, str]]:
    tags = []
    for tok in line.split():
        if not tok.startswith("@"):
            raise FeatureSyntaxError(f"malformed tag {tok!r}", lineno)
        name, _, val = tok[1:].partition(":")
        tags.append((name, val))
    return tags


def parse_feature_file(text: str, source_path: str = "") -> FeatureSpec:
    title = None
    feature_id = None
    description: list[str] = []
    feature_stakeholders: set[str] = set()
    pending: list[tuple[str, str]] = []
    scenarios: list[UsageScenario] = []
    cur_name = None
    cur_line = 0
    cur_tags: set[str] = set()
    cur_steps: list[UsageStep] = []
    in_description = False

    def close_scenario():
        if cur_name is None:
            return
        if not cur_steps:
            raise FeatureSyntaxError(f"scenario {cur_name!r} has no steps", cur_line)
        scenarios.append(UsageScenario(cur_name, tuple(cur_steps), frozenset(cur_tags)))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("@"):
            pending.extend(_parse_tags(line, lineno))
            in_description = False
            continue
        if line.startswith("Feature:"):
            if title is not None:
                raise FeatureSyntaxError("second Feature header", lineno)
            title = line[len("Feature:"):].strip()
            if not title:
                raise FeatureSyntaxError("empty feature title", lineno)
            for name, val in pending:
                if name == "id":
                    feature_id = val
                elif name == "stakeholder":
                    feature_stakeholders.add(val)
            pending = []
            in_description = True
            continue
        if title is None:
            raise FeatureSyntaxError("no Feature header", lineno)
        if line.startswith("Scenario:"):
            close_scenario()
            cur_name = line[len("Scenario:"):].strip()
            cur_line = lineno
            if not cur_name:
                raise FeatureSyntaxError("empty scenario name", lineno)
            cur_tags = set(feature_stakeholders)
            cur_tags.update(v for n, v in pending if n == "stakeholder")
            pending = []
            cur_steps = []
            in_description = False
            continue
        for bad in REJECTED_KEYWORDS:
            if line.startswith(bad):
                raise FeatureSyntaxError(f"unsupported keyword {bad.rstrip(':')!r}", lineno)
        kw, rest = _split_keyword(line)
        if kw is not None:
            if cur_name is None:
                raise FeatureSyntaxError("step outside scenario", lineno)
            if not rest:
                raise FeatureSyntaxError(f"empty {kw} step", lineno)
            if not cur_steps and kw != "When":
                raise FeatureSyntaxError(f"first step must be When, got {kw}", lineno)
            resolved = kw if kw != "And" else cur_steps[-1].resolved_keyword
            cur_steps.append(UsageStep(kw, rest, resolved))
            continue
        if in_description:
            description.append(line)
            continue
        raise FeatureSyntaxError(f"unknown keyword in {line.split()[0]!r}", lineno)

    if title is None:
        raise FeatureSyntaxError("no Feature header", max(1, len(text.splitlines())))
    close_scenario()
    if not scenarios:
        raise FeatureSyntaxError("feature has no scenarios", len(text.splitlines()))
    fid = feature_id or slugify(title)
    if not fid:
        raise FeatureSyntaxError("feature id is empty", 1)
    return FeatureSpec(fid, title, " ".join(" ".join(description).split()), tuple(scenarios), source_path)


def load_feature_file(path) -> FeatureSpec:
    path = Path(path)
    return parse_feature_file(path.read_text(encoding="utf-8"), str(path))


def format_feature(spec: FeatureSpec) -> str:
    """Canonical text form; parsing it gives back an equal spec."""
    out = [f"@id:{spec.id}", f"Feature: {spec.title}"]
    if spec.description:
        out.append(f"  {spec.description}")
    for sc in spec.scenarios:
        if sc.stakeholder_tags:
            out.append("  " + " ".join(f"@stakeholder:{t}" for t in sorted(sc.stakeholder_tags)))
        out.append(f"  Scenario: {sc.name}")
        out.extend(f"    {st.keyword} {st.text}" for st in sc.steps)
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class Issue:
    severity: str  # "error" | "warning"
    message: str
    feature_id: str | None = None


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def add(self, severity, message, feature_id=None):
        self.issues.append(Issue(severity, message, feature_id))

    def extend(self, other: "ValidationReport"):
        self.issues.extend(other.issues)

    def format(self) -> str:
        lines = []
        for i in self.issues:
            where = f" [{i.feature_id}]" if i.feature_id else ""
            lines.append(f"{i.severity}{where}: {i.message}")
        return "\n".join(lines)


def validate_project_features(specs, stakeholders) -> ValidationReport:
    report = ValidationReport()
    known = set()
    for s in stakeholders:
        if s.id in known:
            report.add("error", f"duplicate stakeholder id {s.id!r}")
        known.add(s.id)
        if not 0.0 <= s.weight <= 1.0:
            report.add("error", f"stakeholder {s.id!r} weight {s.weight:g} outside [0, 1]")
    total = sum(s.weight for s in stakeholders)
    if abs(total - 1.0) > WEIGHT_TOLERANCE:
        report.add("error", f"weights sum {total:g} ≠ 1")

    seen = set()
    for spec in specs:
        if spec.id in seen:
            report.add("error", f"duplicate feature id {spec.id!r}", spec.id)
        seen.add(spec.id)
        for sc in spec.scenarios:
            if not sc.stakeholder_tags:
                report.add("warning", f"scenario {sc.name!r} has no stakeholder tags", spec.id)
            for tag in sorted(sc.stakeholder_tags - known):
                report.add("error", f"unknown stakeholder tag {tag!r} in scenario {sc.name!r}", spec.id)
    return report
