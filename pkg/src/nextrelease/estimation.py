"""Value and cost estimates derived from feature and scenario artifacts.

Value of feature i for stakeholder j counts the usage scenarios of i tagged
with j. Cost of feature i grows linearly with the constituent systems,
rule body steps and subsystems of its scenario program.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .monrp import MonrpInstance
from .scenarios import CONSTITUENT, SUBSYSTEM, ScenarioProgram


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class EstimationParams:
    alpha: float = 5.0  # per constituent system
    beta: float = 1.0  # per rule body step
    gamma: float = 3.0  # per subsystem
    value_unit: float = 1.0  # per tagged usage scenario
    cost_overrides: Mapping[str, float] = field(default_factory=dict)
    value_overrides: Mapping[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            if not getattr(self, name) >= 0:
                raise EstimationError(f"{name} must be >= 0")
        if not self.value_unit > 0:
            raise EstimationError("value_unit must be > 0")
        for k, v in self.cost_overrides.items():
            if not v >= 0:
                raise EstimationError(f"cost override for {k!r} must be >= 0")
        for k, v in self.value_overrides.items():
            if not v >= 0:
                raise EstimationError(f"value override for {k!r} must be >= 0")


def derive_value_matrix(features, stakeholders, params: EstimationParams) -> np.ndarray:
    """Matrix of shape (stakeholders, features)."""
    sidx = {s.id: j for j, s in enumerate(stakeholders)}
    fidx = {f.id: i for i, f in enumerate(features)}
    for fid, sid in params.value_overrides:
        if sid not in sidx:
            raise EstimationError(f"value override names unknown stakeholder {sid!r}")
        if fid not in fidx:
            raise EstimationError(f"value override names unknown feature {fid!r}")
    value = np.zeros((len(stakeholders), len(features)))
    for i, f in enumerate(features):
        for sc in f.scenarios:
            for tag in sc.stakeholder_tags:
                if tag in sidx:
                    value[sidx[tag], i] += 1
    value *= params.value_unit
    for (fid, sid), v in params.value_overrides.items():
        value[sidx[sid], fidx[fid]] = v
    return value


def program_complexity(program: ScenarioProgram, internal: Mapping[str, ScenarioProgram] | None = None):
    """(constituent systems, body steps, subsystems) referenced by a program.

    Subsystems declared in the CS-internal program of a referenced
    constituent system count as well.
    """
    refs = program.referenced_systems()
    kinds = {s.id: s for s in program.systems}
    cs = sorted(r for r in refs if kinds[r].kind == CONSTITUENT)
    subs = {(kinds[r].parent, r) for r in refs if kinds[r].kind == SUBSYSTEM}
    for c in cs:
        inner = (internal or {}).get(c)
        if inner is not None:
            subs.update((c, s.id) for s in inner.systems if s.kind == SUBSYSTEM and s.parent == c)
    steps = sum(len(r.body) for r in program.rules)
    return len(cs), steps, len(subs)


def derive_cost_vector(features, programs: Mapping[str, ScenarioProgram], params: EstimationParams,
                       internal: Mapping[str, ScenarioProgram] | None = None) -> np.ndarray:
    cost = np.zeros(len(features))
    for i, f in enumerate(features):
        if f.id in params.cost_overrides:
            cost[i] = params.cost_overrides[f.id]
            continue
        prog = programs.get(f.id)
        if prog is None:
            raise EstimationError(f"feature {f.id!r} has neither a scenario program nor a cost override")
        n_cs, n_steps, n_sub = program_complexity(prog, internal)
        cost[i] = params.alpha * n_cs + params.beta * n_steps + params.gamma * n_sub
    return cost


def build_instance(stakeholders, features, value_matrix, cost_vector) -> MonrpInstance:
    """Instance with feature and stakeholder order as given."""
    value = np.asarray(value_matrix, dtype=float)
    cost = np.asarray(cost_vector, dtype=float)
    m, n = len(stakeholders), len(features)
    if value.shape != (m, n):
        raise EstimationError(f"value matrix has shape {value.shape}, expected ({m}, {n})")
    if cost.shape != (n,):
        raise EstimationError(f"cost vector has length {cost.size}, expected {n}")
    return MonrpInstance(
        [s.weight for s in stakeholders],
        value,
        cost,
        tuple(s.id for s in stakeholders),
        tuple(f.id for f in features),
    )
