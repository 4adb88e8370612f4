"""
From specifications to a release-planning instance
==================================================

Value counts tagged scenarios per stakeholder. Cost grows with the number of
constituent systems, rule body steps and subsystems a scenario program uses.
"""

from pathlib import Path

from nextrelease.estimation import build_instance, derive_cost_vector, derive_value_matrix, program_complexity
from nextrelease.project import load_config, load_features, load_programs

cfg = load_config(Path(__file__).parent / "smart_charging")
feats = load_features(cfg)
programs, internal = load_programs(cfg)

for f in feats:
    cs, steps, subs = program_complexity(programs[f.id], internal)
    print(f"{f.id:<12} systems={cs} steps={steps} subsystems={subs}")

value = derive_value_matrix(feats, cfg.stakeholders, cfg.estimation)
cost = derive_cost_vector(feats, programs, cfg.estimation, internal)
inst = build_instance(cfg.stakeholders, feats, value, cost)
print("value matrix (stakeholders x features):")
print(inst.value)
print("cost:", inst.cost)
