"""
Reading feature files
=====================

Usage scenarios live in feature files. Tags above a scenario say which
stakeholders care about it.
"""

from pathlib import Path

from nextrelease import features

corpus = Path(__file__).parent / "smart_charging"
umc = features.load_feature_file(corpus / "features" / "umc.feature")
print(umc.id, "-", len(umc.scenarios), "scenarios")

for sc in umc.scenarios:
    print(f"  {sc.name}  tags={sorted(sc.stakeholder_tags)}")
    for st in sc.steps:
        print(f"    {st.keyword:<4} -> {st.resolved_keyword:<4} {st.text}")

# ``And`` inherits the keyword before it; the canonical form re-parses to the same spec
assert features.parse_feature_file(features.format_feature(umc)) == umc

# Validation catches weights that do not add up
shaky = [features.Stakeholder("evu", "", 0.5), features.Stakeholder("dso", "", 0.4)]
print(features.validate_project_features([umc], shaky).format())
