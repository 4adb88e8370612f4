import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nextrelease.features import (
    FeatureSpec,
    FeatureSyntaxError,
    Stakeholder,
    UsageScenario,
    UsageStep,
    format_feature,
    parse_feature_file,
    slugify,
    validate_project_features,
)


def test_umc_structure(umc_spec):
    assert len(umc_spec.scenarios) == 2
    for sc in umc_spec.scenarios:
        assert len(sc.steps) == 4
        assert [s.resolved_keyword for s in sc.steps] == ["When", "Then", "Then", "Then"]
        assert [s.keyword for s in sc.steps] == ["When", "Then", "And", "And"]
    assert umc_spec.title.startswith("User-managed charging (UMC):")
    assert umc_spec.scenarios[1].steps[0].text == "the EVU user enters charging preferences"
    assert umc_spec.scenarios[0].name == "The EVU requests information on energy prices"


def test_minimal_file():
    spec = parse_feature_file("Feature: X\n  Scenario: s\n    When a")
    assert len(spec.scenarios) == 1
    assert len(spec.scenarios[0].steps) == 1
    assert spec.id == "x"


def test_step_outside_scenario():
    with pytest.raises(FeatureSyntaxError, match="step outside scenario, line 2"):
        parse_feature_file("Feature: X\n    When a")


@pytest.mark.parametrize(
    "text, message",
    [
        ("Scenario: s\n  When a", "no Feature header, line 1"),
        ("Feature: X\n  Scenario: s\n    And a", "first step must be When, got And, line 3"),
        ("Feature: X\n  Scenario: s\n    Then a", "first step must be When, got Then, line 3"),
        ("Feature: X\n  Scenario: s\n    Given a", "unsupported keyword 'Given', line 3"),
        ("Feature: X\n  Scenario: s\n    When a\n    But b", "unsupported keyword 'But', line 4"),
        ("Feature: X\n  Scenario: s\n    When a\n    Whenever b", "unknown keyword"),
        ("Feature: X\n  Scenario: s\n", "has no steps, line 2"),
        ("Feature: X\n  some prose\n", "feature has no scenarios"),
        ("Feature: X\nFeature: Y\n", "second Feature header, line 2"),
        ("", "no Feature header"),
    ],
)
def test_syntax_errors(text, message):
    with pytest.raises(FeatureSyntaxError, match=message):
        parse_feature_file(text)


def test_tags_and_description():
    text = """\
# comment line
@id:umc @wip
Feature: User managed charging
  Users plan charging
    around prices.
  @stakeholder:evu
  @stakeholder:dso
  Scenario: one
    When a
    Then b
    And c
  Scenario: two
    When d
"""
    spec = parse_feature_file(text)
    assert spec.id == "umc"
    assert spec.description == "Users plan charging around prices."
    assert spec.scenarios[0].stakeholder_tags == {"evu", "dso"}
    assert spec.scenarios[1].stakeholder_tags == frozenset()
    assert [s.resolved_keyword for s in spec.scenarios[0].steps] == ["When", "Then", "Then"]


def test_feature_level_stakeholder_tag_applies_to_all_scenarios():
    spec = parse_feature_file(
        "@stakeholder:city\nFeature: F\n  @stakeholder:evu\n  Scenario: a\n    When x\n  Scenario: b\n    When y\n"
    )
    assert spec.scenarios[0].stakeholder_tags == {"city", "evu"}
    assert spec.scenarios[1].stakeholder_tags == {"city"}


def test_and_after_when_resolves_to_when():
    spec = parse_feature_file("Feature: F\n  Scenario: a\n    When x\n    And y\n    Then z\n    And w\n")
    assert [s.resolved_keyword for s in spec.scenarios[0].steps] == ["When", "When", "Then", "Then"]


def test_slug():
    assert slugify("User-managed charging (UMC)") == "user-managed-charging-umc"


def test_round_trip_umc(umc_spec):
    again = parse_feature_file(format_feature(umc_spec))
    assert again == umc_spec


words = st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=8)
phrase = st.lists(words, min_size=1, max_size=5).map(" ".join)


@st.composite
def feature_specs(draw):
    scenarios = []
    for k in range(draw(st.integers(1, 4))):
        kws = ["When"] + draw(st.lists(st.sampled_from(["When", "Then", "And"]), max_size=5))
        steps, last = [], None
        for kw in kws:
            last = kw if kw != "And" else last
            steps.append(UsageStep(kw, draw(phrase), last))
        tags = frozenset(draw(st.lists(words, max_size=3)))
        scenarios.append(UsageScenario(f"scenario {k} " + draw(phrase), tuple(steps), tags))
    title = draw(phrase)
    desc = draw(st.one_of(st.just(""), phrase.map(lambda p: "x" + p)))
    return FeatureSpec(slugify(title), title, desc, tuple(scenarios))


@settings(max_examples=200)
@given(feature_specs())
def test_round_trip_property(spec):
    text = format_feature(spec)
    assert parse_feature_file(text) == spec
    # one step per non-blank step line
    step_lines = [ln for ln in text.splitlines() if ln.strip().split(" ")[0] in ("When", "Then", "And")]
    assert len(step_lines) == sum(len(s.steps) for s in spec.scenarios)
    assert parse_feature_file(text) == parse_feature_file(text)


def _spec(fid, tags=("evu",)):
    return FeatureSpec(fid, fid, "", (UsageScenario("s", (UsageStep("When", "a", "When"),), frozenset(tags)),))


STAKEHOLDERS = [Stakeholder("evu", "EV user", 0.6), Stakeholder("dso", "Grid", 0.4)]


def test_validate_ok():
    report = validate_project_features([_spec("a"), _spec("b")], STAKEHOLDERS)
    assert report.ok and not report.issues


def test_validate_duplicate_feature_id():
    report = validate_project_features([_spec("umc"), _spec("umc")], STAKEHOLDERS)
    assert [i.message for i in report.errors] == ["duplicate feature id 'umc'"]


def test_validate_unknown_stakeholder():
    report = validate_project_features([_spec("a", ("ghost",))], STAKEHOLDERS)
    assert len(report.errors) == 1
    assert "ghost" in report.errors[0].message


def test_validate_weight_sum():
    sh = [Stakeholder("evu", "", 0.5), Stakeholder("dso", "", 0.4)]
    report = validate_project_features([_spec("a")], sh)
    assert [i.message for i in report.errors] == ["weights sum 0.9 ≠ 1"]


def test_validate_untagged_scenario_is_warning():
    report = validate_project_features([_spec("a", ())], STAKEHOLDERS)
    assert report.ok
    assert len(report.warnings) == 1
