"""Feature selection for the next release of a system of systems.

Pipeline: feature files with usage scenarios -> executable scenario
programs tested against generated step skeletons -> value/cost estimates ->
Pareto-optimal release candidates.
"""

__version__ = "0.1.0"

from .features import (  # noqa: E402
    FeatureSpec,
    Stakeholder,
    UsageScenario,
    UsageStep,
    parse_feature_file,
    validate_project_features,
)
from .monrp import (  # noqa: E402
    MonrpInstance,
    ParetoFront,
    ReleaseCandidate,
    SearchParams,
    brute_force_front,
    dominates,
    evaluate,
    hypervolume,
    nsga2_search,
    random_instance,
    scores,
)
from .scenarios import (  # noqa: E402
    EventInstance,
    ExecutionState,
    ScenarioProgram,
    parse_scenario_spec,
)
