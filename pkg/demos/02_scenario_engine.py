"""
Running a scenario program
==========================

Scenario rules wait for a trigger event, then request events in body order.
The engine picks one pending request per step until nothing is pending.
"""

from pathlib import Path

from nextrelease.scenarios import EventInstance, ExecutionState, format_trace, load_scenario_file

program = load_scenario_file(Path(__file__).parent / "smart_charging" / "scenarios" / "umc.scn")
print("rules:", [r.id for r in program.rules])

state = ExecutionState(program)
state.inject(EventInstance("App", "enterChargingPreferences", "EVU"))
trace = state.run_to_quiescence(budget=100)
print(format_trace(trace.events))

# Two triggers at once: the priority strategy always yields the same interleaving,
# the random strategy varies with the seed.
both = [EventInstance("App", "requestEnergyPrices", "EVU"),
        EventInstance("App", "enterChargingPreferences", "EVU")]
for strategy, seed in [("priority", 0), ("random", 1), ("random", 2)]:
    s = ExecutionState(program, strategy, seed)
    for e in both:
        s.inject(e)
    names = [e.name for e in s.run_to_quiescence(100).events[2:]]
    print(f"{strategy:>8} seed {seed}: {names}")
