"""Replay the canned three-step refinement of the gear batch.

The scripted planner stands in for an LLM backend: its first two answers
still collide, the third clears the checker. Watch the interference report
shrink as the loop iterates.

    python demos/02_scripted_iterations.py
"""

from pathlib import Path

from printmerge import load_fleet, load_orders, run_merge
from printmerge.agent import AgentConfig
from printmerge.planners import ScriptedPlanner

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

fleet = load_fleet(FIXTURES.joinpath("fleet.json").read_bytes())
book = load_orders(FIXTURES.joinpath("orders.json").read_bytes())
gears = [o for o in book.orders if o.id.startswith("CL")]

planner = ScriptedPlanner.from_file(FIXTURES / "scripted_gear.json")
run = run_merge(gears, fleet.get("EQ01"), planner, AgentConfig(include_images=False))

print(f"run {run.run_id} on {run.device_id}: {run.status}")
print(f"starting point: {run.initial_report.text}\n")
for rec in run.iterations:
    print(f"iteration {rec.index} ({rec.source}):")
    for (x, y, z), (pid, _dims) in zip(rec.positions, run.parts):
        print(f"  {pid} -> ({x:g}, {y:g}, {z:g})")
    print(f"  checker: {rec.report.text}\n")
print(f"planner calls used: {run.planner_calls}")
