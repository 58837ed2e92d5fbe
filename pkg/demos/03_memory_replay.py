"""Show the memory store turning a repeat batch into a zero-call merge.

The first run needs three planner proposals; the recorded layout then seeds
an identical batch so the second run never calls the planner at all.

    python demos/03_memory_replay.py
"""

import tempfile
from pathlib import Path

from printmerge import MemoryStore, MergeEngine, load_fleet, load_orders
from printmerge.agent import AgentConfig
from printmerge.planners import ScriptedPlanner

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

fleet = load_fleet(FIXTURES.joinpath("fleet.json").read_bytes())
book = load_orders(FIXTURES.joinpath("orders.json").read_bytes())
gears = [o for o in book.orders if o.id.startswith("CL")]

with tempfile.TemporaryDirectory() as tmp:
    log = Path(tmp) / "memory.jsonl"
    engine = MergeEngine(config=AgentConfig(include_images=False), memory=MemoryStore(log))

    first = engine.run_merge(
        gears, fleet.get("EQ01"), ScriptedPlanner.from_file(FIXTURES / "scripted_gear.json")
    )
    print(f"first run:  {first.status} after {first.planner_calls} planner calls")

    second = engine.run_merge(
        gears, fleet.get("EQ01"), ScriptedPlanner.from_file(FIXTURES / "scripted_gear.json")
    )
    print(f"second run: {second.status} after {second.planner_calls} planner calls "
          f"(seeded from case {second.iterations[0].memory_case_ids[0]})")
    print(f"memory log now holds {len(engine.memory)} case(s)")
