"""Acceptance suite: one test per release criterion, at stated tolerances.

Run with `pytest tests/test_acceptance.py -v` to get one pass/fail line per
criterion (a summary block repeats them at the end).
"""

from __future__ import annotations

import hashlib
import json
import random
import time

import pytest
from fastapi.testclient import TestClient

from conftest import FIXTURES

from printmerge.agent import AgentConfig, FAILED, MergeEngine, SUCCEEDED, run_merge
from printmerge.config import ServiceConfig
from printmerge.errors import CountMismatchError
from printmerge.geometry import Placement, aabb_overlap, check_layout
from printmerge.matching import match_orders
from printmerge.memory import MemoryStore
from printmerge.model import BuildVolume
from printmerge.packing import PackRequest, shelf_pack
from printmerge.planners import ScriptedPlanner
from printmerge.prompting import format_positions, parse_positions
from printmerge.service import create_app

NO_IMAGES = AgentConfig(include_images=False)

DEVICE_VOLUMES = (
    BuildVolume(200, 200, 200),
    BuildVolume(250, 250, 250),
    BuildVolume(145, 145, 175),
)


def test_criterion_1_matching_reproduction(fleet, book):
    best = float("inf")
    for _ in range(20):
        start = time.perf_counter()
        result = match_orders(book, fleet)
        best = min(best, time.perf_counter() - start)
    assert [(a.device_id, list(a.order_ids)) for a in result.assignments] == [
        ("EQ01", ["CL01", "CL02", "CL03"]),
        ("EQ03", ["CT01", "CT02", "CT03"]),
    ]
    assert result.unassigned == ()
    assert best < 0.001, f"matching took {best * 1000:.3f} ms"


def test_criterion_2_interference_oracle_equivalence():
    def oracle(a: Placement, b: Placement, clearance: float):
        # independent interval-intersection check from box endpoints
        depth = None
        for axis in range(3):
            a_lo = a.center[axis] - a.dims[axis] / 2 - clearance / 2
            a_hi = a.center[axis] + a.dims[axis] / 2 + clearance / 2
            b_lo = b.center[axis] - b.dims[axis] / 2 - clearance / 2
            b_hi = b.center[axis] + b.dims[axis] / 2 + clearance / 2
            if min(a_hi, b_hi) - max(a_lo, b_lo) <= 0:
                return None
            push = min(a_hi - b_lo, b_hi - a_lo)
            depth = push if depth is None else min(push, depth)
        return depth

    rng = random.Random(987654321)

    def sample(i):
        # dims and centers uniform over the reference device volume ranges
        vol = DEVICE_VOLUMES[i % len(DEVICE_VOLUMES)]
        spans = (vol.l_mm, vol.w_mm, vol.h_mm)
        center = (
            rng.uniform(-spans[0] / 2, spans[0] / 2),
            rng.uniform(-spans[1] / 2, spans[1] / 2),
            rng.uniform(0, spans[2]),
        )
        dims = tuple(rng.uniform(1, s) for s in spans)
        return Placement(order_id=f"p{i}", center=center, dims=dims)

    start = time.perf_counter()
    checked = 0
    for i in range(10_000):
        a, b = sample(2 * i), sample(2 * i + 1)
        clearance = rng.choice([0.0, 1.0, 2.0, 4.0])
        got = aabb_overlap(a, b, clearance)
        expected = oracle(a, b, clearance)
        assert (got is None) == (expected is None)
        if got is not None:
            assert abs(got - expected) <= 1e-9
        checked += 1
    elapsed = time.perf_counter() - start
    assert checked == 10_000
    assert elapsed < 1.0, f"oracle sweep took {elapsed:.2f} s"


def test_criterion_3_packer_soundness():
    rng = random.Random(13579)
    start = time.perf_counter()
    for case in range(1000):
        vol = DEVICE_VOLUMES[case % len(DEVICE_VOLUMES)]
        n = rng.randint(1, 12)
        parts = tuple(
            (f"p{i:02d}", (rng.uniform(5, 80), rng.uniform(5, 80), rng.uniform(5, 80)))
            for i in range(n)
        )
        outcome = shelf_pack(PackRequest(parts=parts, volume=vol, clearance_mm=2.0))
        assert len(outcome.placed.placements) + len(outcome.rejected) == n
        assert check_layout(outcome.placed, vol).clear
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"1000 pack runs took {elapsed:.2f} s"


def test_criterion_4_iteration_narrative_reproduction(fleet, book):
    gears = [o for o in book.orders if o.id.startswith("CL")]
    racks = [o for o in book.orders if o.id.startswith("CT")]

    gear_run = run_merge(
        gears, fleet.get("EQ01"),
        ScriptedPlanner.from_file(FIXTURES / "scripted_gear.json"), NO_IMAGES,
    )
    assert gear_run.status == SUCCEEDED
    assert len(gear_run.iterations) == 3
    assert gear_run.iterations[-1].index == 3
    assert check_layout(gear_run.final_layout, gear_run.volume).clear

    rack_run = run_merge(
        racks, fleet.get("EQ03"),
        ScriptedPlanner.from_file(FIXTURES / "scripted_rack.json"), NO_IMAGES,
    )
    assert rack_run.status == SUCCEEDED
    assert len(rack_run.iterations) == 5
    assert rack_run.iterations[-1].index == 5
    assert check_layout(rack_run.final_layout, rack_run.volume).clear


def test_criterion_5_safety_gate(fleet, book):
    gears = [o for o in book.orders if o.id.startswith("CL")]

    class CollidingPlanner:
        kind = "scripted"

        def __init__(self, seed):
            self.rng = random.Random(seed)

        def propose(self, bundle):
            x = self.rng.uniform(-3, 3)
            y = self.rng.uniform(-3, 3)
            return format_positions([(x, y, self.rng.uniform(0, 60))] * bundle.expected_part_count)

    for seed in range(10):
        config = AgentConfig(include_images=False, max_iterations=10)
        run = run_merge(gears, fleet.get("EQ01"), CollidingPlanner(seed), config)
        assert run.status == FAILED
        assert run.status != SUCCEEDED
        assert run.planner_calls == config.max_iterations
        assert len(run.iterations) == config.max_iterations
        for rec in run.iterations:
            for (_x, _y, z), (_pid, dims) in zip(rec.positions, run.parts):
                assert z == dims[2] / 2


def test_criterion_6_memory_effect(fleet, book, tmp_path):
    gears = [o for o in book.orders if o.id.startswith("CL")]
    log = tmp_path / "memory.jsonl"

    engine = MergeEngine(config=NO_IMAGES, memory=MemoryStore(log))
    first = engine.run_merge(
        gears, fleet.get("EQ01"), ScriptedPlanner.from_file(FIXTURES / "scripted_gear.json")
    )
    assert first.status == SUCCEEDED
    assert first.planner_calls == 3

    replay_planner = ScriptedPlanner.from_file(FIXTURES / "scripted_gear.json")
    engine_two = MergeEngine(config=NO_IMAGES, memory=MemoryStore(log))
    second = engine_two.run_merge(gears, fleet.get("EQ01"), replay_planner)
    assert second.status == SUCCEEDED
    assert second.planner_calls == 0
    assert replay_planner.calls == 0
    assert second.iterations[0].source == "seed"

    log.unlink()
    engine_three = MergeEngine(config=NO_IMAGES, memory=MemoryStore(log))
    third = engine_three.run_merge(
        gears, fleet.get("EQ01"), ScriptedPlanner.from_file(FIXTURES / "scripted_gear.json")
    )
    assert third.status == SUCCEEDED
    assert third.planner_calls == 3


def test_criterion_7_prompt_round_trip():
    rng = random.Random(24680)

    def frac6():
        return rng.randint(-200_000_000, 200_000_000) / 1_000_000.0

    for _ in range(1000):
        n = rng.randint(1, 8)
        positions = [(frac6(), frac6(), frac6()) for _ in range(n)]
        text = format_positions(positions)
        parsed = parse_positions(text, n)
        assert parsed.positions == tuple(positions)

        wrong = n + rng.choice([-1, 1, 2]) if n > 1 else n + 1
        with pytest.raises(CountMismatchError):
            parse_positions(text, wrong)


def test_criterion_8_service_durability(tmp_path):
    config = ServiceConfig(
        data_dir=str(tmp_path / "data"),
        fleet_file=str(FIXTURES / "fleet.json"),
        poll_timeout_s=2.0,
        agent=AgentConfig(include_images=False, batch_window_count=6),
    )
    orders = json.loads(FIXTURES.joinpath("orders.json").read_text())["orders"]

    with TestClient(create_app(config)) as client:
        for order in orders:
            assert client.post("/api/orders", json=order).status_code == 201
        deadline = time.monotonic() + 20
        while time.monotonic() < deadline:
            runs = client.get("/api/runs").json()["runs"]
            if len([r for r in runs if r["status"] == "Succeeded"]) == 2:
                break
            time.sleep(0.05)
        doc_before = client.get("/api/runs").json()
        assert [r["status"] for r in doc_before["runs"]] == ["Succeeded", "Succeeded"]
        hash_before = hashlib.sha256(
            json.dumps(doc_before, sort_keys=True).encode()
        ).hexdigest()

    # a fresh service process over the same data directory
    with TestClient(create_app(config)) as client:
        doc_after = client.get("/api/runs").json()
        hash_after = hashlib.sha256(
            json.dumps(doc_after, sort_keys=True).encode()
        ).hexdigest()
    assert hash_after == hash_before
