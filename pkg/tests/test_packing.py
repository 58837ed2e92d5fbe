from __future__ import annotations

import random

import pytest

from printmerge.geometry import check_layout
from printmerge.model import BuildVolume
from printmerge.packing import PackRequest, initial_positions, shelf_pack

GEAR = (24.0, 23.99, 10.0)
RACK = (40.8, 10.0, 7.0)


def test_three_gears_pack_clear():
    req = PackRequest(
        parts=(("CL01", GEAR), ("CL02", GEAR), ("CL03", GEAR)),
        volume=BuildVolume(200, 200, 200),
        clearance_mm=2.0,
    )
    outcome = shelf_pack(req)
    assert outcome.rejected == ()
    assert outcome.placed.order_ids() == ["CL01", "CL02", "CL03"]
    assert check_layout(outcome.placed, req.volume).clear


def test_three_racks_pack_clear():
    req = PackRequest(
        parts=(("CT01", RACK), ("CT02", RACK), ("CT03", RACK)),
        volume=BuildVolume(145, 145, 175),
        clearance_mm=2.0,
    )
    outcome = shelf_pack(req)
    assert outcome.rejected == ()
    assert check_layout(outcome.placed, req.volume).clear


def test_unfittable_part_rejected_not_forced():
    req = PackRequest(
        parts=(("BIG", (300.0, 10.0, 10.0)),),
        volume=BuildVolume(200, 200, 200),
        clearance_mm=2.0,
    )
    outcome = shelf_pack(req)
    assert outcome.placed.placements == ()
    assert outcome.rejected == ("BIG",)


def test_too_tall_part_rejected():
    req = PackRequest(
        parts=(("TALL", (10.0, 10.0, 300.0)), ("OK", (10.0, 10.0, 10.0))),
        volume=BuildVolume(200, 200, 200),
    )
    outcome = shelf_pack(req)
    assert outcome.rejected == ("TALL",)
    assert outcome.placed.order_ids() == ["OK"]


def test_parts_rest_on_bed():
    req = PackRequest(
        parts=(("A", (10, 10, 8)), ("B", (5, 5, 30))),
        volume=BuildVolume(100, 100, 100),
    )
    outcome = shelf_pack(req)
    by_id = {p.order_id: p for p in outcome.placed.placements}
    assert by_id["A"].center[2] == pytest.approx(4.0)
    assert by_id["B"].center[2] == pytest.approx(15.0)


def test_determinism():
    rng = random.Random(5)
    parts = tuple(
        (f"p{i}", (rng.uniform(5, 60), rng.uniform(5, 60), rng.uniform(5, 60)))
        for i in range(10)
    )
    req = PackRequest(parts=parts, volume=BuildVolume(200, 200, 200))
    first = shelf_pack(req)
    second = shelf_pack(req)
    assert first == second


def test_initial_positions_all_centered():
    req = PackRequest(
        parts=(("CL01", GEAR), ("CL02", GEAR), ("CL03", GEAR)),
        volume=BuildVolume(200, 200, 200),
    )
    layout = initial_positions(req)
    assert [p.center for p in layout.placements] == [(0, 0, 5), (0, 0, 5), (0, 0, 5)]


def test_initial_positions_single_part_already_clear():
    req = PackRequest(parts=(("CL01", GEAR),), volume=BuildVolume(200, 200, 200))
    layout = initial_positions(req)
    assert check_layout(layout, req.volume).clear


def test_initial_positions_racks_collide_in_three_pairs():
    req = PackRequest(
        parts=(("CT01", RACK), ("CT02", RACK), ("CT03", RACK)),
        volume=BuildVolume(145, 145, 175),
        clearance_mm=2.0,
    )
    layout = initial_positions(req)
    assert [p.center for p in layout.placements] == [(0, 0, 3.5)] * 3
    report = check_layout(layout, req.volume)
    assert len(report.findings) == 3


VOLUMES = (BuildVolume(200, 200, 200), BuildVolume(250, 250, 250), BuildVolume(145, 145, 175))


def test_randomized_soundness_and_conservation():
    rng = random.Random(20240308)
    for _ in range(300):
        vol = rng.choice(VOLUMES)
        n = rng.randint(1, 12)
        parts = tuple(
            (f"p{i:02d}", (rng.uniform(5, 80), rng.uniform(5, 80), rng.uniform(5, 80)))
            for i in range(n)
        )
        req = PackRequest(parts=parts, volume=vol, clearance_mm=2.0)
        outcome = shelf_pack(req)
        placed_ids = set(outcome.placed.order_ids())
        assert placed_ids.isdisjoint(outcome.rejected)
        assert len(placed_ids) + len(outcome.rejected) == n
        assert check_layout(outcome.placed, vol).clear
        footprint = sum(
            p.dims[0] * p.dims[1] for p in outcome.placed.placements
        )
        assert footprint <= vol.l_mm * vol.w_mm + 1e-9
