from __future__ import annotations

import pytest

from printmerge.errors import RejectedCaseError
from printmerge.geometry import check_layout
from printmerge.memory import (
    MemoryCase,
    MemoryStore,
    seed_layout,
    signature_for,
    similarity,
)
from printmerge.model import BuildVolume

GEAR = (24.0, 23.99, 10.0)
VOL = (200.0, 200.0, 200.0)
GEAR_PARTS = [("CL01", GEAR), ("CL02", GEAR), ("CL03", GEAR)]
GEAR_POSITIONS = ((0.0, 0.0, 5.0), (30.0, 0.0, 5.0), (-30.0, 0.0, 5.0))


def gear_case(clearance=2.0, positions=GEAR_POSITIONS, recorded_at="2024-03-01T10:00:00Z"):
    return MemoryCase(
        signature=signature_for(VOL, ("PLA",), GEAR_PARTS),
        device_id="EQ01",
        volume=VOL,
        clearance_mm=clearance,
        final_positions=tuple((GEAR, pos) for pos in positions),
        iterations_used=3,
        template_id="layout_v1",
        recorded_at=recorded_at,
    )


def test_signature_canonical_under_part_order():
    shuffled = [GEAR_PARTS[2], GEAR_PARTS[0], GEAR_PARTS[1]]
    assert signature_for(VOL, ("PLA",), GEAR_PARTS) == signature_for(VOL, ("PLA",), shuffled)
    mixed = [("A", (10.0, 20.0, 5.0)), ("B", (20.0, 10.0, 5.0))]
    assert signature_for(VOL, ("PLA", "ABS"), mixed) == signature_for(
        VOL, ("ABS", "PLA"), list(reversed(mixed))
    )


def test_record_and_retrieve_exact(tmp_path):
    store = MemoryStore(tmp_path / "memory.jsonl")
    case = gear_case()
    case_id = store.record_success(case)
    results = store.retrieve_similar(case.signature, k=3)
    assert results[0][0] == case_id
    assert results[0][1] == case


def test_record_idempotent_on_identical_content(tmp_path):
    store = MemoryStore(tmp_path / "memory.jsonl")
    first = store.record_success(gear_case())
    second = store.record_success(gear_case(recorded_at="2024-03-02T10:00:00Z"))
    assert first == second
    assert len(store) == 1
    assert len((tmp_path / "memory.jsonl").read_text().splitlines()) == 1


def test_colliding_case_rejected(tmp_path):
    store = MemoryStore(tmp_path / "memory.jsonl")
    bad = gear_case(positions=((0, 0, 5.0), (1, 0, 5.0), (2, 0, 5.0)))
    with pytest.raises(RejectedCaseError):
        store.record_success(bad)
    assert len(store) == 0


def test_empty_store_returns_nothing(tmp_path):
    store = MemoryStore(tmp_path / "memory.jsonl")
    assert store.retrieve_similar(gear_case().signature, k=3) == []


def test_scaled_batch_similarity_score(tmp_path):
    store = MemoryStore(tmp_path / "memory.jsonl")
    store.record_success(gear_case())
    scaled = tuple(d * 1.05 for d in GEAR)
    query = signature_for(VOL, ("PLA",), [("X1", scaled), ("X2", scaled), ("X3", scaled)])
    results = store.retrieve_similar(query, k=3)
    assert len(results) == 1
    score = similarity(query, results[0][1].signature)
    # every dimension off by 5% of the stored value, so the mean relative
    # error is 0.05 exactly (up to the 0.1 mm signature rounding)
    assert score == pytest.approx(1.0 / 1.05, abs=2e-3)


def test_dissimilar_batches_excluded(tmp_path):
    store = MemoryStore(tmp_path / "memory.jsonl")
    store.record_success(gear_case())
    other_count = signature_for(VOL, ("PLA",), [("A", GEAR)])
    assert store.retrieve_similar(other_count, k=3) == []
    far = signature_for(VOL, ("PLA",), [("A", (100.0, 100.0, 100.0))] * 3)
    assert store.retrieve_similar(far, k=3) == []


def test_retrieval_orders_by_similarity_then_recency(tmp_path):
    store = MemoryStore(tmp_path / "memory.jsonl")
    exact = gear_case()
    store.record_success(exact)
    scaled_dims = tuple(d * 1.02 for d in GEAR)
    near = MemoryCase(
        signature=signature_for(VOL, ("PLA",), [(p, scaled_dims) for p, _ in GEAR_PARTS]),
        device_id="EQ01",
        volume=VOL,
        clearance_mm=2.0,
        final_positions=tuple(
            (scaled_dims, (x, y, scaled_dims[2] / 2)) for x, y, _z in GEAR_POSITIONS
        ),
        iterations_used=2,
        template_id="layout_v1",
        recorded_at="2024-03-05T10:00:00Z",
    )
    store.record_success(near)
    results = store.retrieve_similar(exact.signature, k=3)
    assert results[0][1] == exact
    assert results[1][1] == near


def test_durable_replay_reconstructs_identical_contents(tmp_path):
    path = tmp_path / "memory.jsonl"
    store = MemoryStore(path)
    store.record_success(gear_case())
    store.record_success(
        gear_case(positions=((0.0, 30.0, 5.0), (30.0, 0.0, 5.0), (-30.0, 0.0, 5.0)))
    )
    replayed = MemoryStore(path)
    assert replayed.case_ids == store.case_ids
    assert [c for _i, c in replayed.retrieve_similar(gear_case().signature, 5)] == [
        c for _i, c in store.retrieve_similar(gear_case().signature, 5)
    ]


def test_corrupt_trailing_line_skipped(tmp_path, caplog):
    path = tmp_path / "memory.jsonl"
    store = MemoryStore(path)
    store.record_success(gear_case())
    with path.open("a") as fh:
        fh.write('{"case_id": "truncated...\n')
    reloaded = MemoryStore(path)
    assert len(reloaded) == 1


def test_every_retrievable_case_passes_recheck(tmp_path):
    store = MemoryStore(tmp_path / "memory.jsonl")
    store.record_success(gear_case())
    from printmerge.memory import case_layout

    for _cid, case in store.retrieve_similar(gear_case().signature, 10):
        assert check_layout(case_layout(case), BuildVolume(*case.volume)).clear


# --- seeding ------------------------------------------------------------------


def test_seed_layout_exact_match(tmp_path):
    store = MemoryStore(tmp_path / "memory.jsonl")
    case = gear_case()
    case_id = store.record_success(case)
    sig = signature_for(VOL, ("PLA",), GEAR_PARTS)
    cases = store.retrieve_similar(sig, 3)
    seeded = seed_layout(sig, cases, GEAR_PARTS, BuildVolume(*VOL), 2.0)
    assert seeded is not None
    layout, used_id = seeded
    assert used_id == case_id
    assert layout.order_ids() == ["CL01", "CL02", "CL03"]
    assert check_layout(layout, BuildVolume(*VOL)).clear


def test_seed_layout_requires_exact_signature(tmp_path):
    store = MemoryStore(tmp_path / "memory.jsonl")
    store.record_success(gear_case())
    scaled = tuple(d * 1.05 for d in GEAR)
    sig = signature_for(VOL, ("PLA",), [("A", scaled)] * 1)
    assert seed_layout(sig, store.retrieve_similar(sig, 3), [("A", scaled)], BuildVolume(*VOL), 2.0) is None


def test_seed_discarded_when_clearance_grows(tmp_path):
    store = MemoryStore(tmp_path / "memory.jsonl")
    # stored at clearance 2: gaps of 30 between 24 mm gears
    store.record_success(gear_case())
    sig = signature_for(VOL, ("PLA",), GEAR_PARTS)
    cases = store.retrieve_similar(sig, 3)
    # replay under clearance 8: 30 < 24 + 8, so the seed must be dropped
    assert seed_layout(sig, cases, GEAR_PARTS, BuildVolume(*VOL), 8.0) is None
