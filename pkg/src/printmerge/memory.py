"""Append-only store of successful merge layouts.

Each stored case keys a batch by its geometric signature (device volume
class, material set, part dimension multiset) and records the final
positions that passed the interference check. New batches consult the store
to seed prompts and, on an exact signature match, to skip planning
entirely. The log is JSON lines: one case per line, crash-safe, replayable.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import RejectedCaseError, StorageError
from .geometry import Layout, Placement, check_layout
from .model import BuildVolume

logger = logging.getLogger(__name__)

SIMILARITY_THRESHOLD = 0.5
DEFAULT_RETRIEVAL_K = 3

Dims = tuple[float, float, float]
Part = tuple[str, Dims]


@dataclass(frozen=True)
class BatchSignature:
    device_dims: tuple[int, int, int]
    device_materials: tuple[str, ...]
    part_multiset: tuple[Dims, ...]

    def to_dict(self) -> dict:
        return {
            "device_dims": list(self.device_dims),
            "device_materials": list(self.device_materials),
            "part_multiset": [list(p) for p in self.part_multiset],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BatchSignature":
        return cls(
            device_dims=tuple(doc["device_dims"]),
            device_materials=tuple(doc["device_materials"]),
            part_multiset=tuple(tuple(p) for p in doc["part_multiset"]),
        )


def signature_for(volume_dims: Dims, materials, parts) -> BatchSignature:
    """Canonical batch key: volume to 1 mm, part dims to 0.1 mm, sorted."""
    return BatchSignature(
        device_dims=tuple(int(round(d)) for d in volume_dims),
        device_materials=tuple(sorted(set(materials))),
        part_multiset=tuple(
            sorted(tuple(round(float(d), 1) for d in dims) for _pid, dims in parts)
        ),
    )


@dataclass(frozen=True)
class MemoryCase:
    signature: BatchSignature
    device_id: str
    volume: Dims
    clearance_mm: float
    final_positions: tuple[tuple[Dims, Dims], ...]  # (part dims, center position)
    iterations_used: int
    template_id: str
    recorded_at: str

    def __post_init__(self):
        if self.iterations_used < 1:
            raise ValueError("iterations_used must be positive")

    def to_dict(self) -> dict:
        return {
            "signature": self.signature.to_dict(),
            "device_id": self.device_id,
            "volume": list(self.volume),
            "clearance_mm": self.clearance_mm,
            "final_positions": [
                {"dims": list(d), "position": list(p)} for d, p in self.final_positions
            ],
            "iterations_used": self.iterations_used,
            "template_id": self.template_id,
            "recorded_at": self.recorded_at,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MemoryCase":
        return cls(
            signature=BatchSignature.from_dict(doc["signature"]),
            device_id=doc["device_id"],
            volume=tuple(doc["volume"]),
            clearance_mm=float(doc["clearance_mm"]),
            final_positions=tuple(
                (tuple(e["dims"]), tuple(e["position"])) for e in doc["final_positions"]
            ),
            iterations_used=int(doc["iterations_used"]),
            template_id=doc["template_id"],
            recorded_at=doc["recorded_at"],
        )


def case_layout(case: MemoryCase) -> Layout:
    placements = tuple(
        Placement(order_id=f"part{i + 1}", center=pos, dims=dims)
        for i, (dims, pos) in enumerate(case.final_positions)
    )
    return Layout(device_id=case.device_id, placements=placements, clearance_mm=case.clearance_mm)


def case_content_id(case: MemoryCase) -> str:
    """Content hash over the solution itself; telemetry fields excluded so a
    re-derived identical layout deduplicates."""
    content = {
        "signature": case.signature.to_dict(),
        "device_id": case.device_id,
        "volume": list(case.volume),
        "clearance_mm": case.clearance_mm,
        "final_positions": [
            {"dims": list(d), "position": list(p)} for d, p in case.final_positions
        ],
    }
    digest = hashlib.sha256(json.dumps(content, sort_keys=True).encode("utf-8"))
    return digest.hexdigest()[:16]


def similarity(query: BatchSignature, stored: BatchSignature) -> float:
    """1.0 on exact signature match; otherwise a dimension-distance score for
    equal part counts, 0.0 for anything else."""
    if query == stored:
        return 1.0
    if len(query.part_multiset) != len(stored.part_multiset):
        return 0.0
    errors = []
    for q, s in zip(query.part_multiset, stored.part_multiset):
        for qa, sa in zip(q, s):
            errors.append(abs(qa - sa) / sa)
    mre = sum(errors) / len(errors) if errors else 0.0
    return 1.0 / (1.0 + mre)


class MemoryStore:
    """Single-writer JSON-lines case log; readers get consistent snapshots."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._cases: list[tuple[str, MemoryCase]] = []
        self._ids: set[str] = set()
        self._load()

    def _load(self) -> None:
        if not self.path.exists():
            return
        try:
            raw = self.path.read_text(encoding="utf-8")
        except OSError as e:
            raise StorageError(f"cannot read memory log {self.path}: {e}") from e
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                case = MemoryCase.from_dict(doc["case"])
                case_id = doc["case_id"]
            except (ValueError, KeyError, TypeError) as e:
                logger.warning("skipping corrupt memory log line %d in %s: %s", lineno, self.path, e)
                continue
            if case_id not in self._ids:
                self._cases.append((case_id, case))
                self._ids.add(case_id)

    def __len__(self) -> int:
        return len(self._cases)

    @property
    def case_ids(self) -> list[str]:
        return [cid for cid, _ in self._cases]

    def record_success(self, case: MemoryCase) -> str:
        """Store a verified case; idempotent on identical solution content."""
        report = check_layout(case_layout(case), BuildVolume(*case.volume))
        if not report.clear:
            raise RejectedCaseError(f"case layout fails interference re-check: {report.text}")
        case_id = case_content_id(case)
        with self._lock:
            if case_id in self._ids:
                return case_id
            line = json.dumps({"case_id": case_id, "case": case.to_dict()}, sort_keys=True)
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
                    fh.flush()
            except OSError as e:
                raise StorageError(f"cannot append to memory log {self.path}: {e}") from e
            self._cases.append((case_id, case))
            self._ids.add(case_id)
        return case_id

    def retrieve_similar(self, sig: BatchSignature, k: int = DEFAULT_RETRIEVAL_K) -> list[tuple[str, MemoryCase]]:
        """Up to k (case_id, case) pairs, most similar first, recency breaking ties."""
        if k <= 0:
            return []
        with self._lock:
            scored = [
                (similarity(sig, case.signature), idx, cid, case)
                for idx, (cid, case) in enumerate(self._cases)
            ]
        scored = [s for s in scored if s[0] >= SIMILARITY_THRESHOLD]
        scored.sort(key=lambda s: (-s[0], -s[1]))
        return [(cid, case) for _score, _idx, cid, case in scored[:k]]


def seed_layout(
    sig: BatchSignature,
    cases: list[tuple[str, MemoryCase]],
    parts: list[Part],
    volume: BuildVolume,
    clearance_mm: float,
) -> tuple[Layout, str] | None:
    """Replay the best case's positions onto a new batch, or None.

    Only an exact signature match qualifies; parts are matched to recorded
    positions by sorted dimensions. The replayed layout is re-checked under
    the configured clearance and discarded if it no longer passes.
    """
    exact = next((entry for entry in cases if entry[1].signature == sig), None)
    if exact is None:
        return None
    case_id, case = exact
    if len(case.final_positions) != len(parts):
        return None
    by_dims_parts = sorted(
        parts, key=lambda p: (tuple(round(float(d), 1) for d in p[1]), p[0])
    )
    by_dims_case = sorted(case.final_positions, key=lambda fp: tuple(round(d, 1) for d in fp[0]))
    centers = {
        pid: pos for (pid, _dims), (_cdims, pos) in zip(by_dims_parts, by_dims_case)
    }
    placements = tuple(
        Placement(order_id=pid, center=centers[pid], dims=dims) for pid, dims in parts
    )
    layout = Layout(device_id=case.device_id, placements=placements, clearance_mm=clearance_mm)
    if not check_layout(layout, volume).clear:
        return None
    return layout, case_id
