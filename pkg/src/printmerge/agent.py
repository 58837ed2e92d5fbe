"""Merge-run orchestration: propose, check, refine, remember.

A run takes one batch on one device through the refinement loop. The
interference checker is the only authority for success: whatever a planner
answers, the run succeeds only when the checked layout is clear, and every
applied position has its z forced back to h/2. Successful layouts are
recorded to memory; an exact repeat batch replays the remembered positions
without calling the planner at all.
"""

from __future__ import annotations

import logging
import threading
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

from .errors import (
    CountMismatchError,
    NonFiniteError,
    ParseError,
    PlannerOverflowError,
    PlannerTransportError,
    RejectedCaseError,
    RunNotActiveError,
    StorageError,
    UnknownRunError,
)
from .geometry import InterferenceReport, Layout, Placement, check_layout
from .matching import MatchPolicy, match_orders
from .memory import (
    DEFAULT_RETRIEVAL_K,
    MemoryCase,
    MemoryStore,
    seed_layout,
    signature_for,
)
from .model import BuildVolume, Device, Fleet, OrderBook, WorkOrder, format_timestamp
from .packing import PackRequest, initial_positions
from .planners import HeuristicPlanner, Planner, RemotePlanner, ScriptedPlanner
from .prompting import DEFAULT_TEMPLATE_ID, build_prompt, parse_positions

logger = logging.getLogger(__name__)

RUNNING = "Running"
SUCCEEDED = "Succeeded"
FAILED = "Failed"
NEEDS_SPLIT = "NeedsSplit"

SEED_SOURCE = "seed"

EVENT_STATUS = "StatusChanged"
EVENT_ITERATION = "IterationCompleted"
EVENT_INTERVENTION = "InterventionQueued"

_REPAIR_SUFFIX = "Reformat exactly as: positions = [...]"


@dataclass(frozen=True)
class AgentConfig:
    clearance_mm: float = 2.0
    max_iterations: int = 10
    memory_k: int = DEFAULT_RETRIEVAL_K
    include_images: bool = True
    template_id: str = DEFAULT_TEMPLATE_ID
    batch_window_count: int = 1
    batch_window_seconds: float | None = None
    planner_kind: str = "heuristic"
    planner_endpoint: str | None = None
    planner_model: str | None = None
    planner_api_key: str | None = None
    scripted_path: str | None = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.clearance_mm < 0:
            raise ValueError("clearance_mm must be non-negative")


def make_planner(config: AgentConfig) -> Planner:
    if config.planner_kind == "heuristic":
        return HeuristicPlanner()
    if config.planner_kind == "scripted":
        if not config.scripted_path:
            raise ValueError("scripted planner needs scripted_path")
        return ScriptedPlanner.from_file(config.scripted_path)
    if config.planner_kind == "remote":
        if not config.planner_endpoint or not config.planner_model:
            raise ValueError("remote planner needs planner_endpoint and planner_model")
        return RemotePlanner(
            endpoint=config.planner_endpoint,
            model=config.planner_model,
            api_key=config.planner_api_key,
        )
    raise ValueError(f"unknown planner kind {config.planner_kind!r}")


@dataclass
class IterationRecord:
    index: int
    source: str
    positions: tuple[tuple[float, float, float], ...] | None
    report: InterferenceReport
    template_id: str
    memory_case_ids: tuple[str, ...] = ()
    intervention: str | None = None
    images: tuple[str, ...] = ()
    parse_error: str | None = None


@dataclass
class MergeRun:
    run_id: str
    device_id: str
    batch: tuple[str, ...]
    parts: tuple[tuple[str, tuple[float, float, float]], ...]
    volume: BuildVolume
    clearance_mm: float
    planner_kind: str
    status: str = RUNNING
    iterations: list[IterationRecord] = field(default_factory=list)
    initial_report: InterferenceReport | None = None
    final_layout: Layout | None = None
    failure_cause: str | None = None
    overflow: tuple[str, ...] = ()
    planner_calls: int = 0
    created_at: str = ""


@dataclass
class StreamOutcome:
    runs: list[MergeRun]
    unassigned: list[tuple[str, str]]


class _RunHandle:
    def __init__(self, run: MergeRun):
        self.run = run
        self.lock = threading.Lock()
        self.mailbox: list[str] = []


EventCallback = Callable[[MergeRun, str, dict], None]


class MergeEngine:
    """Owns run state, device serialization and the memory store binding."""

    def __init__(
        self,
        config: AgentConfig | None = None,
        memory: MemoryStore | None = None,
        planner: Planner | None = None,
        on_event: EventCallback | None = None,
        run_counter_start: int = 1,
    ):
        self.config = config or AgentConfig()
        self.memory = memory
        self.planner = planner
        self._on_event = on_event
        self._runs: dict[str, _RunHandle] = {}
        self._registry_lock = threading.Lock()
        self._device_locks: dict[str, threading.Lock] = {}
        self._counter = run_counter_start

    # --- registry ---------------------------------------------------------

    def _next_run_id(self) -> str:
        with self._registry_lock:
            run_id = f"run-{self._counter:04d}"
            self._counter += 1
            return run_id

    def _device_lock(self, device_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._device_locks.setdefault(device_id, threading.Lock())

    def get_run(self, run_id: str) -> MergeRun:
        handle = self._runs.get(run_id)
        if handle is None:
            raise UnknownRunError(run_id)
        return handle.run

    @property
    def runs(self) -> list[MergeRun]:
        return [h.run for h in self._runs.values()]

    def _emit(self, run: MergeRun, kind: str, payload: dict) -> None:
        if self._on_event is not None:
            self._on_event(run, kind, payload)

    # --- interventions ----------------------------------------------------

    def inject_intervention(self, run_id: str, instruction: str) -> None:
        """Queue an operator instruction for the run's next planner prompt."""
        handle = self._runs.get(run_id)
        if handle is None:
            raise UnknownRunError(run_id)
        with handle.lock:
            if handle.run.status != RUNNING:
                raise RunNotActiveError(f"run {run_id} is {handle.run.status}")
            handle.mailbox.append(instruction)
        self._emit(handle.run, EVENT_INTERVENTION, {"instruction": instruction})

    def _drain_mailbox(self, handle: _RunHandle) -> str | None:
        with handle.lock:
            if not handle.mailbox:
                return None
            joined = "\n".join(handle.mailbox)
            handle.mailbox.clear()
        return joined

    # --- the merge loop ---------------------------------------------------

    def run_merge(
        self,
        batch: list[WorkOrder],
        device: Device,
        planner: Planner | None = None,
    ) -> MergeRun:
        """Drive one batch on one device until clear, split or out of budget."""
        planner = planner or self.planner
        if planner is None:
            raise ValueError("no planner configured")
        cfg = self.config
        parts = tuple((o.id, o.spatial.dims) for o in batch)
        run = MergeRun(
            run_id=self._next_run_id(),
            device_id=device.id,
            batch=tuple(o.id for o in batch),
            parts=parts,
            volume=device.volume,
            clearance_mm=cfg.clearance_mm,
            planner_kind=planner.kind,
            created_at=format_timestamp(datetime.now(timezone.utc)),
        )
        handle = _RunHandle(run)
        with self._registry_lock:
            self._runs[run.run_id] = handle

        with self._device_lock(device.id):
            self._emit(run, EVENT_STATUS, {"status": RUNNING})
            try:
                self._loop(handle, device, planner)
            except Exception:
                with handle.lock:
                    run.status = FAILED
                    run.failure_cause = "internal error"
                self._emit(run, EVENT_STATUS, {"status": run.status})
                raise
        return run

    def _loop(self, handle: _RunHandle, device: Device, planner: Planner) -> None:
        run = handle.run
        cfg = self.config
        req = PackRequest(parts=run.parts, volume=device.volume, clearance_mm=cfg.clearance_mm)
        defaults = replace(initial_positions(req), device_id=device.id)
        sig = signature_for(device.volume.dims, device.functional.materials, run.parts)

        mem_entries = self.memory.retrieve_similar(sig, cfg.memory_k) if self.memory else []
        mem_ids = tuple(cid for cid, _case in mem_entries)

        seeded = None
        if self.memory is not None:
            seeded = seed_layout(sig, mem_entries, list(run.parts), device.volume, cfg.clearance_mm)
        if seeded is not None:
            layout, case_id = seeded
            layout = replace(layout, device_id=device.id)
            report = check_layout(layout, device.volume)
            self._record_iteration(
                handle,
                IterationRecord(
                    index=1,
                    source=SEED_SOURCE,
                    positions=tuple(p.center for p in layout.placements),
                    report=report,
                    template_id=cfg.template_id,
                    memory_case_ids=(case_id,),
                ),
            )
            self._finish_success(handle, layout, sig)
            return

        current = defaults
        report = check_layout(current, device.volume)
        run.initial_report = report
        if report.clear:
            self._finish_success(handle, current, sig)
            return

        repair_raw: str | None = None
        for index in range(1, cfg.max_iterations + 1):
            intervention = self._drain_mailbox(handle)
            bundle = build_prompt(
                current,
                defaults,
                device.volume,
                report,
                memory_examples=[case for _cid, case in mem_entries],
                intervention=intervention,
                with_images=cfg.include_images,
                template_id=cfg.template_id,
            )
            if repair_raw is not None:
                bundle = replace(bundle, user_text=_repair_text(repair_raw, intervention))
            try:
                raw = planner.propose(bundle)
            except PlannerOverflowError as e:
                with handle.lock:
                    run.status = NEEDS_SPLIT
                    run.overflow = tuple(e.rejected_ids)
                self._emit(run, EVENT_STATUS, {"status": run.status})
                return
            except PlannerTransportError as e:
                with handle.lock:
                    run.status = FAILED
                    run.failure_cause = str(e)
                self._emit(run, EVENT_STATUS, {"status": run.status})
                return
            run.planner_calls += 1
            try:
                answer = parse_positions(raw, len(run.parts))
            except (ParseError, CountMismatchError, NonFiniteError) as e:
                repair_raw = raw
                self._record_iteration(
                    handle,
                    IterationRecord(
                        index=index,
                        source=planner.kind,
                        positions=None,
                        report=report,
                        template_id=cfg.template_id,
                        memory_case_ids=mem_ids,
                        intervention=intervention,
                        parse_error=str(e),
                    ),
                )
                continue
            repair_raw = None
            # z is enforced, never trusted: every part stays bed-resting
            placements = tuple(
                Placement(order_id=pid, center=(x, y, dims[2] / 2.0), dims=dims)
                for (pid, dims), (x, y, _z) in zip(run.parts, answer.positions)
            )
            current = Layout(
                device_id=device.id, placements=placements, clearance_mm=cfg.clearance_mm
            )
            report = check_layout(current, device.volume)
            self._record_iteration(
                handle,
                IterationRecord(
                    index=index,
                    source=planner.kind,
                    positions=tuple(p.center for p in placements),
                    report=report,
                    template_id=cfg.template_id,
                    memory_case_ids=mem_ids,
                    intervention=intervention,
                    images=tuple(label for label, _ in bundle.images),
                ),
            )
            if report.clear:
                self._finish_success(handle, current, sig)
                return

        with handle.lock:
            run.status = FAILED
            run.failure_cause = (
                f"no interference-free layout within {cfg.max_iterations} iterations"
            )
        self._emit(run, EVENT_STATUS, {"status": run.status})

    def _record_iteration(self, handle: _RunHandle, record: IterationRecord) -> None:
        with handle.lock:
            handle.run.iterations.append(record)
        self._emit(handle.run, EVENT_ITERATION, {"index": record.index})

    def _finish_success(self, handle: _RunHandle, layout: Layout, sig) -> None:
        run = handle.run
        with handle.lock:
            run.final_layout = layout
            run.status = SUCCEEDED
        if self.memory is not None:
            case = MemoryCase(
                signature=sig,
                device_id=run.device_id,
                volume=run.volume.dims,
                clearance_mm=run.clearance_mm,
                final_positions=tuple((p.dims, p.center) for p in layout.placements),
                iterations_used=max(1, len(run.iterations)),
                template_id=self.config.template_id,
                recorded_at=format_timestamp(datetime.now(timezone.utc)),
            )
            try:
                self.memory.record_success(case)
            except (StorageError, RejectedCaseError) as e:
                logger.warning("could not record memory case for %s: %s", run.run_id, e)
        self._emit(run, EVENT_STATUS, {"status": run.status})

    # --- order stream -----------------------------------------------------

    def process_order_stream(
        self,
        orders: Iterable[WorkOrder],
        fleet: Fleet,
        planner: Planner | None = None,
        policy: MatchPolicy = MatchPolicy(),
    ) -> StreamOutcome:
        """Buffer arrivals, match per window, run each batch, re-batch splits.

        Every input order ends in exactly one terminal (Succeeded or Failed)
        run or in the unassigned list; NeedsSplit runs stay in the trace as
        history of the re-batching.
        """
        outcome = StreamOutcome(runs=[], unassigned=[])
        pending: list[WorkOrder] = []
        window = max(1, self.config.batch_window_count)
        for order in orders:
            pending.append(order)
            if len(pending) >= window:
                self._dispatch_wave(pending, fleet, planner, policy, outcome)
        while pending:
            self._dispatch_wave(pending, fleet, planner, policy, outcome)
        return outcome

    def _dispatch_wave(
        self,
        pending: list[WorkOrder],
        fleet: Fleet,
        planner: Planner | None,
        policy: MatchPolicy,
        outcome: StreamOutcome,
    ) -> None:
        book = OrderBook(orders=tuple(pending))
        by_id = {o.id: o for o in book.orders}
        pending.clear()
        result = match_orders(book, fleet, policy)
        outcome.unassigned.extend(result.unassigned)
        for assignment in result.assignments:
            device = fleet.get(assignment.device_id)
            batch = [by_id[oid] for oid in assignment.order_ids]
            while batch:
                run = self.run_merge(batch, device, planner)
                outcome.runs.append(run)
                if run.status != NEEDS_SPLIT:
                    break
                dropped = batch.pop()
                if batch:
                    pending.append(dropped)
                else:
                    outcome.unassigned.append((dropped.id, "overflow"))


def _repair_text(original_answer: str, intervention: str | None) -> str:
    text = f"{original_answer}\n\n{_REPAIR_SUFFIX}"
    if intervention:
        text += f"\n\nOPERATOR INSTRUCTION: {intervention}"
    return text


def run_merge(
    batch: list[WorkOrder],
    device: Device,
    planner: Planner,
    config: AgentConfig | None = None,
    memory: MemoryStore | None = None,
) -> MergeRun:
    """One-shot merge run without managing an engine."""
    return MergeEngine(config=config, memory=memory).run_merge(batch, device, planner)


# --- trace serialization -------------------------------------------------------


def report_to_dict(report: InterferenceReport | None) -> dict | None:
    return None if report is None else report.to_dict()


def run_to_dict(run: MergeRun, include_volatile: bool = True) -> dict:
    doc = {
        "run_id": run.run_id,
        "device_id": run.device_id,
        "batch": list(run.batch),
        "parts": [{"order_id": pid, "dims": list(dims)} for pid, dims in run.parts],
        "volume": {"l_mm": run.volume.l_mm, "w_mm": run.volume.w_mm, "h_mm": run.volume.h_mm},
        "clearance_mm": run.clearance_mm,
        "planner_kind": run.planner_kind,
        "status": run.status,
        "planner_calls": run.planner_calls,
        "initial_report": report_to_dict(run.initial_report),
        "iterations": [
            {
                "index": rec.index,
                "source": rec.source,
                "positions": None if rec.positions is None else [list(p) for p in rec.positions],
                "report": report_to_dict(rec.report),
                "template_id": rec.template_id,
                "memory_case_ids": list(rec.memory_case_ids),
                "intervention": rec.intervention,
                "images": list(rec.images),
                "parse_error": rec.parse_error,
            }
            for rec in run.iterations
        ],
        "final_positions": None
        if run.final_layout is None
        else [list(p.center) for p in run.final_layout.placements],
        "failure_cause": run.failure_cause,
        "overflow": list(run.overflow),
    }
    if include_volatile:
        doc["created_at"] = run.created_at
    return doc


def _report_from_dict(doc: dict | None) -> InterferenceReport | None:
    if doc is None:
        return None
    from .geometry import InterferenceFinding

    findings = tuple(
        InterferenceFinding(
            kind=f["kind"], subjects=tuple(f["subjects"]), penetration_mm=f["penetration_mm"]
        )
        for f in doc["findings"]
    )
    return InterferenceReport(findings=findings, clear=doc["clear"], text=doc["text"])


def run_from_dict(doc: dict) -> MergeRun:
    parts = tuple((p["order_id"], tuple(p["dims"])) for p in doc["parts"])
    volume = BuildVolume(doc["volume"]["l_mm"], doc["volume"]["w_mm"], doc["volume"]["h_mm"])
    run = MergeRun(
        run_id=doc["run_id"],
        device_id=doc["device_id"],
        batch=tuple(doc["batch"]),
        parts=parts,
        volume=volume,
        clearance_mm=doc["clearance_mm"],
        planner_kind=doc["planner_kind"],
        status=doc["status"],
        planner_calls=doc["planner_calls"],
        initial_report=_report_from_dict(doc.get("initial_report")),
        failure_cause=doc.get("failure_cause"),
        overflow=tuple(doc.get("overflow", ())),
        created_at=doc.get("created_at", ""),
    )
    for rec in doc["iterations"]:
        run.iterations.append(
            IterationRecord(
                index=rec["index"],
                source=rec["source"],
                positions=None
                if rec["positions"] is None
                else tuple(tuple(p) for p in rec["positions"]),
                report=_report_from_dict(rec["report"]),
                template_id=rec["template_id"],
                memory_case_ids=tuple(rec["memory_case_ids"]),
                intervention=rec["intervention"],
                images=tuple(rec["images"]),
                parse_error=rec["parse_error"],
            )
        )
    if doc.get("final_positions") is not None:
        placements = tuple(
            Placement(order_id=pid, center=tuple(pos), dims=dims)
            for (pid, dims), pos in zip(parts, doc["final_positions"])
        )
        run.final_layout = Layout(
            device_id=run.device_id, placements=placements, clearance_mm=run.clearance_mm
        )
    return run
