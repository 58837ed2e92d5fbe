"""HTTP facade over the merge engine: intake, fleet registry, run traces,
interventions and a long-poll event feed.

All state lives as JSON documents under the data directory, so constructing
a fresh service over the same directory reproduces the exact pre-restart
view. No endpoint can move a run to Succeeded; only the engine's
checker-gated loop does that.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .agent import MergeEngine, MergeRun, make_planner, run_from_dict, run_to_dict
from .config import ServiceConfig
from .errors import (
    DuplicateIdError,
    RunNotActiveError,
    SchemaError,
    StorageError,
    UnknownRunError,
)
from .geometry import Layout, Placement
from .matching import MatchPolicy, match_orders
from .memory import MemoryStore
from .model import (
    Device,
    Fleet,
    OrderBook,
    WorkOrder,
    device_to_dict,
    load_fleet,
    load_orders,
    parse_order,
    save_fleet,
    save_orders,
)
from .prompting import render_views

logger = logging.getLogger(__name__)

_RUN_ID_RE = re.compile(r"run-(\d+)")


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e}") from e


class ServiceState:
    """Everything behind the API: stores, engine, dispatch and event feed."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.data_dir = Path(config.data_dir)
        self.runs_dir = self.data_dir / "runs"
        self.events_dir = self.data_dir / "events"
        for d in (self.data_dir, self.runs_dir, self.events_dir):
            d.mkdir(parents=True, exist_ok=True)

        self._lock = threading.RLock()
        self._event_cond = threading.Condition()
        self._events: dict[str, list[dict]] = {}
        self.runs: dict[str, MergeRun] = {}
        self.unassigned: list[dict] = []
        self._pending: list[str] = []
        self._pending_since: float | None = None

        self.fleet = self._load_fleet()
        self.orders: dict[str, WorkOrder] = self._load_orders()
        self.memory = MemoryStore(self.data_dir / "memory.jsonl")
        self._load_runs()
        self._load_events()
        self._load_queue_docs()

        self.planner = make_planner(config.agent)
        self.engine = MergeEngine(
            config=config.agent,
            memory=self.memory,
            planner=self.planner,
            on_event=self._on_run_event,
            run_counter_start=self._next_counter(),
        )
        self._ticker: threading.Thread | None = None
        if config.agent.batch_window_seconds:
            self._ticker = threading.Thread(target=self._tick_time_window, daemon=True)
            self._ticker.start()

    # --- loading ------------------------------------------------------------

    def _load_fleet(self) -> Fleet:
        path = self.data_dir / "fleet.json"
        if path.exists():
            return load_fleet(path.read_bytes())
        if self.config.fleet_file:
            fleet = load_fleet(Path(self.config.fleet_file).read_bytes())
            _atomic_write(path, save_fleet(fleet))
            return fleet
        return Fleet(devices=())

    def _load_orders(self) -> dict[str, WorkOrder]:
        path = self.data_dir / "orders.json"
        if not path.exists():
            return {}
        book = load_orders(path.read_bytes())
        return {o.id: o for o in book.orders}

    def _load_runs(self) -> None:
        for path in sorted(self.runs_dir.glob("*.json")):
            try:
                run = run_from_dict(json.loads(path.read_text(encoding="utf-8")))
            except (ValueError, KeyError) as e:
                logger.warning("skipping unreadable run document %s: %s", path, e)
                continue
            self.runs[run.run_id] = run

    def _load_events(self) -> None:
        for path in sorted(self.events_dir.glob("*.jsonl")):
            rows = []
            for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    rows.append(json.loads(line))
                except ValueError as e:
                    logger.warning("skipping corrupt event line %d in %s: %s", lineno, path, e)
            if rows:
                self._events[rows[0]["run_id"]] = rows

    def _load_queue_docs(self) -> None:
        pending_path = self.data_dir / "pending.json"
        if pending_path.exists():
            self._pending = [oid for oid in json.loads(pending_path.read_text()) if oid in self.orders]
            if self._pending:
                self._pending_since = time.monotonic()
        unassigned_path = self.data_dir / "unassigned.json"
        if unassigned_path.exists():
            self.unassigned = json.loads(unassigned_path.read_text())

    def _next_counter(self) -> int:
        highest = 0
        for run_id in self.runs:
            m = _RUN_ID_RE.fullmatch(run_id)
            if m:
                highest = max(highest, int(m.group(1)))
        return highest + 1

    # --- persistence ----------------------------------------------------------

    def _persist_orders(self) -> None:
        book = OrderBook(orders=tuple(self.orders.values()))
        _atomic_write(self.data_dir / "orders.json", save_orders(book))

    def _persist_fleet(self) -> None:
        _atomic_write(self.data_dir / "fleet.json", save_fleet(self.fleet))

    def _persist_run(self, run: MergeRun) -> None:
        doc = json.dumps(run_to_dict(run), indent=2)
        _atomic_write(self.runs_dir / f"{run.run_id}.json", doc.encode("utf-8"))

    def _persist_queue_docs(self) -> None:
        _atomic_write(self.data_dir / "pending.json", json.dumps(self._pending).encode())
        _atomic_write(self.data_dir / "unassigned.json", json.dumps(self.unassigned).encode())

    # --- engine events ----------------------------------------------------------

    def _on_run_event(self, run: MergeRun, kind: str, payload: dict) -> None:
        with self._event_cond:
            self.runs[run.run_id] = run
            rows = self._events.setdefault(run.run_id, [])
            row = {
                "run_id": run.run_id,
                "seq": len(rows) + 1,
                "kind": kind,
                "payload": payload,
            }
            rows.append(row)
            try:
                with (self.events_dir / f"{run.run_id}.jsonl").open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(row) + "\n")
                self._persist_run(run)
            except (OSError, StorageError) as e:
                logger.warning("event persistence failed for %s: %s", run.run_id, e)
            self._event_cond.notify_all()

    # --- intake and dispatch ------------------------------------------------------

    def submit_order(self, order: WorkOrder) -> None:
        with self._lock:
            if order.id in self.orders:
                raise DuplicateIdError("$.id", f"order id {order.id!r} already exists")
            self.orders[order.id] = order
            self._persist_orders()
            self._pending.append(order.id)
            if self._pending_since is None:
                self._pending_since = time.monotonic()
            self._persist_queue_docs()
            should_dispatch = len(self._pending) >= max(1, self.config.agent.batch_window_count)
        if should_dispatch:
            self.dispatch_pending()

    def dispatch_pending(self) -> None:
        threading.Thread(target=self._dispatch_worker, daemon=True).start()

    def _dispatch_worker(self) -> None:
        while True:
            with self._lock:
                ids = [oid for oid in self._pending if oid in self.orders]
                self._pending.clear()
                self._pending_since = None
                self._persist_queue_docs()
                fleet = self.fleet
            if not ids:
                return
            book = OrderBook(orders=tuple(self.orders[oid] for oid in ids))
            result = match_orders(book, fleet, MatchPolicy())
            with self._lock:
                for oid, reason in result.unassigned:
                    self.unassigned.append({"order_id": oid, "reason": reason})
                self._persist_queue_docs()
            requeued: list[str] = []
            threads = []
            for assignment in result.assignments:
                device = fleet.get(assignment.device_id)
                batch = [self.orders[oid] for oid in assignment.order_ids]
                t = threading.Thread(
                    target=self._run_batch, args=(batch, device, requeued), daemon=True
                )
                threads.append(t)
                t.start()
            for t in threads:
                t.join()
            with self._lock:
                if requeued:
                    self._pending.extend(requeued)
                    self._pending_since = time.monotonic()
                    self._persist_queue_docs()
                if not self._pending:
                    return

    def _run_batch(self, batch: list[WorkOrder], device: Device, requeued: list[str]) -> None:
        while batch:
            run = self.engine.run_merge(batch, device)
            if run.status != "NeedsSplit":
                return
            dropped = batch.pop()
            if batch:
                with self._lock:
                    requeued.append(dropped.id)
            else:
                with self._lock:
                    self.unassigned.append({"order_id": dropped.id, "reason": "overflow"})
                    self._persist_queue_docs()

    def _tick_time_window(self) -> None:
        window = self.config.agent.batch_window_seconds
        while True:
            time.sleep(min(0.25, window / 2))
            with self._lock:
                due = (
                    self._pending
                    and self._pending_since is not None
                    and time.monotonic() - self._pending_since >= window
                )
            if due:
                self.dispatch_pending()

    # --- queries ------------------------------------------------------------------

    def set_device_status(self, device_id: str, status: str) -> Device:
        with self._lock:
            devices = []
            updated = None
            for d in self.fleet.devices:
                if d.id == device_id:
                    updated = Device(
                        id=d.id,
                        functional=d.functional,
                        performance=d.performance,
                        volume=d.volume,
                        status=status,
                    )
                    devices.append(updated)
                else:
                    devices.append(d)
            if updated is None:
                raise KeyError(device_id)
            self.fleet = Fleet(devices=tuple(devices))
            self._persist_fleet()
            return updated

    def events_after(self, run_id: str, after: int, timeout_s: float) -> list[dict]:
        deadline = time.monotonic() + timeout_s
        with self._event_cond:
            while True:
                rows = [r for r in self._events.get(run_id, []) if r["seq"] > after]
                if rows:
                    return rows
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return []
                self._event_cond.wait(timeout=remaining)

    def run_detail(self, run_id: str) -> dict:
        run = self.runs.get(run_id)
        if run is None:
            raise UnknownRunError(run_id)
        doc = run_to_dict(run)
        for rec, rec_doc in zip(run.iterations, doc["iterations"]):
            rec_doc["views"] = self._views_for(run, rec.positions)
        doc["final_views"] = (
            self._views_for(run, tuple(p.center for p in run.final_layout.placements))
            if run.final_layout is not None
            else []
        )
        return doc

    def _views_for(self, run: MergeRun, positions) -> list[dict]:
        if positions is None:
            return []
        placements = tuple(
            Placement(order_id=pid, center=pos, dims=dims)
            for (pid, dims), pos in zip(run.parts, positions)
        )
        layout = Layout(
            device_id=run.device_id, placements=placements, clearance_mm=run.clearance_mm
        )
        return [
            {"label": label, "data_url": f"data:image/png;base64,{b64}"}
            for label, b64 in render_views(layout, run.volume)
        ]


def _error(status: int, code: str, message: str, path: str | None = None) -> JSONResponse:
    body = {"error": {"code": code, "message": message}}
    if path is not None:
        body["error"]["path"] = path
    return JSONResponse(status_code=status, content=body)


def create_app(config: ServiceConfig) -> FastAPI:
    state = ServiceState(config)
    app = FastAPI(title="printmerge service")
    app.state.service = state

    @app.exception_handler(StorageError)
    async def storage_error(_req, exc):
        return _error(503, "storage", str(exc))

    @app.post("/api/orders", status_code=201)
    async def post_order(request: Request):
        try:
            doc = json.loads(await request.body())
            order = parse_order(doc, "$")
        except DuplicateIdError as e:
            return _error(409, "duplicate_id", str(e), e.path)
        except SchemaError as e:
            return _error(422, "schema", str(e), e.path)
        except ValueError as e:
            return _error(422, "schema", str(e))
        try:
            state.submit_order(order)
        except DuplicateIdError as e:
            return _error(409, "duplicate_id", str(e), e.path)
        return {"id": order.id}

    @app.get("/api/devices")
    async def get_devices():
        return {"devices": [device_to_dict(d) for d in state.fleet.devices]}

    @app.put("/api/devices/{device_id}/status")
    async def put_device_status(device_id: str, request: Request):
        try:
            doc = json.loads(await request.body())
        except ValueError as e:
            return _error(422, "schema", f"not well-formed JSON: {e}")
        status = doc.get("status") if isinstance(doc, dict) else None
        if status not in ("Idle", "Printing", "Offline"):
            return _error(422, "schema", "status must be Idle, Printing or Offline", "$.status")
        try:
            device = state.set_device_status(device_id, status)
        except KeyError:
            return _error(404, "unknown_device", f"no device {device_id!r}")
        return device_to_dict(device)

    @app.post("/api/match/preview")
    async def match_preview(request: Request):
        try:
            book = load_orders(await request.body())
        except SchemaError as e:
            return _error(422, "schema", str(e), e.path)
        result = match_orders(book, state.fleet, MatchPolicy())
        return result.to_dict()

    @app.get("/api/runs")
    async def get_runs():
        runs = sorted(state.runs.values(), key=lambda r: r.run_id)
        return {"runs": [run_to_dict(r) for r in runs]}

    @app.get("/api/runs/{run_id}")
    async def get_run(run_id: str):
        try:
            return state.run_detail(run_id)
        except UnknownRunError:
            return _error(404, "unknown_run", f"no run {run_id!r}")

    @app.post("/api/runs/{run_id}/intervene", status_code=202)
    async def intervene(run_id: str, request: Request):
        try:
            doc = json.loads(await request.body())
        except ValueError as e:
            return _error(422, "schema", f"not well-formed JSON: {e}")
        instruction = doc.get("instruction") if isinstance(doc, dict) else None
        if not isinstance(instruction, str) or not instruction.strip():
            return _error(422, "schema", "instruction must be a non-empty string", "$.instruction")
        try:
            state.engine.inject_intervention(run_id, instruction)
        except UnknownRunError:
            if run_id in state.runs:
                return _error(409, "run_not_active", f"run {run_id} is no longer active")
            return _error(404, "unknown_run", f"no run {run_id!r}")
        except RunNotActiveError as e:
            return _error(409, "run_not_active", str(e))
        return {"queued": True}

    @app.get("/api/runs/{run_id}/events")
    def get_events(run_id: str, after: int = 0, timeout_s: float | None = None):
        # sync endpoint: FastAPI runs it in a worker thread, so the long poll
        # can block without stalling the event loop
        if run_id not in state.runs and run_id not in state._events:
            return _error(404, "unknown_run", f"no run {run_id!r}")
        wait = config.poll_timeout_s if timeout_s is None else min(timeout_s, config.poll_timeout_s)
        rows = state.events_after(run_id, after, wait)
        return {"events": rows}

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
