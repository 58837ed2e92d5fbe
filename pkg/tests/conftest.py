from __future__ import annotations

from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from printmerge.model import (
    BuildVolume,
    Device,
    DeviceFunctional,
    DevicePerformance,
    OrderSpatial,
    WorkOrder,
    load_fleet,
    load_orders,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for outcome in ("passed", "failed"):
        for report in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" in report.nodeid:
                name = report.nodeid.split("::")[-1]
                lines.append((name, outcome.upper()))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, outcome in sorted(lines):
            terminalreporter.write_line(f"{outcome}: {name}")

T0 = datetime(2024, 3, 1, 8, 0, tzinfo=timezone.utc)


@pytest.fixture(scope="session")
def fleet():
    return load_fleet(FIXTURES.joinpath("fleet.json").read_bytes())


@pytest.fixture(scope="session")
def book():
    return load_orders(FIXTURES.joinpath("orders.json").read_bytes())


def make_order(
    order_id: str,
    dims: tuple[float, float, float],
    material: str = "PLA",
    accuracy: float = 0.2,
    expected_offset_h: float = 24.0,
    m_type_req: str | None = None,
) -> WorkOrder:
    return WorkOrder(
        id=order_id,
        spatial=OrderSpatial(*dims),
        material=material,
        accuracy_req_mm=accuracy,
        start_time=T0,
        expected_time=T0 + timedelta(hours=expected_offset_h),
        m_type_req=m_type_req,
    )


def make_device(
    device_id: str,
    volume: tuple[float, float, float],
    materials: tuple[str, ...] = ("PLA",),
    m_type: str = "FDM",
    accuracy: float = 0.1,
    status: str = "Idle",
) -> Device:
    return Device(
        id=device_id,
        functional=DeviceFunctional(m_type=m_type, materials=materials),
        performance=DevicePerformance(accuracy_mm=accuracy, speed_mm_s=60),
        volume=BuildVolume(*volume),
        status=status,
    )
