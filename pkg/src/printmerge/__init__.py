"""Autonomous merging of 3D printing work orders.

Models a printer fleet and an order book, matches orders to compatible
devices, packs parts into shared build volumes through an iterative
propose-check-refine loop with a pluggable planner, verifies every layout
with an interference checker, and remembers successful merges to seed
future ones.
"""

from .agent import AgentConfig, MergeEngine, MergeRun, run_merge
from .geometry import Layout, Placement, aabb_overlap, check_layout, containment_check
from .matching import Assignment, MatchPolicy, MatchResult, compatible, match_orders
from .memory import BatchSignature, MemoryCase, MemoryStore, seed_layout, signature_for
from .model import (
    BuildVolume,
    Device,
    Fleet,
    OrderBook,
    WorkOrder,
    load_fleet,
    load_orders,
    save_fleet,
    save_orders,
)
from .packing import PackOutcome, PackRequest, initial_positions, shelf_pack
from .planners import HeuristicPlanner, RemotePlanner, ScriptedPlanner
from .prompting import PromptBundle, build_prompt, parse_positions, render_views

__all__ = [
    "AgentConfig",
    "Assignment",
    "BatchSignature",
    "BuildVolume",
    "Device",
    "Fleet",
    "HeuristicPlanner",
    "Layout",
    "MatchPolicy",
    "MatchResult",
    "MemoryCase",
    "MemoryStore",
    "MergeEngine",
    "MergeRun",
    "OrderBook",
    "PackOutcome",
    "PackRequest",
    "Placement",
    "PromptBundle",
    "RemotePlanner",
    "ScriptedPlanner",
    "WorkOrder",
    "aabb_overlap",
    "build_prompt",
    "check_layout",
    "compatible",
    "containment_check",
    "initial_positions",
    "load_fleet",
    "load_orders",
    "match_orders",
    "parse_positions",
    "render_views",
    "run_merge",
    "save_fleet",
    "save_orders",
    "seed_layout",
    "shelf_pack",
    "signature_for",
]
