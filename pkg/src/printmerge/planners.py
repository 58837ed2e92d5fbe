"""Position planners: the pluggable proposal side of the refinement loop.

Every planner consumes a prompt bundle and answers with free text holding a
``positions = [...]`` block. The engine, not the planner, verifies the
result; planners stay side-effect-free with respect to engine state.
"""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import Protocol, runtime_checkable

import requests

from .errors import PlannerExhaustedError, PlannerOverflowError, PlannerTransportError
from .packing import PackRequest, shelf_pack
from .prompting import PromptBundle, format_positions


@runtime_checkable
class Planner(Protocol):
    kind: str

    def propose(self, bundle: PromptBundle) -> str: ...


class HeuristicPlanner:
    """Deterministic baseline: shelf-packs the bundle's parts and formats the
    result as a positions answer. Raises on overflow instead of force-placing."""

    kind = "heuristic"

    def propose(self, bundle: PromptBundle) -> str:
        if bundle.volume is None or not bundle.parts:
            raise PlannerTransportError("bundle carries no structured part data")
        outcome = shelf_pack(
            PackRequest(parts=bundle.parts, volume=bundle.volume, clearance_mm=bundle.clearance_mm)
        )
        if outcome.rejected:
            raise PlannerOverflowError(list(outcome.rejected))
        by_id = {p.order_id: p.center for p in outcome.placed.placements}
        return format_positions([by_id[pid] for pid, _dims in bundle.parts])


class ScriptedPlanner:
    """Test double replaying canned answers, optionally with a fixed delay
    per proposal so runs stay observable while in flight."""

    kind = "scripted"

    def __init__(self, answers: list[str], delay_s: float = 0.0):
        self.answers = list(answers)
        self.delay_s = delay_s
        self.calls = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedPlanner":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(answers=list(doc["answers"]), delay_s=float(doc.get("delay_s", 0.0)))

    def propose(self, bundle: PromptBundle) -> str:
        if self.delay_s > 0:
            time.sleep(self.delay_s)
        if self.calls >= len(self.answers):
            raise PlannerExhaustedError(
                f"script exhausted after {len(self.answers)} answers"
            )
        answer = self.answers[self.calls]
        self.calls += 1
        return answer


class RemotePlanner:
    """Chat-completions wire client for an LLM backend.

    The request carries the system text plus a user entry whose content is a
    list of text and image-URL parts (base64 data URLs). Transport failures
    are retried with exponential backoff; retries do not consume loop
    iterations, only parsed proposals do.
    """

    kind = "remote"

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        timeout_s: float = 60.0,
        retries: int = 2,
        backoff_s: float = 0.5,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.retries = retries
        self.backoff_s = backoff_s

    def build_payload(self, bundle: PromptBundle) -> dict:
        content: list[dict] = [{"type": "text", "text": bundle.user_text}]
        for _label, b64 in bundle.images:
            content.append(
                {
                    "type": "image_url",
                    "image_url": {"url": f"data:image/png;base64,{b64}"},
                }
            )
        return {
            "model": self.model,
            "messages": [
                {"role": "system", "content": bundle.system_text},
                {"role": "user", "content": content},
            ],
        }

    def propose(self, bundle: PromptBundle) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = self.build_payload(bundle)
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff_s * (2 ** (attempt - 1)))
            try:
                resp = requests.post(
                    self.endpoint, json=payload, headers=headers, timeout=self.timeout_s
                )
                if resp.status_code >= 500:
                    last_error = PlannerTransportError(f"backend returned {resp.status_code}")
                    continue
                if resp.status_code != 200:
                    raise PlannerTransportError(
                        f"backend returned {resp.status_code}: {resp.text[:200]}"
                    )
                doc = resp.json()
                return doc["choices"][0]["message"]["content"]
            except (requests.RequestException, ValueError, KeyError, IndexError) as e:
                last_error = e
        raise PlannerTransportError(
            f"planner backend unreachable after {self.retries + 1} attempts: {last_error}"
        )
