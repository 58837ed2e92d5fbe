import { describe, expect, it } from "vitest";

import type { RunEvent } from "../src/api";
import { EventPoller } from "../src/poller";

function event(seq: number, kind: RunEvent["kind"] = "IterationCompleted"): RunEvent {
  return { run_id: "run-0001", seq, kind, payload: {} };
}

describe("EventPoller", () => {
  it("asks for events after the last seen seq", async () => {
    const seen: number[] = [];
    const requested: number[] = [];
    const batches: RunEvent[][] = [[event(1), event(2)], [event(3)], []];
    const poller = new EventPoller(
      async (after) => {
        requested.push(after);
        return batches.shift() ?? [];
      },
      (events) => seen.push(...events.map((e) => e.seq)),
    );
    await poller.pollOnce();
    await poller.pollOnce();
    await poller.pollOnce();
    expect(requested).toEqual([0, 2, 3]);
    expect(seen).toEqual([1, 2, 3]);
  });

  it("never emits duplicates even if the feed replays rows on reconnect", async () => {
    const seen: number[] = [];
    const batches: RunEvent[][] = [
      [event(1), event(2), event(3)],
      // reconnect replays everything from the start
      [event(1), event(2), event(3), event(4)],
    ];
    const poller = new EventPoller(
      async () => batches.shift() ?? [],
      (events) => seen.push(...events.map((e) => e.seq)),
    );
    await poller.pollOnce();
    await poller.pollOnce();
    expect(seen).toEqual([1, 2, 3, 4]);
    expect(poller.lastSeq).toBe(4);
  });

  it("resumes after an error without losing its position", async () => {
    const seen: number[] = [];
    let failNext = false;
    const batches: RunEvent[][] = [[event(1)], [event(2)]];
    const poller = new EventPoller(
      async () => {
        if (failNext) {
          failNext = false;
          throw new Error("connection reset");
        }
        return batches.shift() ?? [];
      },
      (events) => seen.push(...events.map((e) => e.seq)),
    );
    await poller.pollOnce();
    failNext = true;
    await expect(poller.pollOnce()).rejects.toThrow("connection reset");
    await poller.pollOnce();
    expect(seen).toEqual([1, 2]);
  });
});
