/** Long-poll loop over a run's event feed.
 *
 * The feed contract is strictly increasing `seq` per run; the poller resumes
 * from the last seen seq after any disconnect, so a reconnect never yields
 * duplicate rows. */

import type { RunEvent } from "./api";

export type FetchEvents = (after: number) => Promise<RunEvent[]>;

export class EventPoller {
  lastSeq = 0;
  private stopped = false;
  private running: Promise<void> | null = null;

  constructor(
    private readonly fetchEvents: FetchEvents,
    private readonly onEvents: (events: RunEvent[]) => void,
    private readonly onError?: (error: unknown) => void,
    private readonly retryDelayMs = 500,
  ) {}

  /** One poll round; returns only events newer than anything already seen. */
  async pollOnce(): Promise<RunEvent[]> {
    const batch = await this.fetchEvents(this.lastSeq);
    const fresh = batch.filter((e) => e.seq > this.lastSeq);
    for (const event of fresh) this.lastSeq = Math.max(this.lastSeq, event.seq);
    if (fresh.length > 0) this.onEvents(fresh);
    return fresh;
  }

  start(): void {
    if (this.running) return;
    this.stopped = false;
    this.running = (async () => {
      while (!this.stopped) {
        try {
          await this.pollOnce();
        } catch (error) {
          this.onError?.(error);
          await new Promise((resolve) => setTimeout(resolve, this.retryDelayMs));
        }
      }
    })();
  }

  async stop(): Promise<void> {
    this.stopped = true;
    await this.running;
    this.running = null;
  }
}
