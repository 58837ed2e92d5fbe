/** Application state and actions. One store, one change stream: every view
 * re-renders from the same snapshot, and all mutations funnel through the
 * actions here (including optimistic updates and their rollbacks). */

import { ApiClient, ServiceError } from "./api";
import type { DeviceDoc, MatchResultDoc, OrderDoc, RunDoc } from "./api";
import { validateOrder } from "./schema";
import type { Issue } from "./schema";

export interface Banner {
  code: string;
  message: string;
}

export interface AppState {
  devices: DeviceDoc[];
  runs: RunDoc[];
  selectedRunId: string | null;
  runDetail: RunDoc | null;
  /** instructions accepted by the server but not yet visible in a record */
  queuedInterventions: Record<string, string[]>;
  intakeIssues: Issue[];
  intakeResult: string | null;
  preview: MatchResultDoc | null;
  previewIssues: Issue[];
  banners: Banner[];
}

export type Listener = (state: AppState) => void;

export class ConsoleStore {
  readonly state: AppState = {
    devices: [],
    runs: [],
    selectedRunId: null,
    runDetail: null,
    queuedInterventions: {},
    intakeIssues: [],
    intakeResult: null,
    preview: null,
    previewIssues: [],
    banners: [],
  };

  private listeners: Listener[] = [];

  constructor(readonly api: ApiClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private banner(error: unknown): void {
    if (error instanceof ServiceError) {
      this.state.banners.push({ code: error.body.code, message: error.body.message });
    } else {
      this.state.banners.push({ code: "network", message: String(error) });
    }
    this.notify();
  }

  dismissBanners(): void {
    this.state.banners = [];
    this.notify();
  }

  async refreshDevices(): Promise<void> {
    try {
      this.state.devices = await this.api.listDevices();
      this.notify();
    } catch (error) {
      this.banner(error);
    }
  }

  async refreshRuns(): Promise<void> {
    try {
      this.state.runs = await this.api.listRuns();
      this.notify();
    } catch (error) {
      this.banner(error);
    }
  }

  async openRun(runId: string): Promise<void> {
    this.state.selectedRunId = runId;
    try {
      this.state.runDetail = await this.api.getRun(runId);
      // drop queued-intervention badges that now appear in a record
      const carried = new Set(
        this.state.runDetail.iterations
          .map((it) => it.intervention)
          .filter((v): v is string => v !== null)
          .flatMap((v) => v.split("\n")),
      );
      const pending = this.state.queuedInterventions[runId] ?? [];
      this.state.queuedInterventions[runId] = pending.filter((text) => !carried.has(text));
      this.notify();
    } catch (error) {
      this.banner(error);
    }
  }

  /** Submit one order; validation issues keep the request client-side. */
  async submitOrder(doc: OrderDoc): Promise<boolean> {
    const issues = validateOrder(doc);
    this.state.intakeIssues = issues;
    this.state.intakeResult = null;
    if (issues.length > 0) {
      this.notify();
      return false;
    }
    try {
      const result = await this.api.submitOrder(doc);
      this.state.intakeResult = result.id;
      this.notify();
      return true;
    } catch (error) {
      if (error instanceof ServiceError && error.body.path) {
        this.state.intakeIssues = [{ path: error.body.path, message: error.body.message }];
        this.notify();
        return false;
      }
      this.banner(error);
      return false;
    }
  }

  /** Optimistically badge the instruction, roll back if the server refuses. */
  async queueIntervention(runId: string, instruction: string): Promise<boolean> {
    const queue = (this.state.queuedInterventions[runId] ??= []);
    queue.push(instruction);
    this.notify();
    try {
      await this.api.intervene(runId, instruction);
      return true;
    } catch (error) {
      const index = queue.lastIndexOf(instruction);
      if (index >= 0) queue.splice(index, 1);
      this.banner(error);
      return false;
    }
  }

  /** What-if matching; never dispatches anything. */
  async runPreview(doc: OrderDoc): Promise<void> {
    const issues = validateOrder(doc);
    this.state.previewIssues = issues;
    if (issues.length > 0) {
      this.state.preview = null;
      this.notify();
      return;
    }
    try {
      this.state.preview = await this.api.matchPreview([doc]);
      this.notify();
    } catch (error) {
      this.banner(error);
    }
  }
}
