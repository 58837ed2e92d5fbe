/** Typed client for the merge service HTTP API. All console data comes from
 * these endpoints; the console itself never computes layouts or reports. */

export interface ApiErrorBody {
  code: string;
  message: string;
  path?: string;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

export interface DeviceDoc {
  id: string;
  functional: { m_type: string; materials: string[] };
  performance: { accuracy_mm: number; speed_mm_s: number };
  volume: { l_mm: number; w_mm: number; h_mm: number };
  status: "Idle" | "Printing" | "Offline";
}

export interface OrderDoc {
  id: string;
  spatial: { l_mm: number; w_mm: number; h_mm: number };
  material: string;
  accuracy_req_mm: number;
  start_time: string;
  expected_time: string;
  mesh_ref?: string;
  m_type_req?: string;
}

export interface MatchResultDoc {
  assignments: { device_id: string; order_ids: string[] }[];
  unassigned: { order_id: string; reason: string }[];
}

export interface FindingDoc {
  kind: "PartPart" | "OutOfVolume";
  subjects: string[];
  penetration_mm: number;
}

export interface ReportDoc {
  clear: boolean;
  findings: FindingDoc[];
  text: string;
}

export interface IterationDoc {
  index: number;
  source: string;
  positions: number[][] | null;
  report: ReportDoc | null;
  template_id: string;
  memory_case_ids: string[];
  intervention: string | null;
  images: string[];
  parse_error: string | null;
  views?: { label: string; data_url: string }[];
}

export interface RunDoc {
  run_id: string;
  device_id: string;
  batch: string[];
  parts: { order_id: string; dims: number[] }[];
  volume: { l_mm: number; w_mm: number; h_mm: number };
  clearance_mm: number;
  planner_kind: string;
  status: "Running" | "Succeeded" | "Failed" | "NeedsSplit";
  planner_calls: number;
  initial_report: ReportDoc | null;
  iterations: IterationDoc[];
  final_positions: number[][] | null;
  failure_cause: string | null;
  overflow: string[];
  created_at?: string;
  final_views?: { label: string; data_url: string }[];
}

export interface RunEvent {
  run_id: string;
  seq: number;
  kind: "IterationCompleted" | "StatusChanged" | "InterventionQueued";
  payload: Record<string, unknown>;
}

async function parseError(resp: Response): Promise<ServiceError> {
  let body: ApiErrorBody = { code: "http_error", message: `HTTP ${resp.status}` };
  try {
    const doc = await resp.json();
    if (doc && doc.error) body = doc.error as ApiErrorBody;
  } catch {
    // non-JSON error body: keep the generic message
  }
  return new ServiceError(resp.status, body);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  async listDevices(): Promise<DeviceDoc[]> {
    const doc = await this.request<{ devices: DeviceDoc[] }>("/api/devices");
    return doc.devices;
  }

  setDeviceStatus(id: string, status: DeviceDoc["status"]): Promise<DeviceDoc> {
    return this.request(`/api/devices/${encodeURIComponent(id)}/status`, {
      method: "PUT",
      body: JSON.stringify({ status }),
    });
  }

  submitOrder(order: OrderDoc): Promise<{ id: string }> {
    return this.request("/api/orders", { method: "POST", body: JSON.stringify(order) });
  }

  matchPreview(orders: OrderDoc[]): Promise<MatchResultDoc> {
    return this.request("/api/match/preview", {
      method: "POST",
      body: JSON.stringify({ orders }),
    });
  }

  async listRuns(): Promise<RunDoc[]> {
    const doc = await this.request<{ runs: RunDoc[] }>("/api/runs");
    return doc.runs;
  }

  getRun(runId: string): Promise<RunDoc> {
    return this.request(`/api/runs/${encodeURIComponent(runId)}`);
  }

  intervene(runId: string, instruction: string): Promise<{ queued: boolean }> {
    return this.request(`/api/runs/${encodeURIComponent(runId)}/intervene`, {
      method: "POST",
      body: JSON.stringify({ instruction }),
    });
  }

  async events(runId: string, after: number, timeoutS?: number): Promise<RunEvent[]> {
    const timeout = timeoutS === undefined ? "" : `&timeout_s=${timeoutS}`;
    const doc = await this.request<{ events: RunEvent[] }>(
      `/api/runs/${encodeURIComponent(runId)}/events?after=${after}${timeout}`,
    );
    return doc.events;
  }
}
