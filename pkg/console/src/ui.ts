/** DOM rendering. Views are plain functions from state to elements; the
 * whole app re-renders on every store change, which is plenty at this scale
 * (a fleet board, a run list and one open timeline). */

import type { DeviceDoc, IterationDoc, OrderDoc, RunDoc } from "./api";
import { drawTopView } from "./layoutView";
import type { PartPlacement } from "./layoutView";
import { partColor } from "./palette";
import type { AppState, ConsoleStore } from "./store";

const CANVAS_SIZE = 360;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function labelled(labelText: string, input: HTMLElement): HTMLLabelElement {
  const label = el("label");
  label.append(labelText, input);
  return label;
}

function numberInput(name: string, value: string): HTMLInputElement {
  const input = el("input");
  input.name = name;
  input.type = "number";
  input.step = "any";
  input.value = value;
  return input;
}

// --- fleet board ---------------------------------------------------------------

function renderFleet(store: ConsoleStore, devices: DeviceDoc[]): HTMLElement {
  const section = el("section", "panel");
  section.id = "fleet-board";
  section.append(el("h2", undefined, "Fleet"));
  const cards = el("div", "device-cards");
  for (const device of devices) {
    const card = el("div", `device-card status-${device.status.toLowerCase()}`);
    card.dataset.deviceId = device.id;
    card.append(el("h3", undefined, device.id));
    card.append(el("div", "device-tech", device.functional.m_type));
    card.append(el("div", "device-materials", device.functional.materials.join(", ")));
    card.append(
      el(
        "div",
        "device-volume",
        `${device.volume.l_mm} x ${device.volume.w_mm} x ${device.volume.h_mm} mm`,
      ),
    );
    card.append(el("div", "device-status", device.status));
    const select = el("select");
    for (const status of ["Idle", "Printing", "Offline"] as const) {
      const option = el("option", undefined, status);
      option.value = status;
      option.selected = status === device.status;
      select.append(option);
    }
    select.addEventListener("change", async () => {
      await store.api.setDeviceStatus(device.id, select.value as DeviceDoc["status"]);
      await store.refreshDevices();
    });
    card.append(labelled("set status ", select));
    cards.append(card);
  }
  section.append(cards);
  return section;
}

// --- order intake ----------------------------------------------------------------

function orderFromForm(form: HTMLFormElement): OrderDoc {
  const data = new FormData(form);
  const value = (name: string): string => String(data.get(name) ?? "");
  const num = (name: string): number => Number(value(name));
  const now = new Date();
  const tomorrow = new Date(now.getTime() + 24 * 3600 * 1000);
  return {
    id: value("id"),
    spatial: { l_mm: num("l_mm"), w_mm: num("w_mm"), h_mm: num("h_mm") },
    material: value("material"),
    accuracy_req_mm: num("accuracy_req_mm"),
    start_time: value("start_time") || now.toISOString(),
    expected_time: value("expected_time") || tomorrow.toISOString(),
  };
}

function renderIntake(store: ConsoleStore, state: AppState): HTMLElement {
  const section = el("section", "panel");
  section.id = "intake-panel";
  section.append(el("h2", undefined, "Submit order"));
  const form = el("form");
  form.id = "intake-form";
  form.append(
    labelled("id ", Object.assign(el("input"), { name: "id" })),
    labelled("length mm ", numberInput("l_mm", "24")),
    labelled("width mm ", numberInput("w_mm", "23.99")),
    labelled("height mm ", numberInput("h_mm", "10")),
    labelled("material ", Object.assign(el("input"), { name: "material", value: "PLA" })),
    labelled("accuracy mm ", numberInput("accuracy_req_mm", "0.2")),
    labelled("start ", Object.assign(el("input"), { name: "start_time" })),
    labelled("expected ", Object.assign(el("input"), { name: "expected_time" })),
  );
  const submit = el("button", undefined, "Submit");
  submit.type = "submit";
  form.append(submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void store.submitOrder(orderFromForm(form)).then((ok) => {
      if (ok) void store.refreshRuns();
    });
  });
  section.append(form);
  const issues = el("ul", "intake-issues");
  for (const issue of state.intakeIssues) {
    issues.append(el("li", "issue", `${issue.path}: ${issue.message}`));
  }
  section.append(issues);
  if (state.intakeResult) {
    section.append(el("div", "intake-accepted", `accepted ${state.intakeResult}`));
  }
  return section;
}

// --- match preview ----------------------------------------------------------------

function renderPreview(store: ConsoleStore, state: AppState): HTMLElement {
  const section = el("section", "panel");
  section.id = "preview-panel";
  section.append(el("h2", undefined, "Match preview"));
  const form = el("form");
  form.id = "preview-form";
  form.append(
    labelled("id ", Object.assign(el("input"), { name: "id", value: "WHATIF" })),
    labelled("length mm ", numberInput("l_mm", "24")),
    labelled("width mm ", numberInput("w_mm", "23.99")),
    labelled("height mm ", numberInput("h_mm", "10")),
    labelled("material ", Object.assign(el("input"), { name: "material", value: "PLA" })),
    labelled("accuracy mm ", numberInput("accuracy_req_mm", "0.2")),
  );
  const submit = el("button", undefined, "Preview");
  submit.type = "submit";
  form.append(submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void store.runPreview(orderFromForm(form));
  });
  section.append(form);
  const result = el("div", "preview-result");
  for (const issue of state.previewIssues) {
    result.append(el("div", "issue", `${issue.path}: ${issue.message}`));
  }
  if (state.preview) {
    for (const assignment of state.preview.assignments) {
      result.append(
        el(
          "div",
          "preview-assignment",
          `${assignment.order_ids.join(", ")} -> ${assignment.device_id}`,
        ),
      );
    }
    for (const entry of state.preview.unassigned) {
      const row = el("div", "preview-unassigned");
      row.append(`${entry.order_id}: unassigned, reason `);
      row.append(el("span", "preview-reason", entry.reason));
      result.append(row);
    }
  }
  section.append(result);
  return section;
}

// --- runs ------------------------------------------------------------------------

function renderRunsList(store: ConsoleStore, state: AppState): HTMLElement {
  const section = el("section", "panel");
  section.id = "runs-panel";
  section.append(el("h2", undefined, "Runs"));
  const list = el("ul", "runs-list");
  for (const run of state.runs) {
    const row = el("li", `run-row status-${run.status.toLowerCase()}`);
    row.dataset.runId = run.run_id;
    const link = el("a", undefined, `${run.run_id} [${run.device_id}] ${run.status}`);
    link.href = "#";
    link.addEventListener("click", (event) => {
      event.preventDefault();
      void store.openRun(run.run_id);
    });
    row.append(link, el("span", "run-batch", ` ${run.batch.join(", ")}`));
    list.append(row);
  }
  section.append(list);
  return section;
}

function iterationPlacements(run: RunDoc, iteration: IterationDoc): PartPlacement[] {
  if (!iteration.positions) return [];
  return run.parts.map((part, i) => ({
    orderId: part.order_id,
    x: iteration.positions![i][0],
    y: iteration.positions![i][1],
    l: part.dims[0],
    w: part.dims[1],
  }));
}

function renderIteration(run: RunDoc, iteration: IterationDoc, queued: string[]): HTMLElement {
  const item = el("li", "iteration");
  item.dataset.index = String(iteration.index);
  const title = el("div", "iteration-title", `Iteration ${iteration.index} (${iteration.source})`);
  item.append(title);
  if (iteration.intervention) {
    item.append(el("div", "intervention-badge", `operator: ${iteration.intervention}`));
  }
  if (iteration.parse_error) {
    item.append(el("div", "parse-error", `unparseable answer: ${iteration.parse_error}`));
  }
  if (iteration.report) {
    const report = el("div", iteration.report.clear ? "report clear" : "report findings");
    report.append(el("div", "report-text", iteration.report.text));
    const findings = el("ul", "findings");
    for (const finding of iteration.report.findings) {
      findings.append(
        el(
          "li",
          "finding",
          `${finding.kind}: ${finding.subjects.join(" & ")} (${finding.penetration_mm.toFixed(2)} mm)`,
        ),
      );
    }
    report.append(findings);
    item.append(report);
  }
  const canvas = el("canvas", "iteration-canvas");
  canvas.width = CANVAS_SIZE;
  canvas.height = CANVAS_SIZE;
  let ctx: CanvasRenderingContext2D | null = null;
  try {
    ctx = canvas.getContext("2d");
  } catch {
    ctx = null; // no 2D context in non-browser DOMs; geometry is unit-tested
  }
  if (ctx) {
    drawTopView(ctx, CANVAS_SIZE, iterationPlacements(run, iteration), run.volume);
  }
  item.append(canvas);
  for (const text of queued) {
    item.append(el("div", "queued-badge", `queued: ${text}`));
  }
  return item;
}

function renderTimeline(store: ConsoleStore, state: AppState): HTMLElement {
  const section = el("section", "panel");
  section.id = "timeline-panel";
  const run = state.runDetail;
  if (!run) {
    section.append(el("h2", undefined, "Run timeline"), el("p", undefined, "select a run"));
    return section;
  }
  section.append(el("h2", undefined, `Run ${run.run_id} on ${run.device_id}`));
  const status = el("div", `run-status status-${run.status.toLowerCase()}`, run.status);
  section.append(status);
  if (run.failure_cause) {
    section.append(el("div", "failure-cause", run.failure_cause));
  }
  const legend = el("div", "legend");
  run.parts.forEach((part, i) => {
    const chip = el("span", "legend-chip", part.order_id);
    chip.style.background = partColor(i).css;
    legend.append(chip);
  });
  section.append(legend);

  const list = el("ul", "timeline");
  const queued = state.queuedInterventions[run.run_id] ?? [];
  run.iterations.forEach((iteration, i) => {
    // show still-queued instructions on the latest iteration only
    const badges = i === run.iterations.length - 1 ? queued : [];
    list.append(renderIteration(run, iteration, badges));
  });
  section.append(list);
  if (run.iterations.length === 0 && queued.length > 0) {
    for (const text of queued) section.append(el("div", "queued-badge", `queued: ${text}`));
  }

  const box = el("form", "intervention-box");
  const input = el("input");
  input.name = "instruction";
  input.placeholder = "operator instruction";
  const send = el("button", undefined, "Intervene");
  send.type = "submit";
  const active = run.status === "Running";
  input.disabled = !active;
  send.disabled = !active;
  box.append(labelled("intervention ", input), send);
  box.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value.trim();
    if (text) {
      void store.queueIntervention(run.run_id, text).then(() => store.openRun(run.run_id));
      input.value = "";
    }
  });
  section.append(box);
  return section;
}

// --- shell ------------------------------------------------------------------------

export function renderApp(root: HTMLElement, store: ConsoleStore, state: AppState): void {
  root.replaceChildren();
  const banners = el("div", "banners");
  banners.id = "banners";
  for (const banner of state.banners) {
    banners.append(el("div", "banner", `${banner.code}: ${banner.message}`));
  }
  if (state.banners.length > 0) {
    const dismiss = el("button", undefined, "dismiss");
    dismiss.addEventListener("click", () => store.dismissBanners());
    banners.append(dismiss);
  }
  root.append(
    banners,
    renderFleet(store, state.devices),
    renderIntake(store, state),
    renderPreview(store, state),
    renderRunsList(store, state),
    renderTimeline(store, state),
  );
}
