/** Client-side order validation mirroring the server schema, so intake
 * mistakes surface before the request leaves the browser. The server stays
 * authoritative; this mirror only has to agree with it. */

export interface Issue {
  path: string;
  message: string;
}

const ORDER_FIELDS = new Set([
  "id",
  "spatial",
  "material",
  "accuracy_req_mm",
  "start_time",
  "expected_time",
  "mesh_ref",
  "m_type_req",
]);

const DIM_FIELDS = new Set(["l_mm", "w_mm", "h_mm"]);

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function checkPositive(issues: Issue[], value: unknown, path: string): void {
  if (typeof value !== "number" || Number.isNaN(value)) {
    issues.push({ path, message: "expected number" });
  } else if (!(value > 0)) {
    issues.push({ path, message: `must be strictly positive, got ${value}` });
  }
}

function checkTimestamp(issues: Issue[], value: unknown, path: string): number | null {
  if (typeof value !== "string") {
    issues.push({ path, message: "expected string" });
    return null;
  }
  const parsed = Date.parse(value);
  if (Number.isNaN(parsed)) {
    issues.push({ path, message: `not an ISO 8601 timestamp: ${value}` });
    return null;
  }
  return parsed;
}

export function validateOrder(doc: unknown): Issue[] {
  const issues: Issue[] = [];
  if (!isRecord(doc)) {
    return [{ path: "$", message: "expected object" }];
  }
  for (const key of Object.keys(doc)) {
    if (!ORDER_FIELDS.has(key)) issues.push({ path: "$", message: `unknown field(s): ${key}` });
  }
  for (const key of ["id", "spatial", "material", "accuracy_req_mm", "start_time", "expected_time"]) {
    if (!(key in doc)) issues.push({ path: "$", message: `missing required field(s): ${key}` });
  }
  if (typeof doc.id === "string" && doc.id.length === 0) {
    issues.push({ path: "$.id", message: "order id must be non-empty" });
  }
  if ("spatial" in doc) {
    if (!isRecord(doc.spatial)) {
      issues.push({ path: "$.spatial", message: "expected object" });
    } else {
      for (const key of Object.keys(doc.spatial)) {
        if (!DIM_FIELDS.has(key)) {
          issues.push({ path: "$.spatial", message: `unknown field(s): ${key}` });
        }
      }
      for (const key of DIM_FIELDS) {
        if (!(key in doc.spatial)) {
          issues.push({ path: "$.spatial", message: `missing required field(s): ${key}` });
        } else {
          checkPositive(issues, doc.spatial[key], `$.spatial.${key}`);
        }
      }
    }
  }
  if ("material" in doc && typeof doc.material !== "string") {
    issues.push({ path: "$.material", message: "expected string" });
  }
  if ("accuracy_req_mm" in doc) checkPositive(issues, doc.accuracy_req_mm, "$.accuracy_req_mm");
  let start: number | null = null;
  let expected: number | null = null;
  if ("start_time" in doc) start = checkTimestamp(issues, doc.start_time, "$.start_time");
  if ("expected_time" in doc) expected = checkTimestamp(issues, doc.expected_time, "$.expected_time");
  if (start !== null && expected !== null && expected < start) {
    issues.push({ path: "$.expected_time", message: "precedes start_time" });
  }
  return issues;
}
