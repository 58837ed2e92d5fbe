/** Client-side 2D top view of a layout, drawn from placement JSON.
 *
 * This is pure coordinate mapping — no merging or interference logic. The
 * mapping mirrors the service's rendered views: uniform scale, 5% margin,
 * x to the right and y upward (canvas rows inverted), red volume boundary,
 * parts filled in placement order from the shared palette. */

import { partColor, VOLUME_EDGE_CSS } from "./palette";

export interface VolumeDims {
  l_mm: number;
  w_mm: number;
  h_mm: number;
}

export interface PartPlacement {
  orderId: string;
  /** center x/y in the device frame, mm */
  x: number;
  y: number;
  /** footprint dims, mm */
  l: number;
  w: number;
}

export interface Rect {
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface TopViewGeometry {
  volume: Rect;
  parts: { orderId: string; color: string; rect: Rect }[];
}

export const MARGIN_FRACTION = 0.05;

/** Map the volume and part footprints into canvas pixel rectangles. */
export function computeTopView(
  parts: PartPlacement[],
  volume: VolumeDims,
  canvasSize: number,
): TopViewGeometry {
  const usable = canvasSize * (1 - 2 * MARGIN_FRACTION);
  const scale = Math.min(usable / volume.l_mm, usable / volume.w_mm);
  const boxW = volume.l_mm * scale;
  const boxH = volume.w_mm * scale;
  const ox = (canvasSize - boxW) / 2;
  const oy = (canvasSize - boxH) / 2;

  const toCanvas = (x: number, y: number): [number, number] => [
    ox + (x + volume.l_mm / 2) * scale,
    canvasSize - (oy + (y + volume.w_mm / 2) * scale),
  ];

  const [vx0, vy1] = toCanvas(-volume.l_mm / 2, -volume.w_mm / 2);
  const [vx1, vy0] = toCanvas(volume.l_mm / 2, volume.w_mm / 2);
  const geometry: TopViewGeometry = {
    volume: { x: vx0, y: vy0, width: vx1 - vx0, height: vy1 - vy0 },
    parts: [],
  };
  parts.forEach((part, index) => {
    const [px0, py1] = toCanvas(part.x - part.l / 2, part.y - part.w / 2);
    const [px1, py0] = toCanvas(part.x + part.l / 2, part.y + part.w / 2);
    geometry.parts.push({
      orderId: part.orderId,
      color: partColor(index).css,
      rect: { x: px0, y: py0, width: px1 - px0, height: py1 - py0 },
    });
  });
  return geometry;
}

/** Minimal slice of CanvasRenderingContext2D used by the drawer; tests pass
 * a recording stub since jsdom has no real 2D context. */
export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
}

export function drawTopView(
  ctx: Ctx2D,
  canvasSize: number,
  parts: PartPlacement[],
  volume: VolumeDims,
): TopViewGeometry {
  const geometry = computeTopView(parts, volume, canvasSize);
  ctx.clearRect(0, 0, canvasSize, canvasSize);
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, canvasSize, canvasSize);
  ctx.strokeStyle = VOLUME_EDGE_CSS;
  ctx.lineWidth = 2;
  ctx.strokeRect(
    geometry.volume.x,
    geometry.volume.y,
    geometry.volume.width,
    geometry.volume.height,
  );
  for (const part of geometry.parts) {
    ctx.fillStyle = part.color;
    ctx.fillRect(part.rect.x, part.rect.y, part.rect.width, part.rect.height);
  }
  return geometry;
}

/** Hit-test helper for hover tooltips (order id + position readout). */
export function partAt(geometry: TopViewGeometry, x: number, y: number): string | null {
  for (let i = geometry.parts.length - 1; i >= 0; i--) {
    const { rect, orderId } = geometry.parts[i];
    if (x >= rect.x && x <= rect.x + rect.width && y >= rect.y && y <= rect.y + rect.height) {
      return orderId;
    }
  }
  return null;
}
