/** Part colors keyed by placement index — the same convention the service
 * uses in its rendered prompt views, so operators see consistent colors. */

export const PART_PALETTE: { name: string; css: string }[] = [
  { name: "red", css: "#e31e24" },
  { name: "green", css: "#22b14c" },
  { name: "blue", css: "#0066cc" },
  { name: "orange", css: "#ff7f27" },
  { name: "purple", css: "#8c3cbe" },
  { name: "cyan", css: "#00a2ae" },
  { name: "magenta", css: "#c81e8c" },
  { name: "olive", css: "#808020" },
];

export const VOLUME_EDGE_CSS = "#ff0000";

export function partColor(index: number): { name: string; css: string } {
  return PART_PALETTE[index % PART_PALETTE.length];
}
