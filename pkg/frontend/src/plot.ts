/** Equirectangular sky scatter: projection, hover hit-testing, and the
 * circular brush that closes the explore-refine loop. All numbers shown come
 * from portal results; this module only transforms them for display. */

import { conePredicate, normalizeRa, separationDeg } from "./skymath.js";
import { Cell, TableDoc } from "./types.js";
import { PositionColumns } from "./table.js";

export interface PlotState {
  centerRa: number;
  centerDec: number;
  scale: number; // pixels per degree
}

export interface Marker {
  row: number;
  survey: string | null;
  ra: number;
  dec: number;
}

export const SURVEY_COLORS = [
  "#4f8fea",
  "#e06c4f",
  "#57b66b",
  "#b469d6",
  "#d4a73a",
  "#52b8c4",
];

export function defaultState(markers: readonly Marker[]): PlotState {
  if (!markers.length) return { centerRa: 180, centerDec: 0, scale: 2 };
  let x = 0;
  let y = 0;
  let z = 0;
  const DEG = Math.PI / 180;
  for (const m of markers) {
    x += Math.cos(m.dec * DEG) * Math.cos(m.ra * DEG);
    y += Math.cos(m.dec * DEG) * Math.sin(m.ra * DEG);
    z += Math.sin(m.dec * DEG);
  }
  const n = markers.length;
  const centerDec = Math.asin(Math.min(1, Math.max(-1, z / n))) / DEG;
  const centerRa = normalizeRa(Math.atan2(y / n, x / n) / DEG);
  let maxSep = 0;
  for (const m of markers) {
    maxSep = Math.max(maxSep, separationDeg(m.ra, m.dec, centerRa, centerDec));
  }
  return { centerRa, centerDec, scale: maxSep > 0.001 ? 140 / maxSep : 100 };
}

export function extractMarkers(table: TableDoc, positions: readonly PositionColumns[]): Marker[] {
  const out: Marker[] = [];
  table.rows.forEach((row: Cell[], i: number) => {
    for (const p of positions) {
      const ra = row[p.raIndex];
      const dec = row[p.decIndex];
      if (typeof ra === "number" && typeof dec === "number") {
        out.push({ row: i, survey: p.survey, ra, dec });
      }
    }
  });
  return out;
}

/** RA difference folded into [-180, 180), so plots straddle the 0/360 seam. */
function raDelta(ra: number, centerRa: number): number {
  let d = ra - centerRa;
  while (d < -180) d += 360;
  while (d >= 180) d -= 360;
  return d;
}

export function project(
  state: PlotState,
  width: number,
  height: number,
  ra: number,
  dec: number,
): { x: number; y: number } {
  // RA grows to the left: sky maps are mirrored relative to ground maps
  const x = width / 2 - raDelta(ra, state.centerRa) * state.scale;
  const y = height / 2 - (dec - state.centerDec) * state.scale;
  return { x, y };
}

export function unproject(
  state: PlotState,
  width: number,
  height: number,
  x: number,
  y: number,
): { ra: number; dec: number } {
  const ra = normalizeRa(state.centerRa - (x - width / 2) / state.scale);
  const dec = state.centerDec - (y - height / 2) / state.scale;
  return { ra, dec: Math.min(90, Math.max(-90, dec)) };
}

export function hitTest(
  markers: readonly Marker[],
  state: PlotState,
  width: number,
  height: number,
  x: number,
  y: number,
  tolerancePx = 5,
): Marker | null {
  let best: Marker | null = null;
  let bestD = tolerancePx * tolerancePx;
  for (const m of markers) {
    const p = project(state, width, height, m.ra, m.dec);
    const d = (p.x - x) ** 2 + (p.y - y) ** 2;
    if (d <= bestD) {
      bestD = d;
      best = m;
    }
  }
  return best;
}

export interface BrushResult {
  centerRa: number;
  centerDec: number;
  radiusDeg: number;
  predicate: string;
}

/** Click-drag circular brush: center where the drag starts, radius the
 * angular distance to the pointer. */
export class Brush {
  private startPx: { x: number; y: number } | null = null;
  private currentPx: { x: number; y: number } | null = null;

  begin(x: number, y: number): void {
    this.startPx = { x, y };
    this.currentPx = { x, y };
  }

  drag(x: number, y: number): void {
    if (this.startPx) this.currentPx = { x, y };
  }

  get active(): boolean {
    return this.startPx !== null;
  }

  preview(state: PlotState, width: number, height: number): BrushResult | null {
    if (!this.startPx || !this.currentPx) return null;
    const c = unproject(state, width, height, this.startPx.x, this.startPx.y);
    const e = unproject(state, width, height, this.currentPx.x, this.currentPx.y);
    const radius = separationDeg(c.ra, c.dec, e.ra, e.dec);
    if (radius <= 0) return null;
    return {
      centerRa: c.ra,
      centerDec: c.dec,
      radiusDeg: radius,
      predicate: conePredicate(c.ra, c.dec, radius),
    };
  }

  end(state: PlotState, width: number, height: number): BrushResult | null {
    const out = this.preview(state, width, height);
    this.startPx = null;
    this.currentPx = null;
    return out;
  }

  cancel(): void {
    this.startPx = null;
    this.currentPx = null;
  }
}

export function surveyColor(markers: readonly Marker[]): Map<string | null, string> {
  const surveys = Array.from(new Set(markers.map((m) => m.survey)));
  surveys.sort((a, b) => String(a).localeCompare(String(b)));
  const out = new Map<string | null, string>();
  surveys.forEach((s, i) => out.set(s, SURVEY_COLORS[i % SURVEY_COLORS.length]));
  return out;
}

/** Points of the angular circle around (ra, dec), for drawing the brush as
 * its true projected shape (an ellipse-ish curve away from the equator). */
export function circleOutline(
  centerRa: number,
  centerDec: number,
  radiusDeg: number,
  segments = 72,
): Array<{ ra: number; dec: number }> {
  const DEG = Math.PI / 180;
  const out: Array<{ ra: number; dec: number }> = [];
  const t0 = centerDec * DEG;
  const r = radiusDeg * DEG;
  for (let i = 0; i <= segments; i++) {
    const a = (2 * Math.PI * i) / segments;
    // small-circle on the sphere around the center
    const dec = Math.asin(
      Math.sin(t0) * Math.cos(r) + Math.cos(t0) * Math.sin(r) * Math.cos(a),
    );
    const dra = Math.atan2(
      Math.sin(a) * Math.sin(r) * Math.cos(t0),
      Math.cos(r) - Math.sin(t0) * Math.sin(dec),
    );
    out.push({ ra: normalizeRa(centerRa + dra / DEG), dec: dec / DEG });
  }
  return out;
}

export function renderScatter(
  ctx: CanvasRenderingContext2D,
  markers: readonly Marker[],
  state: PlotState,
  width: number,
  height: number,
  colors: Map<string | null, string>,
  brushPreview: BrushResult | null,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, width, height);
  for (const m of markers) {
    const p = project(state, width, height, m.ra, m.dec);
    if (p.x < -4 || p.x > width + 4 || p.y < -4 || p.y > height + 4) continue;
    ctx.fillStyle = colors.get(m.survey) ?? "#cccccc";
    ctx.beginPath();
    ctx.arc(p.x, p.y, 2.4, 0, 2 * Math.PI);
    ctx.fill();
  }
  if (brushPreview) {
    ctx.strokeStyle = "#f3f6ff";
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    circleOutline(brushPreview.centerRa, brushPreview.centerDec, brushPreview.radiusDeg).forEach(
      (pt, i) => {
        const p = project(state, width, height, pt.ra, pt.dec);
        if (i === 0) ctx.moveTo(p.x, p.y);
        else ctx.lineTo(p.x, p.y);
      },
    );
    ctx.stroke();
    ctx.setLineDash([]);
  }
}
