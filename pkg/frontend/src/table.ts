/** Result-table display model: position-column detection, cell formatting,
 * and windowed rendering so tables beyond 1000 rows stay responsive. */

import { Cell, ColumnDoc, TableDoc } from "./types.js";

export const VIRTUAL_THRESHOLD = 1000;

export interface PositionColumns {
  survey: string | null; // null for unqualified ra/dec
  raIndex: number;
  decIndex: number;
}

/** Find (survey?, ra, dec) column pairs; names may be bare or survey.ra. */
export function findPositionColumns(columns: readonly ColumnDoc[]): PositionColumns[] {
  const ras = new Map<string, number>();
  const decs = new Map<string, number>();
  columns.forEach((c, i) => {
    const dot = c.name.lastIndexOf(".");
    const prefix = dot >= 0 ? c.name.slice(0, dot) : "";
    const base = dot >= 0 ? c.name.slice(dot + 1) : c.name;
    if (base === "ra") ras.set(prefix, i);
    if (base === "dec") decs.set(prefix, i);
  });
  const out: PositionColumns[] = [];
  for (const [prefix, raIndex] of ras) {
    const decIndex = decs.get(prefix);
    if (decIndex !== undefined) {
      out.push({ survey: prefix === "" ? null : prefix, raIndex, decIndex });
    }
  }
  out.sort((a, b) => a.raIndex - b.raIndex);
  return out;
}

export function formatCell(v: Cell): string {
  if (v === null) return "";
  if (typeof v === "number") {
    return Number.isInteger(v) ? String(v) : String(v);
  }
  return v;
}

export interface WindowSlice {
  start: number;
  end: number;
  padTopPx: number;
  padBottomPx: number;
}

/** Rows to materialize for the current scroll position. */
export function windowSlice(
  rowCount: number,
  scrollTop: number,
  viewportPx: number,
  rowPx: number,
  overscan = 10,
): WindowSlice {
  if (rowCount <= VIRTUAL_THRESHOLD) {
    return { start: 0, end: rowCount, padTopPx: 0, padBottomPx: 0 };
  }
  const first = Math.max(0, Math.floor(scrollTop / rowPx) - overscan);
  const visible = Math.ceil(viewportPx / rowPx) + 2 * overscan;
  const end = Math.min(rowCount, first + visible);
  return {
    start: first,
    end,
    padTopPx: first * rowPx,
    padBottomPx: (rowCount - end) * rowPx,
  };
}

export function rowCountOf(table: TableDoc): number {
  return table.stats.row_count;
}
