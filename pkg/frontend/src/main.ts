/** DOM wiring: editor, inline errors with carets, history, virtualized
 * result table, and the sky scatter with hover + brush-to-CONE. */

import { PortalClient } from "./api.js";
import { caretBlock } from "./caret.js";
import { insertPredicate } from "./editor.js";
import { QueryHistory } from "./history.js";
import {
  Brush,
  BrushResult,
  Marker,
  PlotState,
  defaultState,
  extractMarkers,
  hitTest,
  renderScatter,
  surveyColor,
  unproject,
} from "./plot.js";
import { findPositionColumns, formatCell, windowSlice } from "./table.js";
import { TableDoc } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const client = new PortalClient("");
const history = new QueryHistory();

const editor = $<HTMLTextAreaElement>("editor");
const runButton = $<HTMLButtonElement>("run");
const errorBox = $<HTMLPreElement>("error-box");
const banner = $<HTMLDivElement>("banner");
const retryButton = $<HTMLButtonElement>("retry");
const historyList = $<HTMLUListElement>("history");
const tableWrap = $<HTMLDivElement>("table-wrap");
const tableStatus = $<HTMLDivElement>("table-status");
const canvas = $<HTMLCanvasElement>("plot");
const plotNote = $<HTMLDivElement>("plot-note");
const tooltip = $<HTMLDivElement>("tooltip");
const surveysLine = $<HTMLDivElement>("surveys");

const ROW_PX = 24;

let inflight: AbortController | null = null;
let activeTable: TableDoc | null = null;
let markers: Marker[] = [];
let colors = new Map<string | null, string>();
let plotState: PlotState = { centerRa: 180, centerDec: 0, scale: 2 };
let brush = new Brush();
let brushPreview: BrushResult | null = null;
let lastQuery = "";

function setError(text: string | null): void {
  errorBox.hidden = text === null;
  errorBox.textContent = text ?? "";
}

function setBanner(visible: boolean, message = ""): void {
  banner.hidden = !visible;
  $<HTMLSpanElement>("banner-message").textContent = message;
}

function renderHistory(): void {
  historyList.replaceChildren(
    ...history
      .list()
      .map((entry, i) => {
        const li = document.createElement("li");
        const status =
          entry.status === "ok"
            ? `${entry.rowCount} rows`
            : entry.status === "pending"
              ? "..."
              : entry.status;
        li.textContent = `${entry.text.slice(0, 60)}  [${status}]`;
        li.title = entry.text;
        li.addEventListener("click", () => {
          editor.value = entry.text;
        });
        return li;
      })
      .reverse(),
  );
}

function renderTableWindow(): void {
  if (!activeTable) return;
  const table = activeTable;
  const slice = windowSlice(
    table.rows.length,
    tableWrap.scrollTop,
    tableWrap.clientHeight,
    ROW_PX,
  );
  const html: string[] = [];
  html.push('<table><thead><tr>');
  for (const c of table.columns) html.push(`<th>${c.name}</th>`);
  html.push("</tr></thead><tbody>");
  if (slice.padTopPx > 0) {
    html.push(
      `<tr style="height:${slice.padTopPx}px"><td colspan="${table.columns.length}"></td></tr>`,
    );
  }
  for (let i = slice.start; i < slice.end; i++) {
    html.push("<tr>");
    for (const v of table.rows[i]) html.push(`<td>${escapeHtml(formatCell(v))}</td>`);
    html.push("</tr>");
  }
  if (slice.padBottomPx > 0) {
    html.push(
      `<tr style="height:${slice.padBottomPx}px"><td colspan="${table.columns.length}"></td></tr>`,
    );
  }
  html.push("</tbody></table>");
  tableWrap.innerHTML = html.join("");
}

function escapeHtml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function redrawPlot(): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  renderScatter(ctx, markers, plotState, canvas.width, canvas.height, colors, brushPreview);
}

function showResult(table: TableDoc): void {
  activeTable = table;
  tableStatus.textContent = `${table.stats.row_count} rows`;
  renderTableWindow();

  const positions = findPositionColumns(table.columns);
  if (positions.length === 0) {
    markers = [];
    plotNote.hidden = false;
    plotNote.textContent =
      "Plot disabled: the result exposes no ra/dec column pair. Select ra and dec (or survey.ra, survey.dec) to see the sky view.";
  } else {
    plotNote.hidden = true;
    markers = extractMarkers(table, positions);
    colors = surveyColor(markers);
    plotState = defaultState(markers);
  }
  redrawPlot();
}

async function submit(text: string): Promise<void> {
  const q = text.trim();
  if (!q) return;
  lastQuery = q;
  inflight?.abort(); // one in-flight query per session
  const controller = new AbortController();
  inflight = controller;
  const entry = history.add(q);
  renderHistory();
  setError(null);
  setBanner(false);
  runButton.disabled = true;
  try {
    const outcome = await client.fedquery(q, controller.signal);
    if (outcome.kind === "table") {
      history.settle(entry, "ok", outcome.table.stats.row_count);
      showResult(outcome.table);
    } else {
      history.settle(entry, "error", undefined, outcome.error.code);
      const { code, message, offset } = outcome.error;
      let text = `${code}: ${message}`;
      if (offset !== undefined && offset !== null) {
        text += `\n${caretBlock(q, offset)}`;
      }
      setError(text);
    }
  } catch (err) {
    if (controller.signal.aborted) return; // superseded by a newer query
    history.settle(entry, "network", undefined, String(err));
    setBanner(true, `Portal unreachable: ${String(err)}`);
  } finally {
    if (inflight === controller) {
      inflight = null;
      runButton.disabled = false;
    }
    renderHistory();
  }
}

function tooltipFor(m: Marker): string {
  if (!activeTable) return "";
  const row = activeTable.rows[m.row];
  const prefix = m.survey ? `${m.survey}.` : "";
  const parts: string[] = [];
  activeTable.columns.forEach((c, i) => {
    const name = c.name;
    if (name === `${prefix}object_id`) parts.unshift(`${name} = ${formatCell(row[i])}`);
    if (name.startsWith(`${prefix}mag_`)) parts.push(`${name} = ${formatCell(row[i])}`);
  });
  parts.push(`ra = ${m.ra.toFixed(5)}`, `dec = ${m.dec.toFixed(5)}`);
  return parts.join("\n");
}

function wirePlot(): void {
  canvas.addEventListener("mousedown", (ev) => {
    brush.begin(ev.offsetX, ev.offsetY);
  });
  canvas.addEventListener("mousemove", (ev) => {
    if (brush.active) {
      brush.drag(ev.offsetX, ev.offsetY);
      brushPreview = brush.preview(plotState, canvas.width, canvas.height);
      redrawPlot();
      return;
    }
    const hit = hitTest(markers, plotState, canvas.width, canvas.height, ev.offsetX, ev.offsetY);
    if (hit) {
      tooltip.hidden = false;
      tooltip.textContent = tooltipFor(hit);
      tooltip.style.left = `${ev.offsetX + 14}px`;
      tooltip.style.top = `${ev.offsetY + 14}px`;
    } else {
      tooltip.hidden = true;
    }
  });
  canvas.addEventListener("mouseup", () => {
    const result = brush.end(plotState, canvas.width, canvas.height);
    brushPreview = null;
    redrawPlot();
    if (result) {
      // the explore-refine loop: the brushed region becomes a predicate
      editor.value = insertPredicate(editor.value, result.predicate);
      editor.focus();
    }
  });
  canvas.addEventListener("mouseleave", () => {
    brush.cancel();
    brushPreview = null;
    tooltip.hidden = true;
    redrawPlot();
  });
  canvas.addEventListener(
    "wheel",
    (ev) => {
      ev.preventDefault();
      const factor = ev.deltaY < 0 ? 1.25 : 0.8;
      const before = unproject(plotState, canvas.width, canvas.height, ev.offsetX, ev.offsetY);
      plotState = { ...plotState, scale: plotState.scale * factor };
      const after = unproject(plotState, canvas.width, canvas.height, ev.offsetX, ev.offsetY);
      plotState = {
        ...plotState,
        centerRa: plotState.centerRa + (before.ra - after.ra),
        centerDec: Math.min(90, Math.max(-90, plotState.centerDec + (before.dec - after.dec))),
      };
      redrawPlot();
    },
    { passive: false },
  );
}

async function init(): Promise<void> {
  runButton.addEventListener("click", () => void submit(editor.value));
  editor.addEventListener("keydown", (ev) => {
    if ((ev.ctrlKey || ev.metaKey) && ev.key === "Enter") {
      ev.preventDefault();
      void submit(editor.value);
    }
  });
  retryButton.addEventListener("click", () => void submit(lastQuery));
  tableWrap.addEventListener("scroll", renderTableWindow);
  wirePlot();

  try {
    const doc = await client.surveys();
    surveysLine.textContent =
      "surveys: " +
      doc.surveys.map((s) => `${s.survey} (${s.object_count})`).join(", ") +
      `  |  defaults: k=${doc.default_k}, max_radius=${doc.default_max_radius_arcsec}"`;
    const first = doc.surveys[0]?.survey ?? "survey";
    if (!editor.value) {
      editor.value = `SELECT ${first}.object_id, ${first}.ra, ${first}.dec FROM XMATCH(${first}) LIMIT 1000`;
    }
  } catch (err) {
    setBanner(true, `Portal unreachable: ${String(err)}`);
  }
}

void init();
