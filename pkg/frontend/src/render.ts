// HTML/SVG string renderers. Every wear number is emitted verbatim via
// String(value) in a data-value attribute; the visible label is a fixed-point
// view of the same number.

import { AllocationView, Gauge, TimelineView, TreeNode } from "./model.js";
import { JOINTS } from "./types.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderAllocation(view: AllocationView): string {
  if (view.complete) {
    return `<section class="panel allocation"><h2>Allocation</h2>
      <p class="done">Assembly complete after ${view.clock} s.</p></section>`;
  }
  const s = view.suggestion;
  const suggestion = s
    ? `<p class="suggestion">Next: <b class="action">${escapeHtml(s.action)}</b>
       <span class="worker worker-${escapeHtml(s.worker)}">${escapeHtml(s.worker)}</span></p>
       <button data-role="accept">Mark done</button>`
    : `<p class="suggestion">No suggestion yet.</p>`;
  const options = view.workers
    .map((w) => `<option value="${escapeHtml(w.id)}">${escapeHtml(w.id)} (${w.kind})</option>`)
    .join("");
  const actions = view.plannedActions
    .map((a) => `<option value="${escapeHtml(a)}">${escapeHtml(a)}</option>`)
    .join("");
  return `<section class="panel allocation"><h2>Allocation</h2>
    ${suggestion}
    <p class="plan-cost">Remaining plan cost: <span data-role="plan-cost">${view.planCost ?? "-"}</span></p>
    <form data-role="override">
      <select name="action">${actions}</select>
      <select name="worker">${options}</select>
      <button type="submit">Override</button>
    </form>
  </section>`;
}

export function renderGauges(gauges: Gauge[]): string {
  const rows = gauges
    .map((g) => {
      const pct = Math.min(100, g.value * 100);
      return `<div class="gauge band-${g.band}" data-joint="${g.joint}"
        data-value="${String(g.value)}" data-th1="${String(g.th1)}" data-th2="${String(g.th2)}"
        title="${g.joint}: ${String(g.value)}">
        <span class="joint">${g.joint}</span>
        <span class="bar"><span class="fill" style="width:${pct}%"></span>
          <span class="tick" style="left:${g.th1 * 100}%"></span>
          <span class="tick" style="left:${g.th2 * 100}%"></span></span>
        <span class="value">${g.value.toFixed(3)}</span>
        <span class="band">${g.band}</span>
      </div>`;
    })
    .join("\n");
  return `<section class="panel wear"><h2>Joint wear</h2>${rows}</section>`;
}

const SERIES_COLORS: Record<string, string> = {
  shoulder: "#4fd1c5",
  elbow: "#f6c177",
  wrist: "#9ccfd8",
  trunk: "#c4a7e7",
  neck: "#eb6f92",
};

export function renderTimeline(view: TimelineView, th1: number, th2: number): string {
  const width = 640;
  const height = 180;
  const tEnd = Math.max(view.tEnd, 1e-9);
  const x = (t: number) => (t / tEnd) * width;
  const y = (v: number) => height - v * height;
  const shading = view.intervals
    .map(
      (iv) => `<rect class="interval ${iv.mode}" x="${x(iv.t0).toFixed(1)}" y="0"
        width="${(x(iv.t1) - x(iv.t0)).toFixed(1)}" height="${height}"
        data-action="${iv.action}" data-worker="${iv.worker}" data-mode="${iv.mode}"></rect>`,
    )
    .join("\n");
  const thresholds = [th1, th2]
    .map(
      (th) => `<line class="threshold" x1="0" x2="${width}" y1="${y(th).toFixed(1)}"
        y2="${y(th).toFixed(1)}" data-threshold="${String(th)}"></line>`,
    )
    .join("\n");
  const lines = JOINTS.map((joint) => {
    const pts = view.series[joint]
      .map((p) => `${x(p.t).toFixed(1)},${y(p.value).toFixed(1)}`)
      .join(" ");
    return `<polyline class="series" data-joint="${joint}" fill="none"
      stroke="${SERIES_COLORS[joint]}" points="${pts}"></polyline>`;
  }).join("\n");
  return `<section class="panel timeline"><h2>Wear timeline</h2>
    <svg viewBox="0 0 ${width} ${height}" role="img">${shading}${thresholds}${lines}</svg>
  </section>`;
}

export function renderTree(nodes: TreeNode[]): string {
  const items = nodes
    .map(
      (n) => `<details open><summary>${escapeHtml(n.label)}</summary>
      <ul>${n.children.map((c) => `<li>${escapeHtml(c.label)}</li>`).join("")}</ul></details>`,
    )
    .join("\n");
  return `<section class="panel progress"><h2>Assembly progress</h2>${items}</section>`;
}

export function renderError(message: string | null): string {
  if (!message) return "";
  return `<section class="panel error" data-role="error">${escapeHtml(message)}</section>`;
}

export function renderHistory(history: { action: string; worker: string; t: number }[]): string {
  const rows = history
    .map(
      (h) => `<tr><td>${escapeHtml(h.action)}</td>
      <td class="worker-${escapeHtml(h.worker)}">${escapeHtml(h.worker)}</td>
      <td>${h.t}</td></tr>`,
    )
    .join("");
  return `<section class="panel history"><h2>Completed</h2>
    <table><thead><tr><th>action</th><th>worker</th><th>t [s]</th></tr></thead>
    <tbody>${rows}</tbody></table></section>`;
}
