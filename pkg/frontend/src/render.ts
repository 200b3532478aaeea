import { gapBadge, gapLabel, riskPercent, riskString, signedDelta } from "./format.js";
import type { AppState } from "./state.js";
import type { HistoryResponse, WhatifResponse } from "./types.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderErrors(state: AppState): string {
  if (state.serviceError) {
    return `<div class="banner error" data-role="retry-banner">service unavailable: ${esc(state.serviceError)} <button data-action="retry">retry</button></div>`;
  }
  if (state.errors.length === 0) return "";
  const items = state.errors
    .map((e) => `<li data-field="${esc(e.field)}">${esc(e.message)}</li>`)
    .join("");
  return `<ul class="form-errors">${items}</ul>`;
}

export function renderComparison(comparison: WhatifResponse | null): string {
  if (comparison === null) return `<p class="empty">no comparison yet</p>`;
  const factual = comparison.factual;
  const rows = comparison.scenarios
    .map((s) => {
      const knocks = Object.entries(s.knock_on)
        .map(([k, v]) => `${esc(k)} ${signedDelta(v, 2)}`)
        .join(", ");
      return (
        `<tr data-scenario="${esc(s.scenario)}">` +
        `<td>${esc(s.scenario)}</td>` +
        `<td class="risk" data-risk="${riskString(s.estimate.risk)}">${riskPercent(s.estimate.risk)}</td>` +
        `<td class="knock-on">${knocks}</td>` +
        `<td><span class="badge ${gapBadge(s)}">${esc(gapLabel(s))}</span></td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    `<table class="comparison" data-variant="${esc(factual.variant)}">` +
    `<thead><tr><th>scenario</th><th>10-year risk</th><th>knock-on</th><th>consistency</th></tr></thead>` +
    `<tbody>` +
    `<tr class="factual"><td>factual</td>` +
    `<td class="risk" data-risk="${riskString(factual.risk)}">${riskPercent(factual.risk)}</td>` +
    `<td></td><td></td></tr>` +
    rows +
    `</tbody></table>`
  );
}

export function renderHistory(history: HistoryResponse | null): string {
  if (history === null || history.trajectory.length === 0) {
    return `<p class="empty">no visits recorded</p>`;
  }
  const items = history.trajectory
    .map((v, i) => {
      const anchor = i === 0 ? `<span class="badge anchor">anchor</span> ` : "";
      return (
        `<li data-t="${v.t}">${anchor}day ${v.t}: ` +
        `<span class="risk" data-risk="${riskString(v.risk)}">${riskPercent(v.risk)}</span></li>`
      );
    })
    .join("");
  return `<ol class="history" data-patient="${esc(history.patient_id)}">${items}</ol>`;
}

export function renderModelSwitcher(models: string[], active: string): string {
  const options = models
    .map((m) => `<option value="${esc(m)}"${m === active ? " selected" : ""}>${esc(m)}</option>`)
    .join("");
  return `<select data-role="model-switcher">${options}</select>`;
}
