import type { WhatifScenarioResult } from "./types.js";

/**
 * Canonical 6-decimal risk string. Every risk number shown in the UI goes
 * through this; the parity test compares it against the CLI output
 * formatted the same way.
 */
export function riskString(risk: number): string {
  return risk.toFixed(6);
}

/** Human-facing percentage, one decimal. */
export function riskPercent(risk: number): string {
  return `${(risk * 100).toFixed(1)}%`;
}

export type BadgeState = "consistent" | "inconsistent" | "unknown";

/**
 * Sequential-consistency badge state, taken from the backend diagnostic —
 * never re-derived locally.
 */
export function gapBadge(result: Pick<WhatifScenarioResult, "consistent" | "consistency_gap"> | null): BadgeState {
  if (result === null) return "unknown";
  return result.consistent ? "consistent" : "inconsistent";
}

export function gapLabel(result: Pick<WhatifScenarioResult, "consistent" | "consistency_gap"> | null): string {
  const state = gapBadge(result);
  if (state === "unknown") return "gap: n/a";
  return `gap: ${result!.consistency_gap.toExponential(1)} (${state})`;
}

export function signedDelta(value: number, digits = 1): string {
  const s = value.toFixed(digits);
  return value > 0 ? `+${s}` : s;
}
