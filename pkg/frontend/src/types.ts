/** Wire types mirroring the HTTP/JSON service. */

export interface Visit {
  patient_id: string;
  t: number;
  m: { sbp: number; sbp_unexposed?: number; bmi: number; nonhdl: number };
  z: { age: number; sex: number; diabetes: number };
  a: { statin: number; antihypertensive: number };
}

export interface Scenario {
  label: string;
  deltas?: Record<string, number>;
  direct_outcome_effect?: number;
  /** Target treatment statuses; omitted keeps the visit's status. */
  statin?: number;
  antihypertensive?: number;
}

export interface RiskEstimate {
  risk: number;
  horizon: number;
  variant: string;
  scenario: string;
  baseline_risk: number;
  intervention_log_multiplier: number;
  combination: string;
}

export interface ModelInfo {
  name: string;
  variant: string;
  horizon: number;
  columns: string[];
}

export interface WhatifScenarioResult {
  scenario: string;
  estimate: RiskEstimate;
  knock_on: Record<string, number>;
  consistency_gap: number;
  consistent: boolean;
}

export interface WhatifResponse {
  factual: RiskEstimate;
  scenarios: WhatifScenarioResult[];
}

export interface VisitAck {
  patient_id: string;
  n_visits: number;
  anchor: { t: number; m: Record<string, number>; a: Record<string, number> };
  is_anchor_visit: boolean;
}

export interface HistoryPoint {
  t: number;
  m: Record<string, number>;
  z: Record<string, number>;
  a: Record<string, number>;
  risk: number;
}

export interface HistoryResponse {
  patient_id: string;
  model: string;
  anchor: { t: number; m: Record<string, number>; a: Record<string, number> };
  trajectory: HistoryPoint[];
}

/** Flat profile form state; converted to a Visit on submit. */
export interface ProfileForm {
  patientId: string;
  age: number;
  sex: number;
  diabetes: number;
  sbp: number;
  sbpUnexposed: number;
  bmi: number;
  nonhdl: number;
  statin: number;
  antihypertensive: number;
}
