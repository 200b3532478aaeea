import { ApiClient } from "./api.js";
import type {
  HistoryResponse,
  ProfileForm,
  Scenario,
  WhatifResponse,
} from "./types.js";
import { FieldError, profileToVisit, validateProfile, validateScenario } from "./validation.js";

export interface AppState {
  profile: ProfileForm;
  scenarios: Scenario[];
  modelName: string;
  comparison: WhatifResponse | null;
  knockOnPreview: Record<string, Record<string, number>>;
  history: HistoryResponse | null;
  errors: FieldError[];
  serviceError: string | null;
}

export function initialState(profile: ProfileForm, modelName: string): AppState {
  return {
    profile,
    scenarios: [],
    modelName,
    comparison: null,
    knockOnPreview: {},
    history: null,
    errors: [],
    serviceError: null,
  };
}

export function addScenario(state: AppState, scenario: Scenario): AppState {
  const errors = validateScenario(scenario, state.profile);
  if (errors.length > 0) return { ...state, errors };
  return { ...state, scenarios: [...state.scenarios, scenario], errors: [] };
}

export function removeScenario(state: AppState, label: string): AppState {
  return { ...state, scenarios: state.scenarios.filter((s) => s.label !== label) };
}

/**
 * Fetch the knock-on preview for a scenario from the service (the preview
 * shown on a card before submission is the backend's number, not a local
 * re-derivation).
 */
export async function previewKnockOn(
  client: ApiClient,
  state: AppState,
  scenario: Scenario,
): Promise<AppState> {
  try {
    const deltas = await client.knockOn(state.modelName, scenario);
    return {
      ...state,
      knockOnPreview: { ...state.knockOnPreview, [scenario.label]: deltas },
      serviceError: null,
    };
  } catch (err) {
    return { ...state, serviceError: describe(err) };
  }
}

/**
 * Validate then submit the comparison. Invalid forms never reach the
 * network; on service failure the previous numbers are discarded rather
 * than shown stale.
 */
export async function submitComparison(client: ApiClient, state: AppState): Promise<AppState> {
  const errors = [
    ...validateProfile(state.profile),
    ...state.scenarios.flatMap((s) => validateScenario(s, state.profile)),
  ];
  if (errors.length > 0) {
    return { ...state, errors, comparison: null };
  }
  try {
    const comparison = await client.whatif(
      state.modelName,
      profileToVisit(state.profile),
      state.scenarios,
    );
    return { ...state, comparison, errors: [], serviceError: null };
  } catch (err) {
    return { ...state, comparison: null, serviceError: describe(err) };
  }
}

/** Record the profile as a visit, then refresh the history timeline. */
export async function recordVisit(client: ApiClient, state: AppState): Promise<AppState> {
  const errors = validateProfile(state.profile);
  if (errors.length > 0) return { ...state, errors };
  try {
    await client.recordVisit(profileToVisit(state.profile));
    const history = await client.history(state.profile.patientId, state.modelName);
    return { ...state, history, errors: [], serviceError: null };
  } catch (err) {
    return { ...state, serviceError: describe(err) };
  }
}

export async function switchModel(
  client: ApiClient,
  state: AppState,
  modelName: string,
): Promise<AppState> {
  const next = { ...state, modelName };
  // switching variants invalidates every displayed number; resubmit
  return state.comparison ? submitComparison(client, next) : next;
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
