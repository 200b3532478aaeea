import type { ProfileForm, Scenario } from "./types.js";

/** Demo persona: a 65-year-old woman with type 2 diabetes. */
export const JANE: ProfileForm = {
  patientId: "jane",
  age: 65,
  sex: 0,
  diabetes: 1,
  sbp: 155,
  sbpUnexposed: 155,
  bmi: 31,
  nonhdl: 4.5,
  statin: 0,
  antihypertensive: 0,
};

/** Preset interventions; deltas are the expected mediator responses. */
export const SCENARIO_PRESETS: Record<string, Scenario> = {
  antihypertensive: {
    label: "start antihypertensive",
    deltas: { sbp: -10 },
    antihypertensive: 1,
  },
  statin: {
    label: "start statin",
    deltas: { nonhdl: -1.0 },
    statin: 1,
  },
  weight_loss: {
    label: "weight-loss program",
    deltas: { bmi: -5 },
  },
};
