import type { ProfileForm, Scenario, Visit } from "./types.js";

export interface FieldError {
  field: string;
  message: string;
}

const RANGES: Record<string, [number, number]> = {
  sbp: [70, 250],
  sbpUnexposed: [70, 250],
  bmi: [10, 70],
  nonhdl: [0.5, 15],
  age: [18, 110],
};

/** Mediator delta bounds: a shifted value must stay inside its range. */
export const MEDIATOR_RANGES: Record<string, [number, number]> = {
  sbp: RANGES.sbp as [number, number],
  bmi: RANGES.bmi as [number, number],
  nonhdl: RANGES.nonhdl as [number, number],
};

function checkRange(field: string, value: number, errors: FieldError[]): void {
  const range = RANGES[field];
  if (!Number.isFinite(value)) {
    errors.push({ field, message: `${field} must be a number` });
    return;
  }
  if (range && (value < range[0] || value > range[1])) {
    errors.push({ field, message: `${field} must be between ${range[0]} and ${range[1]}` });
  }
}

export function validateProfile(form: ProfileForm): FieldError[] {
  const errors: FieldError[] = [];
  if (!form.patientId.trim()) {
    errors.push({ field: "patientId", message: "patient id is required" });
  }
  checkRange("age", form.age, errors);
  checkRange("sbp", form.sbp, errors);
  checkRange("sbpUnexposed", form.sbpUnexposed, errors);
  checkRange("bmi", form.bmi, errors);
  checkRange("nonhdl", form.nonhdl, errors);
  for (const field of ["sex", "diabetes", "statin", "antihypertensive"] as const) {
    if (form[field] !== 0 && form[field] !== 1) {
      errors.push({ field, message: `${field} must be 0 or 1` });
    }
  }
  return errors;
}

export function validateScenario(scenario: Scenario, profile: ProfileForm): FieldError[] {
  const errors: FieldError[] = [];
  if (!scenario.label.trim()) {
    errors.push({ field: "label", message: "scenario label is required" });
  }
  for (const [mediator, delta] of Object.entries(scenario.deltas ?? {})) {
    const range = MEDIATOR_RANGES[mediator];
    if (!range) {
      errors.push({ field: mediator, message: `unknown mediator ${mediator}` });
      continue;
    }
    const current = profile[mediator as "sbp" | "bmi" | "nonhdl"];
    const shifted = current + delta;
    if (shifted < range[0] || shifted > range[1]) {
      errors.push({
        field: mediator,
        message: `${mediator} shift of ${delta} leaves the ${range[0]}-${range[1]} range`,
      });
    }
  }
  return errors;
}

export function profileToVisit(form: ProfileForm): Visit {
  return {
    patient_id: form.patientId,
    t: 0,
    m: {
      sbp: form.sbp,
      sbp_unexposed: form.sbpUnexposed,
      bmi: form.bmi,
      nonhdl: form.nonhdl,
    },
    z: { age: form.age, sex: form.sex, diabetes: form.diabetes },
    a: { statin: form.statin, antihypertensive: form.antihypertensive },
  };
}
