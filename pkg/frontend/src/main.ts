/** Browser bootstrap: binds the pure state/render modules to the page. */

import { ApiClient } from "./api.js";
import { JANE, SCENARIO_PRESETS } from "./presets.js";
import { renderComparison, renderErrors, renderHistory, renderModelSwitcher } from "./render.js";
import {
  addScenario,
  AppState,
  initialState,
  previewKnockOn,
  recordVisit,
  submitComparison,
  switchModel,
} from "./state.js";

const client = new ApiClient(window.location.origin);

let state: AppState;
let modelNames: string[] = [];

function draw(): void {
  byId("errors").innerHTML = renderErrors(state);
  byId("comparison").innerHTML = renderComparison(state.comparison);
  byId("history").innerHTML = renderHistory(state.history);
  byId("models").innerHTML = renderModelSwitcher(modelNames, state.modelName);
  const switcher = document.querySelector<HTMLSelectElement>("[data-role=model-switcher]");
  switcher?.addEventListener("change", async () => {
    state = await switchModel(client, state, switcher.value);
    draw();
  });
}

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
}

async function boot(): Promise<void> {
  const models = await client.listModels();
  modelNames = models.map((m) => m.name);
  state = initialState(JANE, modelNames[0] ?? "");

  for (const [key, preset] of Object.entries(SCENARIO_PRESETS)) {
    document.querySelector(`[data-preset=${key}]`)?.addEventListener("click", async () => {
      state = addScenario(state, preset);
      state = await previewKnockOn(client, state, preset);
      draw();
    });
  }
  byId("compare").addEventListener("click", async () => {
    state = await submitComparison(client, state);
    draw();
  });
  byId("record-visit").addEventListener("click", async () => {
    state = await recordVisit(client, state);
    draw();
  });
  draw();
}

boot().catch((err) => {
  byId("errors").innerHTML = `<div class="banner error">service unreachable: ${String(err)}</div>`;
});
