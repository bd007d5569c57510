/** Application wiring: state <-> controls <-> URL, audition button. */

import { ApiClient } from "./api.js";
import { Auditioner } from "./audition.js";
import { stateFromQuery, stateToQuery } from "./urlstate.js";
import { DomView } from "./view.js";

function byId<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

async function boot() {
  const state = stateFromQuery(window.location.search);
  const api = new ApiClient("");
  const view = new DomView(state, () => {
    syncUrl();
    view.canvas.draw();
  });
  const auditioner = new Auditioner(api, view);

  const surfaceSel = byId<HTMLSelectElement>("surface");
  const modeSel = byId<HTMLSelectElement>("mode");
  const engineSel = byId<HTMLSelectElement>("engine");
  const periodInput = byId<HTMLInputElement>("period");
  const jitterInput = byId<HTMLInputElement>("jitter");
  const durationInput = byId<HTMLInputElement>("duration");
  const uSeedInput = byId<HTMLInputElement>("useed");
  const synthSeedInput = byId<HTMLInputElement>("sseed");

  function syncUrl() {
    history.replaceState(null, "", "?" + stateToQuery(state));
  }

  function readControls() {
    state.surface = surfaceSel.value;
    state.mode = modeSel.value === "draw" ? "draw" : "parametric";
    state.engine = engineSel.value === "pa" ? "pa" : "model";
    state.grf.period = Number(periodInput.value) || 0.5;
    state.grf.jitter = Math.min(Math.max(Number(jitterInput.value) || 0, 0), 0.2);
    state.duration = Math.min(Math.max(Number(durationInput.value) || 1, 0.2), 30);
    state.grf.duration = state.duration;
    state.uSeed = Math.trunc(Number(uSeedInput.value) || 0);
    state.synthSeed = Math.trunc(Number(synthSeedInput.value) || 0);
    byId("draw-hint").classList.toggle("hidden", state.mode !== "draw");
    syncUrl();
    view.canvas.draw();
  }

  try {
    const surfaces = await api.surfaces();
    for (const name of surfaces) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      surfaceSel.appendChild(opt);
    }
    if (!state.surface && surfaces.length) state.surface = surfaces[0];
    surfaceSel.value = state.surface;
  } catch (err) {
    view.showError(err instanceof Error ? err.message : String(err));
  }

  modeSel.value = state.mode;
  engineSel.value = state.engine;
  periodInput.value = String(state.grf.period);
  jitterInput.value = String(state.grf.jitter);
  durationInput.value = String(state.duration);
  uSeedInput.value = String(state.uSeed);
  synthSeedInput.value = String(state.synthSeed);
  byId("draw-hint").classList.toggle("hidden", state.mode !== "draw");

  for (const input of [surfaceSel, modeSel, engineSel, periodInput,
                       jitterInput, durationInput, uSeedInput, synthSeedInput]) {
    input.addEventListener("change", readControls);
  }

  byId<HTMLButtonElement>("audition-btn").addEventListener("click", () => {
    readControls();
    if (!state.surface) {
      view.showError("choose a surface first");
      return;
    }
    void auditioner.audition(state);
  });

  view.canvas.draw();
}

document.addEventListener("DOMContentLoaded", () => void boot());
