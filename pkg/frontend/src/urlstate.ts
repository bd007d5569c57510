/** URL (de)serialization: the whole editor state lives in the query string,
 * so reloading or sharing a link reproduces the same request payloads. */

import { CurveEditState, defaultState } from "./types.js";

export function stateToQuery(state: CurveEditState): string {
  const q = new URLSearchParams();
  q.set("mode", state.mode);
  q.set("surface", state.surface);
  q.set("engine", state.engine);
  q.set("duration", String(state.duration));
  q.set("useed", String(state.uSeed));
  q.set("sseed", String(state.synthSeed));
  q.set("period", String(state.grf.period));
  q.set("jitter", String(state.grf.jitter));
  q.set("gseed", String(state.grf.seed));
  q.set(
    "pts",
    state.points.map((p) => `${p.time.toFixed(4)}:${p.level.toFixed(4)}`).join(","),
  );
  return q.toString();
}

export function stateFromQuery(query: string): CurveEditState {
  const q = new URLSearchParams(query);
  const state = defaultState();
  const num = (key: string, fallback: number) => {
    const raw = q.get(key);
    if (raw === null) return fallback;
    const value = Number(raw);
    return Number.isFinite(value) ? value : fallback;
  };
  const mode = q.get("mode");
  if (mode === "draw" || mode === "parametric") state.mode = mode;
  const engine = q.get("engine");
  if (engine === "model" || engine === "pa") state.engine = engine;
  state.surface = q.get("surface") ?? state.surface;
  state.duration = Math.min(Math.max(num("duration", state.duration), 0.1), 30);
  state.uSeed = Math.trunc(num("useed", state.uSeed));
  state.synthSeed = Math.trunc(num("sseed", state.synthSeed));
  state.grf.period = num("period", state.grf.period);
  state.grf.jitter = num("jitter", state.grf.jitter);
  state.grf.seed = Math.trunc(num("gseed", state.grf.seed));
  state.grf.duration = state.duration;
  const pts = q.get("pts");
  if (pts) {
    const parsed = pts
      .split(",")
      .map((pair) => pair.split(":").map(Number))
      .filter((xy) => xy.length === 2 && xy.every(Number.isFinite))
      .map(([time, level]) => ({ time, level: Math.max(0, level) }));
    if (parsed.length >= 2) state.points = parsed;
  }
  return state;
}
