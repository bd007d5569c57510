/** Shared wire and editor types. */

/** Control curve as the backend serializes it. */
export interface ControlCurve {
  control_rate: number;
  dims: number;
  values: number[];
}

/** Parameters of the parametric force-curve generator. */
export interface GRFParams {
  period: number;
  duration: number;
  jitter: number;
  seed: number;
}

export interface CurvePoint {
  /** seconds */
  time: number;
  /** force level, >= 0 */
  level: number;
}

export type CurveMode = "draw" | "parametric";

export type EngineKind = "model" | "pa";

/** Everything the editor needs to reproduce a request. */
export interface CurveEditState {
  mode: CurveMode;
  points: CurvePoint[];
  grf: GRFParams;
  duration: number;
  surface: string;
  engine: EngineKind;
  uSeed: number;
  synthSeed: number;
}

export interface AuditionResult {
  audio: ArrayBuffer;
  requested: ControlCurve;
  analyzed: ControlCurve;
  correlation: number;
}

export const CONTROL_RATE = 250;
export const MAX_DURATION = 30;

export function defaultState(): CurveEditState {
  return {
    mode: "parametric",
    points: [
      { time: 0, level: 0 },
      { time: 1, level: 0 },
    ],
    grf: { period: 0.5, duration: 2, jitter: 0, seed: 0 },
    duration: 2,
    surface: "",
    engine: "model",
    uSeed: 0,
    synthSeed: 0,
  };
}
