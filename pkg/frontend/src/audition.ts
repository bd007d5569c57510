/** Audition orchestration: resolve the control curve, synthesize, play,
 * analyze the result, and report the requested-vs-measured comparison.
 *
 * One request in flight at a time; starting a new audition aborts the
 * stale one. Every failure path ends in view.showError with the server's
 * message -- there are no silent failures.
 */

import { ApiClient, ApiError } from "./api.js";
import { curveToControl, pearson } from "./curve.js";
import {
  AuditionResult,
  ControlCurve,
  CONTROL_RATE,
  CurveEditState,
} from "./types.js";

/** What the orchestrator needs from the presentation layer. */
export interface AuditionView {
  showError(message: string): void;
  clearError(): void;
  setBusy(busy: boolean): void;
  play(audio: ArrayBuffer): Promise<void>;
  showResult(result: AuditionResult): void;
}

export class Auditioner {
  private inflight: AbortController | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly view: AuditionView,
  ) {}

  /** The γ array this state would send, or null in parametric mode. */
  async resolveCurve(state: CurveEditState): Promise<ControlCurve> {
    if (state.mode === "draw") {
      return {
        control_rate: CONTROL_RATE,
        dims: 1,
        values: curveToControl(state),
      };
    }
    return this.api.grf({ ...state.grf, duration: state.duration });
  }

  async audition(state: CurveEditState): Promise<AuditionResult | null> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    this.view.clearError();
    this.view.setBusy(true);
    try {
      const requested = await this.resolveCurve(state);
      const audio = await this.api.synthesize(
        {
          surface: state.surface,
          gamma: requested.values,
          u_seed: state.uSeed,
          synth_seed: state.synthSeed,
          engine: state.engine,
        },
        controller.signal,
      );
      if (controller.signal.aborted) return null;
      await this.view.play(audio);
      const analyzed = await this.api.analyze(audio, controller.signal);
      if (controller.signal.aborted) return null;
      const result: AuditionResult = {
        audio,
        requested,
        analyzed,
        correlation: pearson(requested.values, analyzed.values),
      };
      this.view.showResult(result);
      return result;
    } catch (err) {
      if (controller.signal.aborted) return null; // superseded, not an error
      const message =
        err instanceof ApiError
          ? `${err.message}${err.status ? ` (HTTP ${err.status})` : ""}`
          : err instanceof Error
            ? err.message
            : String(err);
      this.view.showError(message);
      return null;
    } finally {
      if (this.inflight === controller) {
        this.inflight = null;
        this.view.setBusy(false);
      }
    }
  }
}
