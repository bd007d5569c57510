/** Browser presentation: canvas curve editor, overlay plot, playback,
 * error banner. Kept behind the AuditionView interface so the
 * orchestration logic stays testable without a DOM. */

import { AuditionView } from "./audition.js";
import { normalizePoints } from "./curve.js";
import { AuditionResult, CurveEditState, CurvePoint } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export class CurveCanvas {
  private dragging: number | null = null;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly state: CurveEditState,
    private readonly onChange: () => void,
  ) {
    canvas.addEventListener("pointerdown", (e) => this.pointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.pointerMove(e));
    canvas.addEventListener("pointerup", () => (this.dragging = null));
    canvas.addEventListener("pointerleave", () => (this.dragging = null));
    canvas.addEventListener("dblclick", (e) => this.removeAt(e));
  }

  private toData(e: PointerEvent | MouseEvent): CurvePoint {
    const rect = this.canvas.getBoundingClientRect();
    const x = (e.clientX - rect.left) / rect.width;
    const y = 1 - (e.clientY - rect.top) / rect.height;
    return {
      time: Math.min(Math.max(x, 0), 1) * this.state.duration,
      level: Math.max(0, y * 1.2),
    };
  }

  private nearest(p: CurvePoint): number | null {
    let best: number | null = null;
    let bestDist = 0.05 * this.state.duration;
    this.state.points.forEach((q, i) => {
      const d = Math.abs(q.time - p.time);
      if (d < bestDist) {
        best = i;
        bestDist = d;
      }
    });
    return best;
  }

  private pointerDown(e: PointerEvent) {
    const p = this.toData(e);
    const hit = this.nearest(p);
    if (hit === null) {
      this.state.points.push(p);
      this.state.points = normalizePoints(this.state.points);
      this.dragging = this.nearest(p);
    } else {
      this.dragging = hit;
    }
    this.onChange();
  }

  private pointerMove(e: PointerEvent) {
    if (this.dragging === null) return;
    const p = this.toData(e);
    this.state.points[this.dragging] = p;
    this.onChange();
  }

  private removeAt(e: MouseEvent) {
    const hit = this.nearest(this.toData(e));
    if (hit !== null && this.state.points.length > 2) {
      this.state.points.splice(hit, 1);
      this.onChange();
    }
  }

  draw(requested?: number[], analyzed?: number[]) {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#11131a";
    ctx.fillRect(0, 0, width, height);

    const series = (values: number[], color: string, scaleMax: number) => {
      ctx.strokeStyle = color;
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      values.forEach((v, i) => {
        const x = (i / (values.length - 1)) * width;
        const y = height - (v / scaleMax) * height * 0.9;
        i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
      });
      ctx.stroke();
    };

    if (requested && requested.length > 1) {
      const top = Math.max(...requested, 1e-6);
      series(requested, "#4ea1ff", Math.max(top, 1.2));
    }
    if (analyzed && analyzed.length > 1) {
      series(analyzed, "#ffb454", Math.max(...analyzed, 1e-6) * 1.1);
    }
    if (this.state.mode === "draw") {
      ctx.fillStyle = "#4ea1ff";
      for (const p of this.state.points) {
        const x = (p.time / this.state.duration) * width;
        const y = height - (p.level / 1.2) * height * 0.9;
        ctx.beginPath();
        ctx.arc(x, y, 4, 0, Math.PI * 2);
        ctx.fill();
      }
    }
  }
}

export class DomView implements AuditionView {
  readonly canvas: CurveCanvas;
  private player: HTMLAudioElement;

  constructor(
    private readonly state: CurveEditState,
    onChange: () => void,
  ) {
    this.canvas = new CurveCanvas(el("curve-canvas"), state, onChange);
    this.player = el<HTMLAudioElement>("player");
  }

  showError(message: string) {
    const banner = el("error-banner");
    banner.textContent = message;
    banner.classList.remove("hidden");
  }

  clearError() {
    el("error-banner").classList.add("hidden");
  }

  setBusy(busy: boolean) {
    el<HTMLButtonElement>("audition-btn").disabled = busy;
    el("status").textContent = busy ? "synthesizing..." : "";
  }

  async play(audio: ArrayBuffer): Promise<void> {
    const blob = new Blob([audio], { type: "audio/wav" });
    const url = URL.createObjectURL(blob);
    this.player.src = url;
    try {
      await this.player.play();
    } catch {
      /* autoplay restrictions: the user can press play manually */
    }
  }

  showResult(result: AuditionResult) {
    el("correlation").textContent =
      `requested vs measured envelope: r = ${result.correlation.toFixed(3)}`;
    this.canvas.draw(result.requested.values, result.analyzed.values);
  }
}
