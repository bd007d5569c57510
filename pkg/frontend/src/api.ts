/** Typed client for the synthesis service; every failure carries the
 * server's message so the UI can surface it verbatim. */

import { ControlCurve, EngineKind, GRFParams } from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface SynthesizeRequest {
  surface: string;
  gamma?: number[];
  grf?: GRFParams;
  duration?: number;
  u_seed: number;
  synth_seed: number;
  engine: EngineKind;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function errorMessage(resp: Response): Promise<string> {
  try {
    const body = await resp.json();
    if (typeof body.detail === "string") return body.detail;
    if (Array.isArray(body.detail)) {
      return body.detail
        .map((d: { field?: string; message?: string }) =>
          d.field ? `${d.field}: ${d.message}` : (d.message ?? ""),
        )
        .join("; ");
    }
  } catch {
    /* non-JSON error body */
  }
  return `request failed with status ${resp.status}`;
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async checked(path: string, init?: RequestInit): Promise<Response> {
    let resp: Response;
    try {
      resp = await this.fetchImpl(this.base + path, init);
    } catch (err) {
      throw new ApiError(`backend unreachable: ${String(err)}`, 0);
    }
    if (!resp.ok) {
      throw new ApiError(await errorMessage(resp), resp.status);
    }
    return resp;
  }

  async health(): Promise<{ version: string; config_hash: string }> {
    return (await this.checked("/api/health")).json();
  }

  async surfaces(): Promise<string[]> {
    const body = await (await this.checked("/api/surfaces")).json();
    return body.surfaces;
  }

  async grf(params: GRFParams): Promise<ControlCurve> {
    const resp = await this.checked("/api/grf", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(params),
    });
    return resp.json();
  }

  async synthesize(
    req: SynthesizeRequest,
    signal?: AbortSignal,
  ): Promise<ArrayBuffer> {
    const resp = await this.checked("/api/synthesize", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
      signal,
    });
    return resp.arrayBuffer();
  }

  async analyze(wav: ArrayBuffer, signal?: AbortSignal): Promise<ControlCurve> {
    const resp = await this.checked("/api/analyze", {
      method: "POST",
      headers: { "content-type": "audio/wav" },
      body: wav,
      signal,
    });
    return resp.json();
  }
}
