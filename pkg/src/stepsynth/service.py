"""HTTP service exposing synthesis and analysis to the companion UI.

JSON in, JSON or WAV bytes out.  Checkpoint state is read-only for the
process lifetime; per-request randomness comes only from request seeds, so
identical requests produce byte-identical responses.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import __version__, dsp, farnell, models
from .audio_io import wav_bytes, wav_from_bytes, resample
from .config import EngineConfig, default_config
from .errors import StepSynthError
from .synth import NoiseSpec

log = logging.getLogger("stepsynth.service")

MAX_WAV_BODY = 64 * 1024 * 1024


class GRFRequest(BaseModel):
    period: float = Field(0.5, gt=0.0, le=5.0)
    duration: float = Field(1.0, gt=0.0)
    fractions: tuple[float, float, float] = farnell.DEFAULT_FRACTIONS
    levels: tuple[float, float, float, float, float] = farnell.DEFAULT_LEVELS
    jitter: float = Field(0.0, ge=0.0, le=0.2)
    seed: int = 0


class SynthRequest(BaseModel):
    surface: str
    gamma: list[float] | None = None
    grf: GRFRequest | None = None
    duration: float | None = Field(None, gt=0.0)
    u_seed: int = 0
    synth_seed: int = 0
    engine: str = Field("model", pattern="^(model|pa)$")


def _grf_params(req: GRFRequest) -> farnell.GRFParams:
    return farnell.GRFParams(step_period=req.period,
                             segment_fractions=req.fractions,
                             levels=req.levels, jitter=req.jitter)


def create_app(config: EngineConfig | None = None, checkpoint=None,
               recipes: dict | None = None, static_dir=None) -> FastAPI:
    """Build the service app.

    `checkpoint` may be a ModelCheckpoint, a path, or None; synthesis with
    engine="model" answers 503 until one is loaded.  Analysis, the GRF
    generator, and the classical engine work without a checkpoint.
    """
    cfg = config or default_config()
    if isinstance(checkpoint, (str, Path)):
        checkpoint = models.ModelCheckpoint.load(checkpoint)
    if checkpoint is not None:
        cfg = checkpoint.config
    recipes = recipes or farnell.load_recipes()

    app = FastAPI(title="stepsynth", version=__version__)

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        detail = [
            {"field": ".".join(str(p) for p in err.get("loc", ())),
             "message": err.get("msg", "invalid")}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": detail})

    @app.exception_handler(StepSynthError)
    async def _engine_handler(request: Request, exc: StepSynthError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/api/health")
    def health():
        return {"version": __version__, "config_hash": cfg.config_hash(),
                "checkpoint_loaded": checkpoint is not None}

    @app.get("/api/surfaces")
    def surfaces():
        if checkpoint is not None:
            return {"surfaces": list(checkpoint.vocab), "source": "checkpoint"}
        return {"surfaces": sorted(recipes), "source": "recipes"}

    @app.post("/api/grf")
    def grf(req: GRFRequest):
        if req.duration > cfg.max_duration:
            raise HTTPException(422, f"duration exceeds {cfg.max_duration} s cap")
        curve = farnell.grf_curve(_grf_params(req), req.duration,
                                  cfg.control_rate, req.seed)
        return Response(content=curve.to_json(), media_type="application/json")

    def _resolve_gamma(req: SynthRequest) -> dsp.ControlSignal:
        if (req.gamma is None) == (req.grf is None):
            raise HTTPException(400, "provide exactly one of 'gamma' or 'grf'")
        if req.gamma is not None:
            values = np.asarray(req.gamma, dtype=np.float64)
            if values.size == 0 or values.size > int(cfg.max_duration * cfg.control_rate):
                raise HTTPException(422, "gamma length outside the allowed range")
            if not np.all(np.isfinite(values)) or np.any(values < 0):
                raise HTTPException(422, "gamma values must be finite and >= 0")
            return dsp.ControlSignal(values=values, control_rate=cfg.control_rate)
        duration = req.duration or req.grf.duration
        if duration > cfg.max_duration:
            raise HTTPException(422, f"duration exceeds {cfg.max_duration} s cap")
        return farnell.grf_curve(_grf_params(req.grf), duration,
                                 cfg.control_rate, req.grf.seed)

    @app.post("/api/synthesize")
    def synthesize_endpoint(req: SynthRequest):
        gamma = _resolve_gamma(req)
        if req.engine == "pa":
            if req.surface not in recipes:
                raise HTTPException(422, f"unknown surface {req.surface!r}")
            clip = farnell.pa_synthesize(recipes[req.surface], gamma,
                                         seed=req.synth_seed,
                                         sample_rate=cfg.sample_rate)
        else:
            if checkpoint is None or not checkpoint.has_control_encoder:
                raise HTTPException(503, "no trained checkpoint loaded")
            if req.surface not in checkpoint.vocab:
                raise HTTPException(422, f"unknown surface {req.surface!r}")
            label = models.SurfaceLabel(checkpoint.vocab.index(req.surface))
            u = models.make_u_noise(gamma.num_frames, cfg.n_gamma, req.u_seed,
                                    cfg.control_rate)
            clip = models.synthesize(label, gamma, u, req.synth_seed, checkpoint)
        return Response(content=wav_bytes(clip), media_type="audio/wav",
                        headers={"X-Envelope": "/api/analyze"})

    @app.post("/api/analyze")
    async def analyze(request: Request):
        body = await request.body()
        if len(body) > MAX_WAV_BODY:
            raise HTTPException(413, "WAV body too large")
        clip = wav_from_bytes(body, origin="<request body>")
        clip = resample(clip, cfg.sample_rate)
        curve = dsp.control_proxy(clip, smooth_iterations=cfg.smooth_iterations,
                                  lam=cfg.smooth_lambda,
                                  control_rate=cfg.control_rate)
        return Response(content=curve.to_json(), media_type="application/json")

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    else:
        @app.get("/")
        def index():
            return {"service": "stepsynth", "ui": "not bundled",
                    "api": ["/api/health", "/api/surfaces", "/api/grf",
                            "/api/synthesize", "/api/analyze"]}

    return app
