"""Command-line entry points for the full pipeline.

Subcommands: analyze, grf, synth-pa, train-stage1, train-stage2, synth,
eval, serve.  Every run logs its config hash and all seeds so artifacts
are reproducible from the log line alone.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__, dsp, farnell, metrics, models, training
from .audio_io import load_manifest, read_wav, resample, write_wav
from .config import EngineConfig, default_config
from .errors import StepSynthError

log = logging.getLogger("stepsynth")


def _load_config(args) -> EngineConfig:
    if getattr(args, "config", None):
        return EngineConfig.load(args.config)
    return default_config()


def _log_run(cfg: EngineConfig, **seeds) -> None:
    seed_text = " ".join(f"{k}={v}" for k, v in seeds.items())
    log.info("config_hash=%s %s", cfg.config_hash(), seed_text)


def _read_gamma(path, cfg: EngineConfig) -> dsp.ControlSignal:
    curve = dsp.ControlSignal.from_json(Path(path).read_text(encoding="utf-8"))
    if curve.control_rate != cfg.control_rate:
        raise StepSynthError(
            f"curve rate {curve.control_rate} != engine rate {cfg.control_rate}")
    return curve


def cmd_analyze(args) -> int:
    cfg = _load_config(args)
    _log_run(cfg)
    clip = resample(read_wav(args.infile), cfg.sample_rate)
    curve = dsp.control_proxy(clip, smooth_iterations=cfg.smooth_iterations,
                              lam=cfg.smooth_lambda,
                              control_rate=cfg.control_rate)
    Path(args.out).write_text(curve.to_json(), encoding="utf-8")
    log.info("wrote %s (%d frames)", args.out, curve.num_frames)
    return 0


def cmd_grf(args) -> int:
    cfg = _load_config(args)
    _log_run(cfg, seed=args.seed)
    params = farnell.GRFParams(step_period=args.period, jitter=args.jitter)
    curve = farnell.grf_curve(params, args.duration, cfg.control_rate, args.seed)
    Path(args.out).write_text(curve.to_json(), encoding="utf-8")
    log.info("wrote %s (%d frames)", args.out, curve.num_frames)
    return 0


def cmd_synth_pa(args) -> int:
    cfg = _load_config(args)
    _log_run(cfg, seed=args.seed)
    recipes = farnell.load_recipes(args.recipes)
    if args.surface not in recipes:
        raise StepSynthError(f"unknown surface {args.surface!r}; "
                             f"have {sorted(recipes)}")
    if args.gamma:
        curve = _read_gamma(args.gamma, cfg)
    else:
        curve = farnell.grf_curve(farnell.GRFParams(step_period=args.period),
                                  args.duration, cfg.control_rate, args.seed)
    clip = farnell.pa_synthesize(recipes[args.surface], curve, seed=args.seed,
                                 sample_rate=cfg.sample_rate)
    write_wav(args.out, clip)
    log.info("wrote %s (%.2f s)", args.out, clip.duration)
    return 0


def _train_config(args, cfg: EngineConfig) -> training.TrainConfig:
    return training.TrainConfig(
        engine=cfg, learning_rate=args.lr, batch_size=args.batch,
        steps=args.steps, excerpt_seconds=args.excerpt, seed=args.seed)


def cmd_train_stage1(args) -> int:
    cfg = _load_config(args)
    _log_run(cfg, seed=args.seed, data_seed=args.data_seed)
    manifest = load_manifest(args.manifest)
    items = training.build_dataset(manifest, cfg, seed=args.data_seed)
    ckpt, trace = training.train_stage1(items, _train_config(args, cfg))
    ckpt.save(args.out)
    if args.trace:
        training.write_loss_csv(args.trace, trace)
    log.info("stage1 done: loss %.4f -> %.4f, checkpoint %s",
             trace[0][1] if trace else float("nan"),
             trace[-1][1] if trace else float("nan"), args.out)
    return 0


def cmd_train_stage2(args) -> int:
    cfg = _load_config(args)
    _log_run(cfg, seed=args.seed, data_seed=args.data_seed)
    manifest = load_manifest(args.manifest)
    stage1 = models.ModelCheckpoint.load(args.stage1)
    items = training.build_dataset(manifest, stage1.config, seed=args.data_seed)
    ckpt, trace = training.train_stage2(items, stage1,
                                        _train_config(args, stage1.config))
    ckpt.save(args.out)
    if args.trace:
        training.write_loss_csv(args.trace, trace)
    log.info("stage2 done: loss %.5f -> %.5f, checkpoint %s",
             trace[0][1] if trace else float("nan"),
             trace[-1][1] if trace else float("nan"), args.out)
    return 0


def cmd_synth(args) -> int:
    ckpt = models.ModelCheckpoint.load(args.checkpoint)
    cfg = ckpt.config
    _log_run(cfg, seed=args.seed, u_seed=args.u_seed)
    if args.surface not in ckpt.vocab:
        raise StepSynthError(f"unknown surface {args.surface!r}; "
                             f"vocabulary {ckpt.vocab}")
    if args.gamma:
        curve = _read_gamma(args.gamma, cfg)
    else:
        curve = farnell.grf_curve(farnell.GRFParams(step_period=args.period),
                                  args.duration, cfg.control_rate, args.seed)
    label = models.SurfaceLabel(ckpt.vocab.index(args.surface))
    u = models.make_u_noise(curve.num_frames, cfg.n_gamma, args.u_seed,
                            cfg.control_rate)
    clip = models.synthesize(label, curve, u, args.seed, ckpt)
    write_wav(args.out, clip)
    log.info("wrote %s (%.2f s)", args.out, clip.duration)
    return 0


def _embed_dir(path, name, cfg) -> metrics.EmbeddingSet:
    wavs = sorted(Path(path).glob("*.wav"))
    if not wavs:
        raise StepSynthError(f"no .wav files in {path}")
    clips = [resample(read_wav(p), cfg.sample_rate) for p in wavs]
    return metrics.embed_clips(clips, name=name, config=cfg)


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    _log_run(cfg)
    set_a = _embed_dir(args.set_a, args.name_a or Path(args.set_a).name, cfg)
    set_b = _embed_dir(args.set_b, args.name_b or Path(args.set_b).name, cfg)
    report = metrics.evaluate_sets([set_a, set_b], kernel=args.kernel, config=cfg)
    print(report.table())
    if args.out_json:
        Path(args.out_json).write_text(report.to_json(), encoding="utf-8")
    if args.out_csv:
        report.write_csv(args.out_csv)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = _load_config(args)
    _log_run(cfg)
    static = args.ui_dir
    if static is None:
        candidate = Path.cwd() / "frontend" / "dist"
        static = candidate if candidate.is_dir() else None
    app = create_app(config=cfg, checkpoint=args.checkpoint, static_dir=static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stepsynth",
        description="Controllable procedural-audio engine CLI")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="engine config file (key = value)")

    p = sub.add_parser("analyze", help="audio -> control-signal JSON")
    common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("grf", help="force-curve generator -> curve JSON")
    common(p)
    p.add_argument("--period", type=float, default=0.5)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grf)

    p = sub.add_parser("synth-pa", help="classical baseline -> WAV")
    common(p)
    p.add_argument("--surface", required=True)
    p.add_argument("--gamma", help="curve JSON (omit to use the generator)")
    p.add_argument("--period", type=float, default=0.5)
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--recipes", help="recipe JSON file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_pa)

    for stage in (1, 2):
        p = sub.add_parser(f"train-stage{stage}",
                           help=f"train stage {stage} -> checkpoint + loss CSV")
        common(p)
        p.add_argument("--manifest", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--trace", help="loss trace CSV path")
        p.add_argument("--steps", type=int, default=2000)
        p.add_argument("--batch", type=int, default=8)
        p.add_argument("--lr", type=float, default=1e-3)
        p.add_argument("--excerpt", type=float, default=1.0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--data-seed", type=int, default=0)
        if stage == 2:
            p.add_argument("--stage1", required=True)
            p.set_defaults(func=cmd_train_stage2)
        else:
            p.set_defaults(func=cmd_train_stage1)

    p = sub.add_parser("synth", help="trained model -> WAV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--surface", required=True)
    p.add_argument("--gamma", help="curve JSON (omit to use the generator)")
    p.add_argument("--period", type=float, default=0.5)
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--u-seed", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="FAD/MMD between two WAV directories")
    common(p)
    p.add_argument("--set-a", required=True)
    p.add_argument("--set-b", required=True)
    p.add_argument("--name-a")
    p.add_argument("--name-b")
    p.add_argument("--kernel", choices=["rbf", "linear"], default="rbf")
    p.add_argument("--out-json")
    p.add_argument("--out-csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP service")
    common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui-dir", help="static frontend directory")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StepSynthError as exc:
        log.error("%s", exc)
        return 1
    except OSError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
