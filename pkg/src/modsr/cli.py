"""Command-line multiplexer over degradation, training, scoring,
restoration, evaluation sweeps, modulation grids and the HTTP service.

Exit codes: 0 success, 1 usage error, 2 runtime failure. Every
subcommand that draws randomness accepts --seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    p = _Parser(prog="modsr", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("degrade", help="corrupt an image with a sampled recipe")
    d.add_argument("--image", required=True)
    d.add_argument("--config", help="DegradeConfig JSON file")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True, help="output PNG path")
    d.add_argument("--recipe-out", help="recipe sidecar JSON (default: <out>.recipe.json)")

    t = sub.add_parser("train", help="run the two-stage training schedule")
    t.add_argument("--config", help="TrainConfig JSON file")
    t.add_argument("--out-dir", required=True)
    t.add_argument("--resume", help="checkpoint to continue from")
    t.add_argument("--seed", type=int, help="override the config seed")
    t.add_argument("--iterations", type=int, help="stop early after N iterations")

    s = sub.add_parser("score", help="print degradation scores for an image")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--image", required=True)

    r = sub.add_parser("restore", help="x4 restore an image")
    r.add_argument("--checkpoint", required=True)
    r.add_argument("--image", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--scores", help="manual 's_n,s_b' pair; omitted = automatic")

    w = sub.add_parser("sweep", help="20-point degradation sweeps and rank correlations")
    w.add_argument("--checkpoint", required=True)
    w.add_argument("--kind", choices=["gaussian-noise", "gaussian-blur", "jpeg", "all"],
                   default="all")
    w.add_argument("--out-dir", required=True)
    w.add_argument("--images", type=int, default=16, help="held-out image count")
    w.add_argument("--seed", type=int, default=7)

    m = sub.add_parser("modgrid", help="restore one image under a grid of score pairs")
    m.add_argument("--checkpoint", required=True)
    m.add_argument("--image", required=True)
    m.add_argument("--out-dir", required=True)
    m.add_argument("--values", default="0,0.5,1",
                   help="comma list; the grid is its cartesian square")

    v = sub.add_parser("serve", help="run the HTTP inference service")
    v.add_argument("--checkpoint", help="checkpoint path (or MODSR_CHECKPOINT)")
    v.add_argument("--host", default=None)
    v.add_argument("--port", type=int, default=None)
    v.add_argument("--max-edge", type=int, default=1024)
    v.add_argument("--timeout", type=float, default=60.0)
    return p


def _cmd_degrade(args) -> int:
    from modsr.degrade import DegradeConfig, apply_recipe, sample_recipe
    from modsr.images import load_image, save_image

    cfg = DegradeConfig()
    if args.config:
        with open(args.config) as fh:
            cfg = DegradeConfig.from_json(fh.read())
    img = load_image(args.image)
    recipe = sample_recipe(cfg, np.random.default_rng(args.seed))
    out = apply_recipe(img, recipe)
    save_image(out, args.out)
    sidecar = args.recipe_out or args.out + ".recipe.json"
    with open(sidecar, "w") as fh:
        fh.write(recipe.to_json())
    print(json.dumps({"out": args.out, "recipe": sidecar,
                      "shape": list(out.shape)}))
    return 0


def _cmd_train(args) -> int:
    from modsr.train import TrainConfig, run_training

    cfg = TrainConfig()
    if args.config:
        with open(args.config) as fh:
            cfg = TrainConfig.from_json(fh.read())
    if args.seed is not None:
        cfg.seed = args.seed

    def log(report):
        print(report.to_json(), flush=True)

    run_training(cfg, out_dir=args.out_dir, resume=args.resume,
                 log_fn=log, iterations=args.iterations)
    print(json.dumps({"final_checkpoint": os.path.join(args.out_dir, "ckpt_final.ckpt")}))
    return 0


def _load_models(path: str):
    from modsr.checkpoint import load_checkpoint, models_from_checkpoint
    models, _ = models_from_checkpoint(load_checkpoint(path))
    return models


def _cmd_score(args) -> int:
    from modsr.images import load_image
    from modsr.nets import score_image

    models = _load_models(args.checkpoint)
    pair = score_image(models.udem, load_image(args.image)).clamped()
    print(json.dumps({"s_n": pair.s_n, "s_b": pair.s_b}))
    return 0


def _cmd_restore(args) -> int:
    from modsr.images import load_image, save_image
    from modsr.nets import ScorePair, restore_image

    models = _load_models(args.checkpoint)
    scores = None
    if args.scores:
        try:
            s_n, s_b = (float(v) for v in args.scores.split(","))
        except ValueError:
            raise SystemExit(1)
        scores = ScorePair(s_n, s_b)
    out = restore_image(models, load_image(args.image), scores)
    save_image(out, args.out)
    print(json.dumps({"out": args.out, "shape": list(out.shape)}))
    return 0


def _cmd_sweep(args) -> int:
    from modsr.evaluate import SWEEP_KINDS, degradation_sweep
    from modsr.images import synthetic_corpus

    models = _load_models(args.checkpoint)
    imgs = synthetic_corpus(args.images, 128, seed=args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    kinds = SWEEP_KINDS if args.kind == "all" else (args.kind,)
    summary = []
    for kind in kinds:
        res = degradation_sweep(models.udem, imgs, kind, seed=args.seed)
        res.write_csv(os.path.join(args.out_dir, f"sweep_{kind}.csv"))
        summary.append({"kind": kind, "rho": res.rho, "range": res.dynamic_range})
    with open(os.path.join(args.out_dir, "sweep_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    print(json.dumps(summary))
    return 0


def _cmd_modgrid(args) -> int:
    from PIL import Image

    from modsr.evaluate import modulation_grid
    from modsr.images import load_image, save_image, to_uint8
    from modsr.nets import ScorePair

    models = _load_models(args.checkpoint)
    img = load_image(args.image)
    values = [float(v) for v in args.values.split(",")]
    grid = [ScorePair(sn, sb) for sn in values for sb in values]
    outputs, dist = modulation_grid(models, img, grid)

    os.makedirs(args.out_dir, exist_ok=True)
    n = len(values)
    h, w = outputs[0].shape[1], outputs[0].shape[2]
    pad = 4
    sheet = Image.new("RGB", (n * w + (n + 1) * pad, n * h + (n + 1) * pad), "white")
    for idx, (sp, out) in enumerate(zip(grid, outputs)):
        save_image(out, os.path.join(args.out_dir, f"restore_sn{sp.s_n:g}_sb{sp.s_b:g}.png"))
        row, col = divmod(idx, n)
        tile = Image.fromarray(to_uint8(out).transpose(1, 2, 0))
        sheet.paste(tile, (pad + col * (w + pad), pad + row * (h + pad)))
    sheet.save(os.path.join(args.out_dir, "modulation_grid.png"))
    with open(os.path.join(args.out_dir, "distances.json"), "w") as fh:
        json.dump({"pairs": [[sp.s_n, sp.s_b] for sp in grid],
                   "mean_l1": dist.tolist()}, fh, indent=2)
    print(json.dumps({"grid": len(grid), "out_dir": args.out_dir}))
    return 0


def _cmd_serve(args) -> int:
    from modsr.service import ServiceConfig, serve

    overrides = {"max_edge": args.max_edge, "timeout_s": args.timeout}
    if args.checkpoint:
        overrides["checkpoint"] = args.checkpoint
    cfg = ServiceConfig.from_env(**overrides)
    if args.host:
        cfg.host = args.host
    if args.port:
        cfg.port = args.port
    serve(cfg)
    return 0


_COMMANDS = {
    "degrade": _cmd_degrade,
    "train": _cmd_train,
    "score": _cmd_score,
    "restore": _cmd_restore,
    "sweep": _cmd_sweep,
    "modgrid": _cmd_modgrid,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SystemExit:
        raise
    except Exception as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
