"""Command-line front end: generate, repaint, bench, ablate, serve, inspect."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace as dc_replace

from . import bench as bench_mod
from . import latents
from .repaint import RepaintRequest
from .sampler import STRATEGIES, SamplerConfig
from .scene import SceneError, parse_scene, scene_from_json
from .store import DEFAULT_STORE_ENV, RunStore


def _store_root(args):
    return args.store or os.environ.get(DEFAULT_STORE_ENV) or os.path.join(os.getcwd(), "runs")


def _load_scene(args):
    if args.prompt:
        return parse_scene(args.prompt)
    if not args.scene:
        raise SceneError("provide --scene <file> or --prompt '<dsl>'")
    with open(args.scene, encoding="utf-8") as f:
        text = f.read()
    if args.scene.endswith(".json"):
        return scene_from_json(text)
    return parse_scene(text)


def _config_from(args) -> SamplerConfig:
    return SamplerConfig(
        T=args.steps, r=args.bind_steps, delta=args.delta, s=args.guidance,
        seed=args.seed, strategy=args.strategy,
        content_queries=args.content_queries,
    ).validate()


def _emit(args, payload, human):
    if getattr(args, "format", "text") == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def _add_sampler_flags(p):
    p.add_argument("--strategy", default="rag_full", choices=STRATEGIES)
    p.add_argument("--steps", type=int, default=20, help="total denoising steps T")
    p.add_argument("--bind-steps", type=int, default=5, dest="bind_steps",
                   help="hard-binding steps r")
    p.add_argument("--delta", type=float, default=0.8, help="refinement strength")
    p.add_argument("--guidance", type=float, default=3.5, help="guidance scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--content-queries", action="store_true", dest="content_queries")


def _add_common(p):
    p.add_argument("--store", default=None, help=f"store root (or ${DEFAULT_STORE_ENV})")
    p.add_argument("--format", default="text", choices=("text", "json"))


def cmd_generate(args):
    scene = _load_scene(args)
    cfg = _config_from(args)
    store = RunStore(_store_root(args))
    run_id = store.create_run(scene, cfg)
    out_dir = args.out or os.getcwd()
    os.makedirs(out_dir, exist_ok=True)
    for fmt in ("ppm", "png"):
        data = store.get_image_bytes(run_id, fmt)
        with open(os.path.join(out_dir, f"image.{fmt}"), "wb") as f:
            f.write(data)
    _emit(args, {"run_id": run_id, "out": out_dir}, run_id)
    return 0


def cmd_repaint(args):
    store = RunStore(_store_root(args))
    req = RepaintRequest(
        region_index=args.region,
        base=tuple(args.base.split()) if args.base else None,
        detail=tuple(args.detail.split()) if args.detail else None,
        nonce=args.nonce if args.nonce is not None else store.count_children(args.run) + 1,
    )
    child = store.create_repaint(args.run, req)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for fmt in ("ppm", "png"):
            with open(os.path.join(args.out, f"image.{fmt}"), "wb") as f:
                f.write(store.get_image_bytes(child, fmt))
    _emit(args, {"run_id": child, "parent_run": args.run}, child)
    return 0


def cmd_bench(args):
    suite = bench_mod.make_suite(args.suite, seed=args.seed, count=args.count)
    strategies = args.strategies.split(",")
    cfg = SamplerConfig(T=args.steps, r=args.bind_steps, delta=args.delta,
                        s=args.guidance).validate()
    rows, details = bench_mod.run_benchmark(suite, strategies, cfg)
    out_dir = args.out or "bench_out"
    images = None
    if args.images:
        scenes = bench_mod.generate_suite(suite)
        rows2, det_img = bench_mod.run_benchmark(suite, strategies[:1], cfg,
                                                 scenes=scenes[:4], collect_images=True)
        images = {f"{strategies[0]}_{i}": r["image"]
                  for i, r in enumerate(det_img[strategies[0]])}
    csv_path = bench_mod.emit_report(rows, out_dir, images=images)
    _emit(args, {"csv": csv_path, "rows": [r.as_tuple() for r in rows]},
          bench_mod.rows_to_table(rows))
    return 0


def cmd_ablate(args):
    suite = bench_mod.make_suite(args.suite, seed=args.seed, count=args.count)
    scenes = bench_mod.generate_suite(suite)
    base_cfg = SamplerConfig(T=args.steps, s=args.guidance).validate()
    r_values = [int(v) for v in args.r_values.split(",")] if args.r_values else \
        [0, args.steps // 4, args.steps // 2, args.steps]
    d_values = [float(v) for v in args.delta_values.split(",")] if args.delta_values else \
        [0.0, 0.25, 0.5, 0.8, 1.0]
    rows = []
    sheet_tiles = []
    for r in r_values:
        for d in d_values:
            strategy = "global_only" if (r == 0 and d == 0.0) else "rag_full"
            cfg = dc_replace(base_cfg, r=r, delta=d, strategy=strategy).validate()
            cell_rows, details = bench_mod.run_benchmark(
                suite, [strategy], cfg, scenes=scenes, collect_images=True)
            row = cell_rows[0]
            row.strategy = f"r={r},delta={d}"
            rows.append(row)
            sheet_tiles.append((r, d, details[strategy][0]["image"]))
    out_dir = args.out or "ablate_out"
    bench_mod.emit_report(rows, out_dir)
    _write_contact_sheet(sheet_tiles, r_values, d_values, out_dir)
    _emit(args, {"rows": [r.as_tuple() for r in rows], "out": out_dir},
          bench_mod.rows_to_table(rows))
    return 0


def _write_contact_sheet(tiles, r_values, d_values, out_dir):
    import numpy as np

    if not tiles:
        return
    h, w = tiles[0][2].shape[:2]
    pad = 2
    sheet = np.ones(((h + pad) * len(r_values) + pad,
                     (w + pad) * len(d_values) + pad, 3), dtype=np.float32)
    for r, d, img in tiles:
        ri = r_values.index(r)
        di = d_values.index(d)
        y = pad + ri * (h + pad)
        x = pad + di * (w + pad)
        sheet[y:y + h, x:x + w] = np.clip(img, 0.0, 1.0)
    latents.save_png(os.path.join(out_dir, "contact_sheet.png"), sheet)
    latents.save_ppm(os.path.join(out_dir, "contact_sheet.ppm"), sheet)


def cmd_serve(args):
    from .service import serve

    serve(_store_root(args), host=args.host, port=args.port, static_dir=args.static)
    return 0


def cmd_inspect(args):
    store = RunStore(_store_root(args))
    with open(store.record_path(args.run_id), encoding="utf-8") as f:
        text = f.read()
    print(text)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="regioncomp",
                                description="Region-aware compositional sampling toybox")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate an image from a scene")
    g.add_argument("--scene", help="scene DSL or .json file")
    g.add_argument("--prompt", help="inline scene DSL")
    g.add_argument("--out", help="output directory for image files")
    _add_sampler_flags(g)
    _add_common(g)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("repaint", help="repaint a region of a stored run")
    r.add_argument("--run", required=True)
    r.add_argument("--region", type=int, required=True)
    r.add_argument("--base", help="replacement fundamental tokens")
    r.add_argument("--detail", help="replacement descriptive tokens")
    r.add_argument("--nonce", type=int, default=None)
    r.add_argument("--out")
    _add_common(r)
    r.set_defaults(func=cmd_repaint)

    b = sub.add_parser("bench", help="run the compositional benchmark")
    b.add_argument("--suite", default="ambiguous3")
    b.add_argument("--seed", type=int, default=11)
    b.add_argument("--count", type=int, default=50)
    b.add_argument("--strategies", default="global_only,rag_full")
    b.add_argument("--steps", type=int, default=20)
    b.add_argument("--bind-steps", type=int, default=5, dest="bind_steps")
    b.add_argument("--delta", type=float, default=0.8)
    b.add_argument("--guidance", type=float, default=3.5)
    b.add_argument("--images", action="store_true")
    b.add_argument("--out")
    _add_common(b)
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("ablate", help="sweep r and delta")
    a.add_argument("--suite", default="pairs")
    a.add_argument("--seed", type=int, default=23)
    a.add_argument("--count", type=int, default=20)
    a.add_argument("--steps", type=int, default=20)
    a.add_argument("--guidance", type=float, default=3.5)
    a.add_argument("--r-values", dest="r_values")
    a.add_argument("--delta-values", dest="delta_values")
    a.add_argument("--out")
    _add_common(a)
    a.set_defaults(func=cmd_ablate)

    s = sub.add_parser("serve", help="launch the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.add_argument("--static", default=None, help="static asset directory for the UI")
    _add_common(s)
    s.set_defaults(func=cmd_serve)

    i = sub.add_parser("inspect", help="print a stored run record verbatim")
    i.add_argument("run_id")
    _add_common(i)
    i.set_defaults(func=cmd_inspect)

    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SceneError, ValueError, OSError, KeyError) as e:
        msg = str(e)
        if getattr(args, "format", "text") == "json":
            print(json.dumps({"error": {"message": msg}}), file=sys.stderr)
        else:
            print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
