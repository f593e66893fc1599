"""Command-line pipeline: generate | extract-mesh | refine-texture | render.

Configuration is a flat key=value text file; any flag given on the
command line overrides the file. Unknown keys are rejected. Every run
writes a manifest (resolved config, seed, config hash, versions) that
suffices to reproduce its outputs byte for byte.

Exit codes: 0 success, 2 config validation, 3 runtime failure,
4 guidance transport failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .backend import active_backend
from .core import Camera, ImageBuffer, ply_load, ply_save
from .errors import (
    GuidanceTransportError,
    InvalidParameterError,
    SplatgenError,
)
from .guidance import OracleGuidance, RemoteGuidance, ZeroGuidance
from .meshex import build_grid, marching_cubes, postprocess
from .renderer import render
from .texturer import (
    backproject,
    export_bundle,
    import_bundle,
    refine_texture,
    render_mesh,
    unwrap,
    write_obj_geometry,
)
from .texturer.atlas import UVAtlas
from .trainer import ReferenceInput, TrainConfig, train_stage1

GUIDANCE_URL_ENV = "SPLATGEN_GUIDANCE_URL"

# every accepted config key with its parser
_KEY_TYPES = {
    "steps": int, "mode": str, "radius": float, "fov_y": float,
    "azimuth_min": float, "azimuth_max": float,
    "elevation_min": float, "elevation_max": float,
    "resolution_start": int, "resolution_end": int,
    "lambda_rgb_max": float, "lambda_alpha_max": float,
    "densify_interval": int, "densify_grad_threshold": float,
    "densify_max_scale": float, "prune_opacity": float, "prune_max_scale": float,
    "lr_center_start": float, "lr_center_end": float, "lr_color": float,
    "lr_opacity": float, "lr_scale": float, "lr_rotation": float,
    "timestep_start": float, "timestep_end": float, "sds_weight": float,
    "init_count": int, "init_radius": float, "seed": int,
    "input_image": str, "prompt": str, "guidance": str, "out": str,
    "ref_elevation": float, "mc_threshold": float, "target_faces": int,
    "smooth_iters": int, "texture_res": int, "stage2_steps": int,
    "t_start": float, "lr_texture": float, "checkpoint_every": int,
    "culling": str,
}


class ConfigError(SplatgenError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class RunConfig:
    train: TrainConfig
    guidance: str = "zero"
    out: str = "runs/out"
    input_image: str | None = None
    prompt: str | None = None
    ref_elevation: float = 0.0
    mc_threshold: float = 1.0
    target_faces: int = 50_000
    smooth_iters: int = 3
    texture_res: int = 1024
    stage2_steps: int = 50
    t_start: float = 0.5
    lr_texture: float = 0.2
    checkpoint_every: int = 0
    culling: str = "bbox"
    raw: dict = field(default_factory=dict)

    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def load_config_file(path) -> dict:
    values = {}
    problems = []
    try:
        lines = open(path).read().splitlines()
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
    for ln, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            problems.append(f"{path}:{ln}: expected key=value, got {body!r}")
            continue
        key, value = body.split("=", 1)
        values[key.strip()] = value.strip()
    if problems:
        raise ConfigError(problems)
    return values


def resolve_config(file_values: dict, overrides: dict,
                   needs_conditioning: bool = True) -> RunConfig:
    """Merge file values and CLI overrides (flags win), validate everything,
    reporting every violation at once. Commands that neither train nor
    refine (extract-mesh, render) pass needs_conditioning=False."""
    problems = []
    merged = dict(file_values)
    merged.update({k: v for k, v in overrides.items() if v is not None})

    typed = {}
    for key, value in merged.items():
        if key not in _KEY_TYPES:
            problems.append(f"unknown config key {key!r}")
            continue
        try:
            typed[key] = _KEY_TYPES[key](value)
        except (TypeError, ValueError):
            problems.append(f"config key {key!r}: cannot parse {value!r}")

    mode = typed.get("mode", "image")
    has_image = bool(typed.get("input_image"))
    has_prompt = bool(typed.get("prompt"))
    if has_image and has_prompt:
        problems.append("exactly one of input_image / prompt may be set, got both")
    if needs_conditioning:
        if mode == "image" and not has_image:
            problems.append("mode=image requires input_image")
        if mode == "text" and not has_prompt:
            problems.append("mode=text requires prompt")
    if has_image and not os.path.exists(typed.get("input_image", "")):
        problems.append(f"input_image does not exist: {typed.get('input_image')!r}")

    guidance = typed.get("guidance", "zero")
    if guidance not in ("zero",) and not guidance.startswith(("oracle:", "remote:")):
        problems.append(
            f"guidance must be zero, oracle:<scene.ply> or remote:<url>, got {guidance!r}"
        )
    if guidance.startswith("oracle:") and not os.path.exists(guidance.split(":", 1)[1]):
        problems.append(f"oracle scene file does not exist: {guidance.split(':', 1)[1]!r}")
    if typed.get("culling", "bbox") not in ("bbox", "center"):
        problems.append("culling must be bbox or center")

    train_keys = {
        "steps", "mode", "radius", "fov_y", "resolution_start", "resolution_end",
        "lambda_rgb_max", "lambda_alpha_max", "densify_interval",
        "densify_grad_threshold", "densify_max_scale", "prune_opacity",
        "prune_max_scale", "lr_center_start", "lr_center_end", "lr_color",
        "lr_opacity", "lr_scale", "lr_rotation", "timestep_start",
        "timestep_end", "sds_weight", "init_count", "init_radius", "seed",
    }
    train_kwargs = {k: v for k, v in typed.items() if k in train_keys}
    if "azimuth_min" in typed or "azimuth_max" in typed:
        train_kwargs["azimuth_range"] = (
            typed.get("azimuth_min", -180.0), typed.get("azimuth_max", 180.0)
        )
    if "elevation_min" in typed or "elevation_max" in typed:
        train_kwargs["elevation_range"] = (
            typed.get("elevation_min", -30.0), typed.get("elevation_max", 30.0)
        )
    train = None
    try:
        train = TrainConfig(**train_kwargs)
    except InvalidParameterError as exc:
        problems.append(str(exc))

    if problems:
        raise ConfigError(problems)

    cfg = RunConfig(train=train, raw=dict(sorted(typed.items())))
    for name in ("guidance", "out", "input_image", "prompt", "ref_elevation",
                 "mc_threshold", "target_faces", "smooth_iters", "texture_res",
                 "stage2_steps", "t_start", "lr_texture", "checkpoint_every",
                 "culling"):
        if name in typed:
            setattr(cfg, name, typed[name])
    return cfg


def make_guidance(spec: str, timeout: float = 120.0):
    if spec == "zero":
        return ZeroGuidance()
    if spec.startswith("oracle:"):
        scene = ply_load(spec.split(":", 1)[1])
        return OracleGuidance(scene)
    if spec.startswith("remote:"):
        url = spec.split(":", 1)[1]
        url = os.environ.get(GUIDANCE_URL_ENV, url)
        return RemoteGuidance(url, timeout=timeout)
    raise ConfigError([f"unknown guidance spec {spec!r}"])


def write_manifest(cfg: RunConfig, out_dir: str, extra: dict | None = None,
                   name: str = "manifest.json") -> None:
    manifest = {
        "config": cfg.raw,
        "config_sha256": cfg.config_hash(),
        "seed": cfg.train.seed,
        "versions": {
            "splatgen": __version__,
            "numpy": np.__version__,
            "backend": active_backend(),
        },
    }
    try:
        import numba

        manifest["versions"]["numba"] = numba.__version__
    except ImportError:
        pass
    if extra:
        manifest.update(extra)
    with open(os.path.join(out_dir, name), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_reference(cfg: RunConfig) -> ReferenceInput:
    image = ImageBuffer.load_png(cfg.input_image)
    camera = Camera(
        azimuth=0.0, elevation=cfg.ref_elevation, radius=cfg.train.radius,
        fov_y=cfg.train.fov_y, width=image.width, height=image.height,
    )
    return ReferenceInput(image=image, camera=camera)


def cmd_generate(cfg: RunConfig) -> int:
    os.makedirs(cfg.out, exist_ok=True)
    guidance = make_guidance(cfg.guidance)
    reference = _load_reference(cfg) if cfg.train.mode == "image" else None

    checkpoint_fn = None
    if cfg.checkpoint_every:
        def checkpoint_fn(step, cloud):
            ply_save(cloud, os.path.join(cfg.out, f"cloud_step{step + 1:05d}.ply"))

    result = train_stage1(
        cfg.train, guidance, reference=reference, prompt=cfg.prompt,
        checkpoint_every=cfg.checkpoint_every or None, checkpoint_fn=checkpoint_fn,
    )
    ply_save(result.cloud, os.path.join(cfg.out, "cloud.ply"))
    result.write_trace_csv(os.path.join(cfg.out, "loss.csv"))
    write_manifest(cfg, cfg.out, extra={
        "command": "generate",
        "final_count": len(result.cloud),
        "densify_events": len(result.events),
        "elapsed_seconds": round(result.elapsed, 3),
    })
    print(f"generate: {len(result.cloud)} gaussians -> {cfg.out}/cloud.ply "
          f"({result.elapsed:.1f}s, {len(result.events)} densify events)")
    return 0


def cmd_extract_mesh(cfg: RunConfig, ply_path: str, out_path: str) -> int:
    cloud = ply_load(ply_path)
    grid = build_grid(cloud, culling=cfg.culling)
    mesh = marching_cubes(grid, threshold=cfg.mc_threshold)
    if mesh.is_empty():
        print(
            f"error: no isosurface at threshold {cfg.mc_threshold} "
            f"(grid max {grid.values.max():.4g})",
            file=sys.stderr,
        )
        return 3
    mesh = postprocess(mesh, target_faces=cfg.target_faces,
                       smooth_iters=cfg.smooth_iters)
    out_dir = os.path.dirname(os.path.abspath(out_path)) or "."
    os.makedirs(out_dir, exist_ok=True)
    write_obj_geometry(mesh, out_path)
    write_manifest(cfg, out_dir, extra={
        "command": "extract-mesh", "faces": mesh.n_faces,
        "threshold": cfg.mc_threshold,
    }, name="manifest_extract.json")
    print(f"extract-mesh: {mesh.n_faces} faces -> {out_path}")
    return 0


def cmd_refine_texture(cfg: RunConfig, ply_path: str, obj_path: str) -> int:
    os.makedirs(cfg.out, exist_ok=True)
    cloud = ply_load(ply_path)
    mesh, _, _ = import_bundle(obj_path)
    mesh = mesh.with_vertex_normals()
    guidance = make_guidance(cfg.guidance)
    reference = _load_reference(cfg) if cfg.train.mode == "image" else None

    atlas = unwrap(mesh, resolution=cfg.texture_res)
    texture = backproject(mesh, atlas, cloud, radius=cfg.train.radius,
                          fov_y=cfg.train.fov_y)
    result = refine_texture(
        mesh, atlas, texture, guidance, steps=cfg.stage2_steps,
        t_start=cfg.t_start, lr=cfg.lr_texture, config=cfg.train,
        reference=reference, prompt=cfg.prompt, seed=cfg.train.seed,
    )
    paths = export_bundle(mesh, atlas, result.texture,
                          os.path.join(cfg.out, "textured.obj"))
    with open(os.path.join(cfg.out, "stage2_loss.csv"), "w") as fh:
        fh.write("step,mse\n")
        for i, v in enumerate(result.trace):
            fh.write(f"{i},{v:.9g}\n")
    write_manifest(cfg, cfg.out, extra={
        "command": "refine-texture",
        "stage2_initial": float(result.trace[0]) if len(result.trace) else None,
        "stage2_final": float(result.trace[-1]) if len(result.trace) else None,
    }, name="manifest_texture.json")
    print(f"refine-texture: {cfg.stage2_steps} steps -> {paths['obj']}")
    return 0


def cmd_render(cfg: RunConfig, asset: str, n_views: int, out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    azimuths = [i * 360.0 / n_views for i in range(n_views)]
    if asset.endswith(".ply"):
        cloud = ply_load(asset)
        renderer = lambda cam: render(cloud, cam, (1.0, 1.0, 1.0))
    else:
        mesh, uvs, texture = import_bundle(asset)
        if uvs is None or texture is None:
            print(f"error: {asset} has no texture bundle", file=sys.stderr)
            return 3
        atlas = UVAtlas(uvs=uvs, face_chart=np.zeros(mesh.n_faces, dtype=np.int64),
                        chart_rects=[], chart_ids=[], resolution=texture.resolution)
        renderer = lambda cam: render_mesh(mesh, atlas, texture, cam, (1.0, 1.0, 1.0))
    for i, az in enumerate(azimuths):
        cam = Camera(azimuth=az, elevation=0.0, radius=cfg.train.radius,
                     fov_y=cfg.train.fov_y, width=512, height=512)
        img = renderer(cam)
        img.save_png(os.path.join(out_dir, f"view_{i:03d}.png"))
    print(f"render: {n_views} views -> {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splatgen",
        description="Generative Gaussian splatting: guided optimization, "
                    "mesh extraction, texture refinement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, help="override the seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--guidance", help="zero | oracle:<scene.ply> | remote:<url>")

    g = sub.add_parser("generate", help="stage-1 optimization -> PLY + loss CSV")
    common(g)
    g.add_argument("--steps", type=int, help="override training steps")
    g.add_argument("--mode", choices=["image", "text"])
    g.add_argument("--input-image", dest="input_image", help="pre-matted RGBA PNG")
    g.add_argument("--prompt", help="text prompt (text mode)")
    g.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)

    e = sub.add_parser("extract-mesh", help="PLY -> density grid -> OBJ")
    common(e)
    e.add_argument("ply", help="gaussian cloud PLY")
    e.add_argument("--threshold", dest="mc_threshold", type=float,
                   help="marching cubes density threshold (default 1.0)")
    e.add_argument("--target-faces", dest="target_faces", type=int)
    e.add_argument("--culling", choices=["bbox", "center"])
    e.add_argument("--obj", dest="obj_out", default=None, help="output OBJ path")

    r = sub.add_parser("refine-texture", help="bake and refine the UV texture")
    common(r)
    r.add_argument("ply", help="gaussian cloud PLY")
    r.add_argument("obj", help="extracted mesh OBJ")
    r.add_argument("--steps", dest="stage2_steps", type=int)
    r.add_argument("--mode", choices=["image", "text"])
    r.add_argument("--input-image", dest="input_image")
    r.add_argument("--prompt")
    r.add_argument("--texture-res", dest="texture_res", type=int)

    v = sub.add_parser("render", help="render orbit views of a PLY or OBJ bundle")
    common(v)
    v.add_argument("asset", help=".ply cloud or .obj bundle")
    v.add_argument("--n-views", dest="n_views", type=int, default=8)

    return parser


def _overrides_from_args(args) -> dict:
    keys = (
        "seed", "out", "guidance", "steps", "mode", "input_image", "prompt",
        "checkpoint_every", "mc_threshold", "target_faces", "culling",
        "stage2_steps", "texture_res",
    )
    out = {}
    for key in keys:
        if hasattr(args, key) and getattr(args, key) is not None:
            out[key] = str(getattr(args, key))
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = load_config_file(args.config) if args.config else {}
        needs_conditioning = args.command in ("generate", "refine-texture")
        cfg = resolve_config(file_values, _overrides_from_args(args),
                             needs_conditioning=needs_conditioning)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2

    try:
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "extract-mesh":
            out_path = args.obj_out or os.path.join(cfg.out, "mesh.obj")
            return cmd_extract_mesh(cfg, args.ply, out_path)
        if args.command == "refine-texture":
            return cmd_refine_texture(cfg, args.ply, args.obj)
        if args.command == "render":
            return cmd_render(cfg, args.asset, args.n_views, cfg.out)
        raise SplatgenError(f"unknown command {args.command}")
    except GuidanceTransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 4
    except SplatgenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
