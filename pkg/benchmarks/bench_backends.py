"""Benchmark the numba kernels against the pure-numpy fallback.

Covers the four hot paths: splat forward, splat backward, block density
grid, and mesh rasterization. Each kernel runs once for JIT warmup, then
the best of N repeats is reported per backend.

    python benchmarks/bench_backends.py [--repeats 3]
"""

import argparse
import time

import numpy as np

from splatgen.backend import HAVE_NUMBA, use_backend
from splatgen.core import Camera
from splatgen.meshex import build_grid
from splatgen.renderer import render, render_backward
from splatgen.synthetic import dense_color_ball
from splatgen.texturer.meshrender import rasterize_mesh


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    rot = rng.normal(size=(2000, 4))
    rot /= np.linalg.norm(rot, axis=1, keepdims=True)
    from splatgen.core import GaussianCloud

    cloud = GaussianCloud(
        centers=rng.uniform(-0.5, 0.5, (2000, 3)),
        scales=rng.uniform(0.01, 0.06, (2000, 3)),
        rotations=rot,
        opacities=rng.uniform(0.1, 0.95, 2000),
        colors=rng.uniform(0, 1, (2000, 3)),
    )
    camera = Camera(azimuth=30.0, elevation=15.0, radius=2.0, fov_y=49.0,
                    width=512, height=512)
    g_rgb = rng.normal(size=(512, 512, 3))

    scene = dense_color_ball()
    from splatgen.meshex import marching_cubes, postprocess

    mesh = postprocess(marching_cubes(build_grid(scene), 1.0), 20_000, 2)

    cases = {
        "splat forward 512^2 x 2000": lambda: render(cloud, camera, (1, 1, 1)),
        "splat backward 512^2 x 2000": lambda: render_backward(
            cloud, camera, (1, 1, 1), g_rgb),
        "density grid 128^3 x 2000": lambda: build_grid(cloud),
        f"mesh raster 512^2 x {mesh.n_faces} faces": lambda: rasterize_mesh(
            mesh, camera),
    }

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    results = {}
    for backend in backends:
        with use_backend(backend):
            for name, fn in cases.items():
                fn()  # warmup (JIT compile on numba)
                results[(backend, name)] = best_of(fn, args.repeats)

    width = max(len(n) for n in cases)
    header = f"{'kernel':<{width}}  " + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name in cases:
        row = f"{name:<{width}}  "
        for backend in backends:
            row += f"{results[(backend, name)] * 1e3:>10.1f}ms"
        if len(backends) == 2:
            row += f"{results[('numpy', name)] / results[('numba', name)]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
