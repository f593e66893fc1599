"""Texturer tests: unwrapping, baking, mesh rendering and refinement."""

import numpy as np
import pytest

import splatgen.texturer.bake as bake_mod
from splatgen.core import Camera, GaussianCloud, ImageBuffer, TextureImage, TriangleMesh
from splatgen.guidance import OracleGuidance, ZeroGuidance
from splatgen.meshex import build_grid, marching_cubes, postprocess
from splatgen.renderer import render
from splatgen.synthetic import single_blob_scene, three_blob_scene
from splatgen.texturer import (
    backproject,
    refine_texture,
    render_mesh,
    texture_gradient,
    unwrap,
)
from splatgen.texturer.atlas import GUTTER_TEXELS


def cube_mesh(half=0.4):
    v = np.array([
        [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
        [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
    ], dtype=float) * half
    f = np.array([
        [0, 2, 1], [0, 3, 2],      # -z
        [4, 5, 6], [4, 6, 7],      # +z
        [0, 1, 5], [0, 5, 4],      # -y
        [2, 3, 7], [2, 7, 6],      # +y
        [1, 2, 6], [1, 6, 5],      # +x
        [0, 4, 7], [0, 7, 3],      # -x
    ], dtype=np.int64)
    return TriangleMesh(vertices=v, faces=f)


def square_mesh(half=0.5):
    """Two triangles in the xz-plane at y=0, normals toward -y."""
    v = np.array([
        [-half, 0.0, -half], [half, 0.0, -half],
        [half, 0.0, half], [-half, 0.0, half],
    ])
    f = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    mesh = TriangleMesh(vertices=v, faces=f)
    assert np.all(mesh.face_normals()[:, 1] < 0)  # toward -y, facing azimuth-0
    return mesh


def blob_mesh(target_faces=3000):
    mesh = marching_cubes(build_grid(three_blob_scene()), 1.0)
    return postprocess(mesh, target_faces=target_faces, smooth_iters=2)


class TestUnwrap:
    def test_cube_six_square_charts_equal_area(self):
        atlas = unwrap(cube_mesh(), resolution=256)
        assert len(atlas.chart_rects) == 6
        areas = [w * h for (_, _, w, h) in atlas.chart_rects]
        assert max(areas) - min(areas) < 1e-6 * max(areas)
        for (_, _, w, h) in atlas.chart_rects:
            assert abs(w - h) < 1e-9

    def test_charts_disjoint_with_gutters(self):
        atlas = unwrap(blob_mesh(), resolution=512)
        rects = atlas.chart_rects
        for i in range(len(rects)):
            for j in range(i + 1, len(rects)):
                x0, y0, w0, h0 = rects[i]
                x1, y1, w1, h1 = rects[j]
                gap_x = max(x0 - (x1 + w1), x1 - (x0 + w0))
                gap_y = max(y0 - (y1 + h1), y1 - (y0 + h0))
                assert max(gap_x, gap_y) >= GUTTER_TEXELS - 1e-9

    def test_occupancy_at_least_40_percent(self):
        atlas = unwrap(blob_mesh(), resolution=512)
        rect_area = sum(w * h for (_, _, w, h) in atlas.chart_rects)
        assert rect_area / 512**2 >= 0.40

    def test_uvs_in_unit_square(self):
        atlas = unwrap(blob_mesh(), resolution=512)
        assert np.all(atlas.uvs >= 0.0) and np.all(atlas.uvs <= 1.0)

    def test_distortion_bounded(self):
        mesh = blob_mesh()
        atlas = unwrap(mesh, resolution=512)
        area3d = mesh.face_areas()
        e1 = atlas.uvs[:, 1] - atlas.uvs[:, 0]
        e2 = atlas.uvs[:, 2] - atlas.uvs[:, 0]
        area_uv = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        ok = (area3d > 1e-10) & (area_uv > 1e-12)
        ratio = area3d[ok] / area_uv[ok]
        med = np.median(ratio)
        frac_in = np.mean((ratio < 2 * med) & (ratio > med / 2))
        assert frac_in > 0.95  # box projection distorts only steep faces


class TestBackproject:
    def test_uniform_red_cloud(self):
        scene = single_blob_scene(sigma=0.25, opacity=3.0)
        scene.colors[:] = np.array([1.0, 0.0, 0.0])
        mesh = postprocess(marching_cubes(build_grid(scene), 1.0),
                           target_faces=2000, smooth_iters=1)
        atlas = unwrap(mesh, resolution=256)
        tex = backproject(mesh, atlas, scene, view_resolution=128)
        assert tex.valid.sum() > 0
        valid_rgb = tex.rgb[tex.valid]
        assert np.all(np.abs(valid_rgb[:, 0] - 1.0) < 1 / 255)
        assert np.all(valid_rgb[:, 1] < 1 / 255)

    def test_two_view_weighted_average_exact(self, monkeypatch):
        # A flat square seen frontally (facing weight 1) and at 45 degrees
        # (weight cos 45). Each texel accumulates k1 samples of c1 and k2 of
        # c2, so it must equal (k1*w1*c1 + k2*w2*c2) / (k1*w1 + k2*w2):
        # an exact convex blend of c1 and c2, hitting the hand-computed
        # (w1*c1 + w2*c2)/(w1+w2) wherever the per-view sample counts tie.
        mesh = square_mesh()
        atlas = unwrap(mesh, resolution=48)
        c1 = np.array([0.8, 0.2, 0.1])
        c2 = np.array([0.1, 0.6, 0.9])
        cam1 = Camera(azimuth=0.0, elevation=0.0, radius=2.0, width=192, height=192)
        cam2 = Camera(azimuth=45.0, elevation=0.0, radius=2.0, width=192, height=192)
        monkeypatch.setattr(bake_mod, "bake_views", lambda *a, **k: [cam1, cam2])
        colors = iter([c1, c2])

        def fake_render(cloud, camera, background):
            c = next(colors)
            return ImageBuffer(
                rgb=np.broadcast_to(c, (camera.height, camera.width, 3)).copy(),
                alpha=np.ones((camera.height, camera.width)),
            )

        monkeypatch.setattr(bake_mod, "render", fake_render)
        tex = backproject(mesh, atlas, single_blob_scene(), view_resolution=192)
        got = tex.rgb[tex.valid]
        assert got.shape[0] > 1000
        # solve the blend factor from channel 0; all channels must agree
        lam = (got[:, 0] - c2[0]) / (c1[0] - c2[0])
        recon = lam[:, None] * c1 + (1.0 - lam[:, None]) * c2
        np.testing.assert_allclose(got, recon, atol=1e-12)
        assert lam.min() >= -1e-12 and lam.max() <= 1.0 + 1e-12
        # the hand-computed single-sample blend appears at tied counts
        w2 = np.cos(np.radians(45.0))
        hand = (c1 + w2 * c2) / (1.0 + w2)
        exact = np.abs(got - hand).max(axis=1) < 1e-9
        assert exact.sum() > 100

    def test_grazing_faces_fall_back_to_fill(self, monkeypatch):
        mesh = square_mesh()
        atlas = unwrap(mesh, resolution=64)
        # only edge-on views: facing ~ 0 < 0.1 cutoff everywhere
        cams = [Camera(azimuth=90.0, elevation=0.0, radius=2.0, width=64, height=64),
                Camera(azimuth=270.0, elevation=0.0, radius=2.0, width=64, height=64)]
        monkeypatch.setattr(bake_mod, "bake_views", lambda *a, **k: cams)
        tex = backproject(mesh, atlas, single_blob_scene(), view_resolution=64)
        assert tex.valid.sum() == 0
        assert np.all(tex.rgb == 0.5)

    def test_weights_nonnegative_and_colors_in_hull(self):
        scene = three_blob_scene()
        mesh = blob_mesh(1500)
        atlas = unwrap(mesh, resolution=256)
        tex = backproject(mesh, atlas, scene, view_resolution=128)
        # colors are convex combinations of rendered colors, so within [0,1]
        assert np.all(tex.rgb >= 0.0) and np.all(tex.rgb <= 1.0)
        assert tex.valid.sum() > 100


class TestRenderMesh:
    def test_constant_texture_constant_foreground(self):
        mesh = cube_mesh()
        atlas = unwrap(mesh, resolution=128)
        tex = TextureImage.filled(128, color=(0.3, 0.6, 0.9))
        cam = Camera(azimuth=30, elevation=20, radius=2.0, width=96, height=96)
        img = render_mesh(mesh, atlas, tex, cam, background=(0, 0, 0))
        fg = img.alpha > 0.5
        assert fg.sum() > 200
        np.testing.assert_allclose(
            img.rgb[fg], np.broadcast_to([0.3, 0.6, 0.9], (fg.sum(), 3)), atol=1e-9
        )

    def test_alpha_is_binary_coverage(self):
        mesh = cube_mesh()
        atlas = unwrap(mesh, resolution=64)
        tex = TextureImage.filled(64)
        cam = Camera(azimuth=10, elevation=5, radius=2.0, width=64, height=64)
        img = render_mesh(mesh, atlas, tex, cam, background=(1, 1, 1))
        assert set(np.unique(img.alpha)).issubset({0.0, 1.0})
        assert img.alpha.sum() > 0

    def test_texture_gradient_matches_finite_differences(self):
        mesh = cube_mesh()
        atlas = unwrap(mesh, resolution=32)
        rng = np.random.default_rng(0)
        tex = TextureImage(rgb=rng.random((32, 32, 3)), valid=np.ones((32, 32), bool))
        cam = Camera(azimuth=25, elevation=15, radius=2.0, width=96, height=96)
        g_rgb = rng.normal(size=(96, 96, 3))

        def loss(t):
            img = render_mesh(mesh, atlas, t, cam, background=(0, 0, 0))
            return float(np.sum(img.rgb * g_rgb))

        grad, touched = texture_gradient(mesh, atlas, tex, cam, g_rgb)
        h = 1e-4
        checked = 0
        idx = np.argwhere(touched)
        rng.shuffle(idx)
        for (ty, tx) in idx[:60]:
            for c in range(3):
                up = tex.copy()
                up.rgb[ty, tx, c] += h
                dn = tex.copy()
                dn.rgb[ty, tx, c] -= h
                fd = (loss(up) - loss(dn)) / (2 * h)
                a = grad[ty, tx, c]
                if max(abs(a), abs(fd)) < 1e-9:
                    continue
                checked += 1
                assert abs(a - fd) / max(abs(a), abs(fd)) < 1e-2, (ty, tx, c, a, fd)
        assert checked >= 100

    def test_gradient_zero_off_screen(self):
        mesh = cube_mesh()
        atlas = unwrap(mesh, resolution=32)
        tex = TextureImage.filled(32)
        cam = Camera(azimuth=0, elevation=0, radius=2.0, width=48, height=48)
        grad, touched = texture_gradient(mesh, atlas, tex, cam,
                                         np.zeros((48, 48, 3)))
        assert np.all(grad == 0.0)


class TestRefineTexture:
    def setup_scene(self, texture_res=128):
        scene = three_blob_scene()
        mesh = blob_mesh(1200)
        atlas = unwrap(mesh, resolution=texture_res)
        tex = backproject(mesh, atlas, scene, view_resolution=128)
        return scene, mesh, atlas, tex

    def test_identity_refiner_is_fixed_point(self):
        _, mesh, atlas, tex = self.setup_scene()
        result = refine_texture(mesh, atlas, tex, ZeroGuidance(), steps=5, seed=1)
        assert np.allclose(result.trace, 0.0, atol=1e-18)
        np.testing.assert_array_equal(result.texture.rgb, tex.rgb)

    def test_trace_has_one_entry_per_step(self):
        scene, mesh, atlas, tex = self.setup_scene()
        result = refine_texture(mesh, atlas, tex, OracleGuidance(scene),
                                steps=12, seed=2)
        assert len(result.trace) == 12

    def test_oracle_refiner_reduces_loss(self):
        # bake from a color-washed copy so the deficit is texture-fixable
        # (a texture baked from the scene itself already sits at the floor)
        from splatgen.synthetic import color_washed, dense_color_ball

        scene = dense_color_ball(count=80, seed=2)
        mesh = postprocess(marching_cubes(build_grid(scene), 1.0),
                           target_faces=2000, smooth_iters=2)
        atlas = unwrap(mesh, resolution=128)
        tex = backproject(mesh, atlas, color_washed(scene, 0.9),
                          view_resolution=128)
        result = refine_texture(mesh, atlas, tex, OracleGuidance(scene),
                                steps=16, seed=3)
        # per-step trace values are at random views, so compare against the
        # ground truth on a fixed held-out view instead
        from splatgen.renderer import render

        cam = Camera(azimuth=100.0, elevation=12.0, radius=2.0, fov_y=49.0,
                     width=192, height=192)
        gt = render(scene, cam, (1, 1, 1)).rgb
        before = render_mesh(mesh, atlas, tex, cam, (1, 1, 1)).rgb
        after = render_mesh(mesh, atlas, result.texture, cam, (1, 1, 1)).rgb
        mse_before = float(np.mean((before - gt) ** 2))
        mse_after = float(np.mean((after - gt) ** 2))
        assert mse_after < 0.6 * mse_before, (mse_before, mse_after)

    def test_gutter_integrity(self):
        scene, mesh, atlas, tex = self.setup_scene()
        outside = ~atlas.chart_mask()
        before = tex.rgb[outside].copy()
        result = refine_texture(mesh, atlas, tex, OracleGuidance(scene),
                                steps=8, seed=4)
        np.testing.assert_array_equal(result.texture.rgb[outside], before)

    def test_texels_stay_in_unit_range(self):
        scene, mesh, atlas, tex = self.setup_scene()
        result = refine_texture(mesh, atlas, tex, OracleGuidance(scene),
                                steps=8, seed=5)
        assert np.all(result.texture.rgb >= 0.0)
        assert np.all(result.texture.rgb <= 1.0)


def test_bake_views_grid():
    from splatgen.texturer import bake_views

    cams = bake_views(radius=2.0, fov_y=49.0, resolution=128)
    assert len(cams) == 26  # 8 azimuths x 3 elevations + top + bottom
    grid = [(c.azimuth, c.elevation) for c in cams[:24]]
    assert set(a for a, _ in grid) == {0.0, 45.0, 90.0, 135.0, 180.0, 225.0, 270.0, 315.0}
    assert set(e for _, e in grid) == {-45.0, 0.0, 45.0}
    assert {cams[24].elevation, cams[25].elevation} == {90.0, -90.0}
