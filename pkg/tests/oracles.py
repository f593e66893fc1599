"""Independent reference implementations used to validate the package.

Everything here is deliberately written from scratch against the documented
contracts: scipy quaternions, explicit look-at math, all-pairs per-pixel
compositing with no tiling, no support boxes and no early termination.
Keep this module free of imports from splatgen internals other than the
plain data types.
"""

import math

import numpy as np
from scipy.spatial.transform import Rotation

ALPHA_SKIP = 1.0 / 255.0
ALPHA_CLAMP = 0.999


def camera_frame(azimuth, elevation, radius, target=(0.0, 0.0, 0.0)):
    """Orbit camera frame per the documented convention: world up +z,
    azimuth 0 places the camera at -y, OpenCV-style camera axes."""
    az = math.radians(azimuth)
    el = math.radians(elevation)
    target = np.asarray(target, dtype=float)
    pos = target + radius * np.array(
        [math.cos(el) * math.sin(az), -math.cos(el) * math.cos(az), math.sin(el)]
    )
    fwd = target - pos
    fwd = fwd / np.linalg.norm(fwd)
    up = np.array([0.0, 0.0, 1.0])
    if abs(fwd @ up) >= 0.999:
        up = np.array([0.0, 1.0, 0.0])
    right = np.cross(fwd, up)
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    rot = np.stack([right, down, fwd])
    return rot, pos


def pinhole_project(point, azimuth, elevation, radius, fov_y, width, height,
                    target=(0.0, 0.0, 0.0)):
    """Project one world point to pixel coordinates."""
    rot, pos = camera_frame(azimuth, elevation, radius, target)
    t = rot @ (np.asarray(point, dtype=float) - pos)
    f = 0.5 * height / math.tan(0.5 * math.radians(fov_y))
    return np.array([f * t[0] / t[2] + 0.5 * width, f * t[1] / t[2] + 0.5 * height]), t[2]


def quat_matrix_scalar_first(q):
    w, x, y, z = q
    return Rotation.from_quat([x, y, z, w]).as_matrix()


def reference_render(cloud, camera, background, skip=ALPHA_SKIP):
    """All-pairs per-pixel compositing reference.

    Implements the rendering contract directly: EWA projection with the
    +0.3 px^2 regularizer, near-plane cull at z=0.01, contributions under
    ``skip`` ignored, alpha clamped to 0.999, full front-to-back blend with
    no tiling, no bounding boxes and no termination.
    """
    h, w = camera.height, camera.width
    bg = np.asarray(background, dtype=float)
    rot, pos = camera_frame(
        camera.azimuth, camera.elevation, camera.radius, camera.target
    )
    f = 0.5 * h / math.tan(0.5 * math.radians(camera.fov_y))

    entries = []
    for i in range(len(cloud)):
        t = rot @ (cloud.centers[i] - pos)
        if t[2] <= 0.01:
            continue
        mean = np.array([f * t[0] / t[2] + 0.5 * w, f * t[1] / t[2] + 0.5 * h])
        q = cloud.rotations[i] / np.linalg.norm(cloud.rotations[i])
        rmat = quat_matrix_scalar_first(q)
        sigma = rmat @ np.diag(cloud.scales[i] ** 2) @ rmat.T
        jac = np.array(
            [
                [f / t[2], 0.0, -f * t[0] / t[2] ** 2],
                [0.0, f / t[2], -f * t[1] / t[2] ** 2],
            ]
        )
        m = jac @ rot
        cov = m @ sigma @ m.T + 0.3 * np.eye(2)
        entries.append((t[2], i, mean, np.linalg.inv(cov)))
    entries.sort(key=lambda e: (e[0], e[1]))

    ys, xs = np.mgrid[0:h, 0:w]
    px = xs + 0.5
    py = ys + 0.5
    trans = np.ones((h, w))
    accum = np.zeros((h, w, 3))
    for _, i, mean, lam in entries:
        dx = px - mean[0]
        dy = py - mean[1]
        qv = lam[0, 0] * dx * dx + 2.0 * lam[0, 1] * dx * dy + lam[1, 1] * dy * dy
        alpha = cloud.opacities[i] * np.exp(-0.5 * np.maximum(qv, 0.0))
        alpha = np.where(alpha < skip, 0.0, np.minimum(alpha, ALPHA_CLAMP))
        weight = alpha * trans
        accum += weight[:, :, None] * cloud.colors[i]
        trans = trans * (1.0 - alpha)
    rgb = accum + trans[:, :, None] * bg
    return rgb, 1.0 - trans


def naive_density(points, centers, scales, rotations, opacities):
    """Plain summed-Gaussian density, one double loop in numpy."""
    points = np.atleast_2d(points)
    out = np.zeros(points.shape[0])
    for i in range(centers.shape[0]):
        q = rotations[i] / np.linalg.norm(rotations[i])
        rmat = quat_matrix_scalar_first(q)
        sigma = rmat @ np.diag(scales[i] ** 2) @ rmat.T
        lam = np.linalg.inv(sigma)
        d = points - centers[i]
        qv = np.einsum("nj,jk,nk->n", d, lam, d)
        out += opacities[i] * np.exp(-0.5 * qv)
    return out


def scripted_adam(p0, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    """Scalar Adam trace used to freeze expected optimizer values."""
    p, m, v = float(p0), 0.0, 0.0
    out = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1**t)
        vhat = v / (1 - b2**t)
        p -= lr * mhat / (math.sqrt(vhat) + eps)
        out.append(p)
    return out


def random_cloud(rng, n, center_range=0.4, scale_range=(0.02, 0.25),
                 opacity_range=(0.2, 0.95)):
    """Well-conditioned random cloud for renderer and gradient tests."""
    from splatgen.core import GaussianCloud

    rot = rng.normal(size=(n, 4))
    rot /= np.linalg.norm(rot, axis=1, keepdims=True)
    return GaussianCloud(
        centers=rng.uniform(-center_range, center_range, (n, 3)),
        scales=rng.uniform(scale_range[0], scale_range[1], (n, 3)),
        rotations=rot,
        opacities=rng.uniform(opacity_range[0], opacity_range[1], n),
        colors=rng.uniform(0.0, 1.0, (n, 3)),
    )


def fd_safe_cloud(rng, n, camera):
    """Cloud on which central differences of the renderer are a valid oracle.

    The rendering contract has two discrete rules: contributions under 1/255
    are skipped and pixels terminate below transmittance 1e-4. An FD step of
    1e-3 must not sweep either boundary across a pixel, so this builder keeps
    every Gaussian's 1/255 isoline outside the frame (large scales), keeps
    worst-case stacked transmittance well above 1e-4 (low opacities), and
    separates camera depths beyond the step size (no sort flips).
    """
    from splatgen.core import GaussianCloud

    rot = rng.normal(size=(n, 4))
    rot /= np.linalg.norm(rot, axis=1, keepdims=True)
    cloud = GaussianCloud(
        centers=rng.uniform(-0.15, 0.15, (n, 3)),
        scales=rng.uniform(0.6, 0.85, (n, 3)),
        rotations=rot,
        opacities=rng.uniform(0.15, 0.3, n),
        colors=rng.uniform(0.0, 1.0, (n, 3)),
    )
    return spread_depths(cloud, camera, 0.01)


def spread_depths(cloud, camera, min_gap):
    """Push centers apart along the view axis until camera depths differ by
    at least ``min_gap``.

    Central differences of the rendered image are only a valid gradient
    oracle away from depth-sort discontinuities, so FD test clouds must
    keep every pair of depths separated by more than the FD step.
    """
    rot, pos = camera_frame(
        camera.azimuth, camera.elevation, camera.radius, camera.target
    )
    forward = rot[2]
    depths = (cloud.centers - pos) @ forward
    order = np.argsort(depths)
    fixed = depths[order].copy()
    for k in range(1, len(fixed)):
        if fixed[k] - fixed[k - 1] < min_gap:
            fixed[k] = fixed[k - 1] + min_gap
    cloud = cloud.copy()
    cloud.centers[order] += (fixed - depths[order])[:, None] * forward
    return cloud
