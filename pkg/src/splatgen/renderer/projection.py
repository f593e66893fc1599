"""Perspective projection of 3D Gaussians to screen-space 2D Gaussians.

Forward: mean2d by pinhole projection of the center, cov2d by the first
order (EWA) approximation J W Sigma W^T J^T with a +0.3 px^2 diagonal
regularizer for anti-aliased minimum support. Backward: full analytic
chain from screen-space gradients to center / scale / quaternion /
opacity / color gradients, vectorized over Gaussians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.gaussians import covariance_from, normalize_quaternion, quat_to_rotmat
from ..core.types import Camera, GaussianCloud

__all__ = ["Projected", "ProjectedGaussian", "project", "project_backward",
           "NEAR_PLANE", "COV2D_REG", "ALPHA_SKIP"]

NEAR_PLANE = 0.01   # camera-space z cull, world units
COV2D_REG = 0.3     # px^2 added to the cov2d diagonal
ALPHA_SKIP = 1.0 / 255.0  # contributions below this are skipped everywhere


@dataclass(frozen=True)
class ProjectedGaussian:
    mean2d: np.ndarray
    cov2d: np.ndarray
    depth: float
    color: np.ndarray
    opacity: float


@dataclass
class Projected:
    """Depth-sorted screen-space Gaussians (struct of arrays).

    ``indices`` maps each row back to the source cloud. ``radii`` is the
    pixel radius beyond which the contribution falls under 1/255 and can
    be ignored; rows are sorted by depth, ties broken by cloud index.
    """

    indices: np.ndarray    # (M,) int64
    means2d: np.ndarray    # (M, 2) float64
    cov2d: np.ndarray      # (M, 2, 2) float64, regularized
    conics: np.ndarray     # (M, 3) packed inverse cov2d (a, b, c)
    depths: np.ndarray     # (M,) camera-space z
    colors: np.ndarray     # (M, 3)
    opacities: np.ndarray  # (M,)
    radii: np.ndarray      # (M,) pixel support radius
    cam_points: np.ndarray  # (M, 3) camera-space centers (kept for backward)
    n_culled: int = 0

    def __len__(self) -> int:
        return self.indices.shape[0]

    def __getitem__(self, i: int) -> ProjectedGaussian:
        return ProjectedGaussian(
            mean2d=self.means2d[i],
            cov2d=self.cov2d[i],
            depth=float(self.depths[i]),
            color=self.colors[i],
            opacity=float(self.opacities[i]),
        )


def _camera_frame(camera: Camera):
    rot = camera.rotation
    pos = camera.position
    f = camera.focal
    cx, cy = camera.principal_point
    return rot, pos, f, cx, cy


def project(cloud: GaussianCloud, camera: Camera) -> Projected:
    """Project a cloud into screen space, culling behind the near plane."""
    rot, pos, f, cx, cy = _camera_frame(camera)
    n = len(cloud)
    t = (cloud.centers - pos) @ rot.T  # camera-space centers
    keep = t[:, 2] > NEAR_PLANE
    idx = np.nonzero(keep)[0]
    t = t[idx]

    tz = t[:, 2]
    means2d = np.stack([f * t[:, 0] / tz + cx, f * t[:, 1] / tz + cy], axis=1)

    sigma = covariance_from(cloud.scales[idx], cloud.rotations[idx])
    # J rows: d(mean2d)/dt at the center
    m = idx.shape[0]
    jac = np.zeros((m, 2, 3))
    jac[:, 0, 0] = f / tz
    jac[:, 0, 2] = -f * t[:, 0] / tz**2
    jac[:, 1, 1] = f / tz
    jac[:, 1, 2] = -f * t[:, 1] / tz**2
    mw = jac @ rot  # (M, 2, 3)
    cov2d = mw @ sigma @ np.swapaxes(mw, 1, 2)
    cov2d[:, 0, 0] += COV2D_REG
    cov2d[:, 1, 1] += COV2D_REG

    a = cov2d[:, 0, 0]
    b = cov2d[:, 0, 1]
    c = cov2d[:, 1, 1]
    det = a * c - b * b
    conics = np.stack([c / det, -b / det, a / det], axis=1)

    # Support radius: opacity * exp(-q/2) >= 1/255 requires
    # q <= 2 ln(255 op); max pixel distance at that level is
    # sqrt(q * lambda_max).
    lam_max = 0.5 * (a + c) + np.sqrt(np.maximum(0.25 * (a - c) ** 2 + b * b, 0.0))
    op = cloud.opacities[idx]
    qcut = 2.0 * np.log(np.maximum(op, 1e-12) * 255.0)
    radii = np.where(qcut > 0.0, np.sqrt(np.maximum(qcut, 0.0) * lam_max) + 1.0, 0.0)

    order = np.argsort(t[:, 2], kind="stable")
    return Projected(
        indices=idx[order],
        means2d=np.ascontiguousarray(means2d[order]),
        cov2d=np.ascontiguousarray(cov2d[order]),
        conics=np.ascontiguousarray(conics[order]),
        depths=np.ascontiguousarray(tz[order]),
        colors=np.ascontiguousarray(cloud.colors[idx[order]]),
        opacities=np.ascontiguousarray(op[order]),
        radii=np.ascontiguousarray(radii[order]),
        cam_points=np.ascontiguousarray(t[order]),
        n_culled=int(n - m),
    )


def _rotmat_quat_partials(q: np.ndarray) -> np.ndarray:
    """d R / d q_k for unit scalar-first quaternions, shape (N, 4, 3, 3)."""
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    zero = np.zeros_like(w)
    dw = np.stack([
        np.stack([zero, -z, y], axis=-1),
        np.stack([z, zero, -x], axis=-1),
        np.stack([-y, x, zero], axis=-1),
    ], axis=-2)
    dx = np.stack([
        np.stack([zero, y, z], axis=-1),
        np.stack([y, -2.0 * x, -w], axis=-1),
        np.stack([z, w, -2.0 * x], axis=-1),
    ], axis=-2)
    dy = np.stack([
        np.stack([-2.0 * y, x, w], axis=-1),
        np.stack([x, zero, z], axis=-1),
        np.stack([-w, z, -2.0 * y], axis=-1),
    ], axis=-2)
    dz = np.stack([
        np.stack([-2.0 * z, -w, x], axis=-1),
        np.stack([w, -2.0 * z, y], axis=-1),
        np.stack([x, y, zero], axis=-1),
    ], axis=-2)
    return 2.0 * np.stack([dw, dx, dy, dz], axis=1)


def project_backward(
    cloud: GaussianCloud,
    camera: Camera,
    proj: Projected,
    g_mean2d: np.ndarray,
    g_conic: np.ndarray,
    g_opacity: np.ndarray,
    g_color: np.ndarray,
):
    """Chain screen-space gradients back to cloud parameters.

    Inputs are per projected (kept, sorted) Gaussian; outputs are per cloud
    Gaussian with zeros for culled ones. Returns a dict of gradient arrays
    keyed by parameter group.
    """
    rot, pos, f, cx, cy = _camera_frame(camera)
    n = len(cloud)
    m = len(proj)
    out = {
        "center": np.zeros((n, 3)),
        "scale": np.zeros((n, 3)),
        "rotation": np.zeros((n, 4)),
        "opacity": np.zeros(n),
        "color": np.zeros((n, 3)),
    }
    if m == 0:
        return out

    idx = proj.indices
    t = proj.cam_points
    tz = t[:, 2]

    # conic packed (a, b, c) -> symmetric matrix gradient on Lambda
    g_lam = np.empty((m, 2, 2))
    g_lam[:, 0, 0] = g_conic[:, 0]
    g_lam[:, 0, 1] = 0.5 * g_conic[:, 1]
    g_lam[:, 1, 0] = 0.5 * g_conic[:, 1]
    g_lam[:, 1, 1] = g_conic[:, 2]

    # Lambda = V^-1  =>  dL/dV = -Lambda dL/dLambda Lambda
    lam = np.empty((m, 2, 2))
    lam[:, 0, 0] = proj.conics[:, 0]
    lam[:, 0, 1] = proj.conics[:, 1]
    lam[:, 1, 0] = proj.conics[:, 1]
    lam[:, 1, 1] = proj.conics[:, 2]
    g_v = -lam @ g_lam @ lam
    g_v = 0.5 * (g_v + np.swapaxes(g_v, 1, 2))

    sigma = covariance_from(cloud.scales[idx], cloud.rotations[idx])
    jac = np.zeros((m, 2, 3))
    jac[:, 0, 0] = f / tz
    jac[:, 0, 2] = -f * t[:, 0] / tz**2
    jac[:, 1, 1] = f / tz
    jac[:, 1, 2] = -f * t[:, 1] / tz**2
    mw = jac @ rot

    # V = M Sigma M^T + reg
    g_sigma = np.swapaxes(mw, 1, 2) @ g_v @ mw
    g_m = 2.0 * g_v @ mw @ sigma
    g_jac = g_m @ rot.T

    # J(t) partials
    g_t = np.zeros((m, 3))
    g_t[:, 0] = g_jac[:, 0, 2] * (-f / tz**2)
    g_t[:, 1] = g_jac[:, 1, 2] * (-f / tz**2)
    g_t[:, 2] = (
        g_jac[:, 0, 0] * (-f / tz**2)
        + g_jac[:, 1, 1] * (-f / tz**2)
        + g_jac[:, 0, 2] * (2.0 * f * t[:, 0] / tz**3)
        + g_jac[:, 1, 2] * (2.0 * f * t[:, 1] / tz**3)
    )
    # mean2d(t) partials (J is exactly d mean2d / d t)
    g_t += np.einsum("mij,mi->mj", jac, g_mean2d)
    g_center = g_t @ rot  # = rot.T applied per row

    # Sigma = R diag(s^2) R^T
    quat = normalize_quaternion(cloud.rotations[idx])
    rmat = quat_to_rotmat(quat)
    scales = cloud.scales[idx]
    rtgr = np.swapaxes(rmat, 1, 2) @ g_sigma @ rmat
    g_scale = 2.0 * scales * np.einsum("mkk->mk", rtgr)
    g_rmat = 2.0 * g_sigma @ rmat * (scales[:, None, :] ** 2)

    dr_dq = _rotmat_quat_partials(quat)  # (M, 4, 3, 3)
    g_quat = np.einsum("mij,mkij->mk", g_rmat, dr_dq)
    # normalization jacobian back to the raw quaternion
    raw = cloud.rotations[idx]
    raw_norm = np.linalg.norm(raw, axis=1, keepdims=True)
    g_quat = (g_quat - quat * np.sum(g_quat * quat, axis=1, keepdims=True)) / raw_norm

    out["center"][idx] = g_center
    out["scale"][idx] = g_scale
    out["rotation"][idx] = g_quat
    out["opacity"][idx] = g_opacity
    out["color"][idx] = g_color
    return out
