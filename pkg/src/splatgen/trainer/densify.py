"""Adaptive density control: clone small / split large / prune weak.

Gaussians whose mean accumulated view-space positional gradient exceeds
the threshold are densified: cloned in place when their max scale is
under the ceiling, otherwise replaced by two children with scales
divided by 1.6 and centers drawn from the parent density. Pruning then
removes Gaussians with opacity below 0.01 or max scale strictly above
0.05; densify runs before prune so split children landing exactly at
the ceiling survive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core.gaussians import quat_to_rotmat, normalize_quaternion
from ..core.types import GaussianCloud

__all__ = ["DensifyThresholds", "DensifyReport", "densify_and_prune"]

SPLIT_FACTOR = 1.6
SPLIT_CHILDREN = 2


@dataclass(frozen=True)
class DensifyThresholds:
    grad_threshold: float = 0.5
    densify_max_scale: float = 0.05
    prune_opacity: float = 0.01
    prune_max_scale: float = 0.05


@dataclass
class DensifyReport:
    cloned: int = 0
    split: int = 0
    pruned: int = 0
    before: int = 0
    after: int = 0
    # Row provenance for optimizer-state reindexing: source[k] is the old
    # row feeding new row k; fresh marks newly created rows.
    source: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    fresh: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))


def densify_and_prune(
    cloud: GaussianCloud,
    thresholds: DensifyThresholds,
    rng: np.random.Generator,
):
    """Returns (new_cloud, report); statistics reset on the new cloud."""
    n = len(cloud)
    counts = np.maximum(cloud.grad_count, 1)
    mean_grad = cloud.grad_accum / counts
    max_scale = cloud.scales.max(axis=1)

    hot = mean_grad > thresholds.grad_threshold
    clone_mask = hot & (max_scale < thresholds.densify_max_scale)
    split_mask = hot & ~clone_mask

    keep_mask = ~split_mask  # split parents are replaced by their children
    keep_idx = np.nonzero(keep_mask)[0]
    clone_idx = np.nonzero(clone_mask)[0]
    split_idx = np.nonzero(split_mask)[0]

    parts_centers = [cloud.centers[keep_idx], cloud.centers[clone_idx]]
    parts_scales = [cloud.scales[keep_idx], cloud.scales[clone_idx]]
    parts_rot = [cloud.rotations[keep_idx], cloud.rotations[clone_idx]]
    parts_op = [cloud.opacities[keep_idx], cloud.opacities[clone_idx]]
    parts_col = [cloud.colors[keep_idx], cloud.colors[clone_idx]]
    source = [keep_idx, clone_idx]
    fresh = [np.zeros(keep_idx.size, dtype=bool), np.ones(clone_idx.size, dtype=bool)]

    if split_idx.size:
        k = split_idx.size
        rot = quat_to_rotmat(normalize_quaternion(cloud.rotations[split_idx]))
        # children sampled from the parent gaussian: x + R (s * eps)
        eps = rng.standard_normal((k, SPLIT_CHILDREN, 3))
        local = cloud.scales[split_idx][:, None, :] * eps
        offsets = np.einsum("kij,kcj->kci", rot, local)
        child_centers = (cloud.centers[split_idx][:, None, :] + offsets).reshape(-1, 3)
        child_scales = np.repeat(
            cloud.scales[split_idx] / SPLIT_FACTOR, SPLIT_CHILDREN, axis=0
        )
        parts_centers.append(child_centers)
        parts_scales.append(child_scales)
        parts_rot.append(np.repeat(cloud.rotations[split_idx], SPLIT_CHILDREN, axis=0))
        parts_op.append(np.repeat(cloud.opacities[split_idx], SPLIT_CHILDREN))
        parts_col.append(np.repeat(cloud.colors[split_idx], SPLIT_CHILDREN, axis=0))
        source.append(np.repeat(split_idx, SPLIT_CHILDREN))
        fresh.append(np.ones(k * SPLIT_CHILDREN, dtype=bool))

    centers = np.concatenate(parts_centers)
    scales = np.concatenate(parts_scales)
    rotations = np.concatenate(parts_rot)
    opacities = np.concatenate(parts_op)
    colors = np.concatenate(parts_col)
    source = np.concatenate(source)
    fresh = np.concatenate(fresh)

    # prune (strict comparisons)
    survive = (opacities >= thresholds.prune_opacity) & (
        scales.max(axis=1) <= thresholds.prune_max_scale
    )
    report = DensifyReport(
        cloned=int(clone_mask.sum()),
        split=int(split_mask.sum()),
        pruned=int((~survive).sum()),
        before=n,
        after=int(survive.sum()),
        source=source[survive],
        fresh=fresh[survive],
    )
    new_cloud = GaussianCloud(
        centers=centers[survive],
        scales=scales[survive],
        rotations=rotations[survive],
        opacities=opacities[survive],
        colors=colors[survive],
    )
    return new_cloud, report
