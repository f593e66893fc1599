from .density import (
    BLOCKS,
    CULL_MAHALANOBIS,
    GRID_RES,
    BlockPartition,
    DensityGrid,
    block_partition,
    build_grid,
    density_at,
)
from .marching import marching_cubes
from .postprocess import decimate, postprocess, smooth

__all__ = [
    "BLOCKS",
    "CULL_MAHALANOBIS",
    "GRID_RES",
    "BlockPartition",
    "DensityGrid",
    "block_partition",
    "build_grid",
    "density_at",
    "marching_cubes",
    "decimate",
    "postprocess",
    "smooth",
]
