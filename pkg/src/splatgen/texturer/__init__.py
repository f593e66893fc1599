from .atlas import DEFAULT_TEXTURE_RES, UVAtlas, unwrap
from .bake import backproject, bake_views
from .export import export_bundle, import_bundle, write_obj_geometry
from .meshrender import RasterResult, rasterize_mesh, render_mesh, texture_gradient
from .refine import RefineResult, refine_texture

__all__ = [
    "DEFAULT_TEXTURE_RES",
    "UVAtlas",
    "unwrap",
    "backproject",
    "bake_views",
    "export_bundle",
    "import_bundle",
    "write_obj_geometry",
    "RasterResult",
    "rasterize_mesh",
    "render_mesh",
    "texture_gradient",
    "RefineResult",
    "refine_texture",
]
