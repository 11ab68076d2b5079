from .mlp import (
    ShadingMlp,
    TrainConfig,
    TrainResult,
    load_mlp,
    mlp_apply,
    mlp_forward,
    sample_nv_pairs,
    save_mlp,
    train_shading_mlp,
)
from .pipeline import RenderConfig, render, scene_from_json
from .scene import ContactScene, GelPad, Primitive, elastomer_filter, render_heightmap
from .shading import (
    ShadingParams,
    normals_from_heightmap,
    posenc,
    quantize_intensity,
    shade_analytic,
    shade_values,
    view_map,
)

__all__ = [
    "ContactScene",
    "GelPad",
    "Primitive",
    "RenderConfig",
    "ShadingMlp",
    "ShadingParams",
    "TrainConfig",
    "TrainResult",
    "elastomer_filter",
    "load_mlp",
    "mlp_apply",
    "mlp_forward",
    "normals_from_heightmap",
    "posenc",
    "quantize_intensity",
    "render",
    "render_heightmap",
    "sample_nv_pairs",
    "save_mlp",
    "scene_from_json",
    "shade_analytic",
    "shade_values",
    "train_shading_mlp",
    "view_map",
]
