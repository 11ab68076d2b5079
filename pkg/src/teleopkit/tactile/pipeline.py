"""Full tactile rendering pipeline and the scene JSON format.

Scene documents look like::

    {
      "gel": {"width": 0.032, "height": 0.024, "res_x": 640, "res_y": 480},
      "camera_height": 0.02,
      "sigma_px": 3.0,
      "shading": {"ambient": 0.15, "diffuse_gain": 0.55,
                  "specular_gain": 0.45, "shininess": 16},
      "primitives": [
        {"shape": "sphere", "radius": 0.005, "center": [0, 0],
         "press_depth": 0.001},
        {"shape": "box", "size": [0.01, 0.004, 0.01], "center": [0.008, 0],
         "press_depth": 0.0005,
         "orientation": {"axis": [0, 0, 1], "angle": 0.4}},
        {"shape": "cylinder", "radius": 0.002, "length": 0.012,
         "center": [-0.008, 0], "press_depth": 0.0004,
         "orientation": {"axis": [1, 0, 0], "angle": 1.5707963267948966}}
      ]
    }

``camera_height``, ``sigma_px`` and ``shading`` are optional and default
to the values below.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import quat_from_axis_angle
from .mlp import ShadingMlp, mlp_apply
from .scene import ContactScene, GelPad, Primitive, elastomer_filter, render_heightmap
from .shading import ShadingParams, normals_from_heightmap, quantize_intensity, shade_analytic, view_map

DEFAULT_SIGMA_PX = 3.0
DEFAULT_CAMERA_HEIGHT = 0.02


@dataclass
class RenderConfig:
    sigma_px: float = DEFAULT_SIGMA_PX
    camera_height: float = DEFAULT_CAMERA_HEIGHT
    shading: ShadingParams = field(default_factory=ShadingParams)
    mode: str = "analytic"
    mlp: ShadingMlp | None = None

    def __post_init__(self):
        if self.mode not in ("analytic", "mlp"):
            raise ValueError(f"mode must be 'analytic' or 'mlp', got {self.mode!r}")
        if self.mode == "mlp" and self.mlp is None:
            raise ValueError("mlp mode requires trained weights")


def render(scene: ContactScene, config: RenderConfig) -> np.ndarray:
    """heightmap -> elastomer filter -> normals -> shade; returns uint8 image."""
    hm = elastomer_filter(render_heightmap(scene), config.sigma_px)
    nm = normals_from_heightmap(hm, (scene.gel.pitch_x, scene.gel.pitch_y))
    vm = view_map(scene.gel, config.camera_height)
    if config.mode == "analytic":
        return shade_analytic(nm, vm, config.shading)
    return quantize_intensity(mlp_apply(config.mlp, nm, vm))


def _primitive_from_json(spec: dict) -> Primitive:
    shape = spec.get("shape")
    center = spec.get("center", [0.0, 0.0])
    depth = float(spec.get("press_depth", 0.0))
    orientation = None
    if "orientation" in spec:
        o = spec["orientation"]
        orientation = quat_from_axis_angle(np.asarray(o["axis"], dtype=float), float(o["angle"]))
    if shape == "sphere":
        prim = Primitive.sphere(float(spec["radius"]), center, depth)
        if orientation is not None:
            raise ValueError("sphere orientation is meaningless; omit it")
        return prim
    if shape == "box":
        return Primitive.box([float(s) for s in spec["size"]], center, depth, orientation)
    if shape == "cylinder":
        return Primitive.cylinder(float(spec["radius"]), float(spec["length"]), center, depth, orientation)
    raise ValueError(f"unknown primitive shape {shape!r}")


def scene_from_json(doc: dict) -> tuple[ContactScene, float, float, ShadingParams]:
    """Parse a scene document; returns (scene, sigma_px, camera_height, shading)."""
    try:
        g = doc["gel"]
        gel = GelPad(float(g["width"]), float(g["height"]), int(g["res_x"]), int(g["res_y"]))
        prims = tuple(_primitive_from_json(p) for p in doc.get("primitives", []))
        sigma = float(doc.get("sigma_px", DEFAULT_SIGMA_PX))
        camera_height = float(doc.get("camera_height", DEFAULT_CAMERA_HEIGHT))
        shading = ShadingParams(**doc.get("shading", {}))
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed scene document: {e}") from None
    return ContactScene(gel, prims), sigma, camera_height, shading
