"""Region-aware compositional diffusion sampling over a closed-form toy model."""

from .kernels import BACKEND as KERNEL_BACKEND
from .latents import PixelRect, RegionRect
from .sampler import SamplerConfig, Sampler, Trajectory, sample
from .scene import SceneSpec, parse_scene, scene_from_json, serialize_scene

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "PixelRect",
    "RegionRect",
    "Sampler",
    "SamplerConfig",
    "SceneSpec",
    "Trajectory",
    "parse_scene",
    "sample",
    "scene_from_json",
    "serialize_scene",
    "__version__",
]
