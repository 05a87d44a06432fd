"""Mask-based repainting: re-initialize noise inside the mask, rerun the edited
scene in lockstep with the base trajectory, and merge after every step so that
everything outside the mask is preserved bit-exactly.

The edited trajectory evolves freely; the base trajectory is never fed the
merged latents back (no inverse merge).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .latents import rect_mask, rect_to_pixels, reinit_masked, repaint_merge
from .sampler import Sampler, SamplerConfig, Trajectory
from .scene import RegionSpec, SceneSpec, validate_region_tokens


@dataclass(frozen=True)
class RepaintRequest:
    """Edit of one region (by index) or of an explicit fractional-rect mask."""

    region_index: int = None
    mask_rect: "RegionRect" = None  # explicit sub-canvas mask, fractional
    base: tuple = None  # replacement fundamental tokens
    detail: tuple = None  # replacement descriptive tokens
    nonce: int = 1

    def to_dict(self):
        return {
            "region_index": self.region_index,
            "mask_rect": self.mask_rect.to_dict() if self.mask_rect else None,
            "base": list(self.base) if self.base else None,
            "detail": list(self.detail) if self.detail else None,
            "nonce": self.nonce,
        }

    @classmethod
    def from_dict(cls, d) -> "RepaintRequest":
        from .latents import RegionRect

        return cls(
            region_index=d.get("region_index"),
            mask_rect=RegionRect.from_dict(d["mask_rect"]) if d.get("mask_rect") else None,
            base=tuple(d["base"]) if d.get("base") else None,
            detail=tuple(d["detail"]) if d.get("detail") else None,
            nonce=int(d.get("nonce", 1)),
        )


def repaint_noise_stream(seed: int, nonce: int) -> np.random.Generator:
    """Fresh noise stream keyed by (seed, nonce); nonce 0 is the base stream."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed),
                                                        spawn_key=(int(nonce),)))


def edited_scene(scene: SceneSpec, req: RepaintRequest) -> SceneSpec:
    if req.region_index is None or (req.base is None and req.detail is None):
        return scene
    k = scene.k
    if not (0 <= req.region_index < k):
        raise ValueError(f"region index {req.region_index} out of range (k={k})")
    spec = scene.regions[req.region_index]
    base = tuple(req.base) if req.base is not None else spec.fundamental
    detail = tuple(req.detail) if req.detail is not None else (
        tuple(req.base) if req.base is not None else spec.descriptive)
    validate_region_tokens(base, detail)
    new_spec = RegionSpec(rect=spec.rect, fundamental=base, descriptive=detail,
                          refine_rect=spec.refine_rect, synthetic=spec.synthetic)
    regions = list(scene.regions)
    regions[req.region_index] = new_spec
    out = dc_replace(scene, regions=tuple(regions))
    # A derived global prompt follows the edit automatically; an explicit
    # override is left untouched.
    return out


def repaint_mask(scene: SceneSpec, req: RepaintRequest) -> np.ndarray:
    h, w = scene.canvas_height, scene.canvas_width
    if req.mask_rect is not None:
        return rect_mask(h, w, rect_to_pixels(req.mask_rect, h, w))
    if req.region_index is None:
        raise ValueError("repaint request needs a region index or an explicit mask")
    if not (0 <= req.region_index < scene.k):
        raise ValueError(f"region index {req.region_index} out of range (k={scene.k})")
    rect = scene.regions[req.region_index].rect
    return rect_mask(h, w, rect_to_pixels(rect, h, w))


def repaint_trajectory(base_traj: Trajectory, scene: SceneSpec, cfg: SamplerConfig,
                       req: RepaintRequest) -> Trajectory:
    """Lockstep dual-trajectory repaint over an already materialized base run."""
    mask = repaint_mask(scene, req)
    if not mask.any():
        warnings.warn("empty repaint mask: returning the base run unchanged")
        return base_traj
    stream = repaint_noise_stream(cfg.seed, req.nonce)
    x_init = reinit_masked(base_traj.initial, mask, stream)
    new_scene = edited_scene(scene, req)
    edited_traj = Sampler(cfg).sample(new_scene, init=x_init)
    snapshots = []
    for (t, base_x), (_, edit_x) in zip(base_traj.snapshots, edited_traj.snapshots):
        snapshots.append((t, repaint_merge(base_x, edit_x, mask)))
    log = [line + " repaint=1" for line in edited_traj.stage_log]
    return Trajectory(snapshots=snapshots, stage_log=log)


def repaint(scene: SceneSpec, cfg: SamplerConfig, req: RepaintRequest) -> Trajectory:
    """Repaint against a freshly replayed base run of (scene, cfg)."""
    base_traj = Sampler(cfg).sample(scene)
    return repaint_trajectory(base_traj, scene, cfg, req)
