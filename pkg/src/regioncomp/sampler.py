"""Rectified-flow Euler sampling with the two-stage regional pipeline.

Time runs on the grid t_j = (T - j) / T from 1 down to 0. The clean-image
prediction of the toy model is constant along the trajectory, for which Euler
integration is exact: the final step (dt = t) lands on the prediction.

Strategies:
- global_only:    every step conditioned on the global prompt.
- hard_only:      region binding on every step (r = T).
- soft_only:      regional soft refinement on every step (r = 0).
- rag_full:       r binding steps, then T - r refinement steps.
- latent_average: per-region predictions merged by averaging (MultiDiffusion
                  style baseline).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace as dc_replace

import numpy as np

from .conditioner import EmbeddingTable, guide, predict_x0
from .latents import blend, crop, rect_to_pixels, replace
from .scene import NULL_TOKEN, SceneSpec

STRATEGIES = ("global_only", "hard_only", "soft_only", "rag_full", "latent_average")


@dataclass(frozen=True)
class SamplerConfig:
    T: int = 20
    r: int = 5
    delta: float = 0.8
    s: float = 3.5
    seed: int = 0
    strategy: str = "rag_full"
    content_queries: bool = False
    embed_dim: int = 32
    tau: float = 10.0
    embed_seed: int = 0

    def validate(self):
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if not (0 <= self.r <= self.T):
            raise ValueError(f"r must be in [0, T], got {self.r}")
        if not (0.0 <= self.delta <= 1.0):
            raise ValueError(f"delta must be in [0,1], got {self.delta}")
        if self.s < 0:
            raise ValueError(f"guidance scale must be >= 0, got {self.s}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        return self

    def to_dict(self):
        return {
            "T": self.T, "r": self.r, "delta": self.delta, "s": self.s,
            "seed": self.seed, "strategy": self.strategy,
            "content_queries": self.content_queries, "embed_dim": self.embed_dim,
            "tau": self.tau, "embed_seed": self.embed_seed,
        }

    @classmethod
    def from_dict(cls, d) -> "SamplerConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d}).validate()


@dataclass
class Trajectory:
    """Snapshots (t, latent) from t=1 down to t=0, plus a per-step stage log."""

    snapshots: list  # (t, np.ndarray), length T + 1
    stage_log: list  # "step=<j> t=<t> stage=<bind|refine|global> regions=<k>"

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1][1]

    @property
    def initial(self) -> np.ndarray:
        return self.snapshots[0][1]


def initial_noise(height: int, width: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed)]))
    return rng.standard_normal((height, width, 3), dtype=np.float32)


def euler_step(x: np.ndarray, t: float, dt: float, x0_hat: np.ndarray) -> np.ndarray:
    """One explicit Euler step of the probability-flow ODE, v = (x - x0)/t."""
    if t <= 0.0:
        raise ValueError("euler_step requires t > 0")
    if not (0.0 < dt <= t):
        raise ValueError(f"need 0 < dt <= t, got dt={dt}, t={t}")
    if dt == t:  # algebraic cancellation; keep it exact in floating point
        return x0_hat.copy()
    v = (x - x0_hat) / np.float32(t)
    return (x - np.float32(dt) * v).astype(np.float32)


class Sampler:
    """Immutable orchestration object; each run carries its own state."""

    def __init__(self, cfg: SamplerConfig):
        self.cfg = cfg.validate()
        self.table = EmbeddingTable(dim=cfg.embed_dim, tau=cfg.tau, seed=cfg.embed_seed)
        self._null = self.table.encode([NULL_TOKEN])

    # -- conditioned predictions ------------------------------------------

    def guided(self, latent: np.ndarray, t: float, encoding) -> np.ndarray:
        cond = predict_x0(latent, t, encoding, self.table, self.cfg.content_queries)
        uncond = predict_x0(latent, t, self._null, self.table, self.cfg.content_queries)
        return guide(cond, uncond, self.cfg.s)

    # -- steps -------------------------------------------------------------

    def _global_x0(self, scene, x, t):
        return self.guided(x, t, self.table.encode(scene.global_tokens()))

    def hard_binding_step(self, x, regional, scene, t, dt):
        """Eqs. per-region denoise + global denoise + Replace fold."""
        if len(regional) != scene.k:
            raise ValueError("regional latent count != region count")
        rects = self._rects(scene)
        new_regional = []
        for spec, (lat, rect) in zip(scene.regions, zip(regional, rects)):
            if lat.shape[:2] != (rect.height, rect.width):
                raise ValueError("regional latent dims do not match region rect")
            x0 = self.guided(lat, t, self.table.encode(list(spec.fundamental)))
            new_regional.append(euler_step(lat, t, dt, x0))
        x = euler_step(x, t, dt, self._global_x0(scene, x, t))
        for lat, rect in zip(new_regional, rects):
            x = replace(x, lat, rect)
        return x, new_regional

    def soft_refinement_step(self, x, scene, t, dt):
        """Regional K/V with global-latent Q: crop, splice, delta-blend."""
        g = self._global_x0(scene, x, t)
        xr = g.copy()
        for spec in scene.regions:
            enc = self.table.encode(list(spec.descriptive))
            xi = self.guided(x, t, enc)
            rect = rect_to_pixels(spec.refine_rect, scene.canvas_height, scene.canvas_width)
            xr = replace(xr, crop(xi, rect), rect)
        x0 = blend(g, xr, self.cfg.delta)
        return euler_step(x, t, dt, x0)

    def _latent_average_step(self, x, regional, scene, t, dt):
        h, w = x.shape[:2]
        rects = self._rects(scene)
        acc = np.zeros((h, w, 3), dtype=np.float64)
        cnt = np.zeros((h, w, 1), dtype=np.float64)
        new_regional = []
        for spec, (lat, rect) in zip(scene.regions, zip(regional, rects)):
            x0 = self.guided(lat, t, self.table.encode(list(spec.fundamental)))
            stepped = euler_step(lat, t, dt, x0)
            new_regional.append(stepped)
            acc[rect.row_start:rect.row_end, rect.col_start:rect.col_end] += stepped
            cnt[rect.row_start:rect.row_end, rect.col_start:rect.col_end] += 1.0
        fallback = euler_step(x, t, dt, self._global_x0(scene, x, t))
        covered = cnt[:, :, 0] > 0
        out = fallback.copy()
        out[covered] = (acc[covered] / cnt[covered]).astype(np.float32)
        return out, new_regional

    def _rects(self, scene):
        return [rect_to_pixels(r.rect, scene.canvas_height, scene.canvas_width)
                for r in scene.regions]

    # -- full runs ---------------------------------------------------------

    def sample(self, scene: SceneSpec, init: np.ndarray = None) -> Trajectory:
        cfg = self.cfg
        h, w = scene.canvas_height, scene.canvas_width
        x = initial_noise(h, w, cfg.seed) if init is None else init.astype(np.float32).copy()
        snapshots = [(1.0, x)]
        log = []
        strategy = cfg.strategy
        r = {"global_only": 0, "hard_only": cfg.T, "soft_only": 0,
             "rag_full": cfg.r, "latent_average": 0}[strategy]
        rects = self._rects(scene)
        regional = None
        if strategy in ("hard_only", "rag_full", "latent_average"):
            regional = [crop(x, rect) for rect in rects]
        for j in range(cfg.T):
            t = (cfg.T - j) / cfg.T
            dt = 1.0 / cfg.T
            if strategy == "latent_average":
                x, regional = self._latent_average_step(x, regional, scene, t, dt)
                stage = "bind"
            elif strategy == "global_only":
                x = euler_step(x, t, dt, self._global_x0(scene, x, t))
                stage = "global"
            elif j < r:
                x, regional = self.hard_binding_step(x, regional, scene, t, dt)
                stage = "bind"
            else:
                x = self.soft_refinement_step(x, scene, t, dt)
                stage = "refine"
            t_next = (cfg.T - j - 1) / cfg.T
            snapshots.append((t_next, x))
            log.append(f"step={j} t={t:.6g} stage={stage} regions={scene.k}")
        return Trajectory(snapshots=snapshots, stage_log=log)


def sample(scene: SceneSpec, cfg: SamplerConfig, init: np.ndarray = None) -> Trajectory:
    return Sampler(cfg).sample(scene, init=init)


def sample_global(scene: SceneSpec, cfg: SamplerConfig) -> Trajectory:
    return Sampler(dc_replace(cfg, strategy="global_only")).sample(scene)
