"""Desk-scale compositional benchmark: scene suites, metrics, strategy
comparison, and report emission.

Scoring compares images against the closed-form target field: the guided,
clamped rendering of each region's descriptive prompt (anchor color, modifier
maps, stripe modulation), with both sides clamped to [0, 1] as in image export.
"""

from __future__ import annotations

import csv
import io
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from .conditioner import ANCHORS, CLAMP_HI, CLAMP_LO, STRIPE_DEPTH, apply_modifier, stripe_mask
from .latents import rect_to_pixels
from .sampler import Sampler, SamplerConfig
from .scene import COLORS, MODIFIERS, PATTERNS, RegionRect, RegionSpec, SceneSpec

CSV_COLUMNS = ("strategy", "suite", "n", "color_error", "assignment_accuracy",
               "seam_score", "modifier_fidelity", "runtime_ms")

CHROMATIC_COLORS = tuple(c for c in COLORS if c not in ("white", "black"))

_LAYOUTS = {
    1: (((0.0, 1.0, 0.0, 1.0),),),
    2: (
        ((0.0, 1.0, 0.0, 0.5), (0.0, 1.0, 0.5, 0.5)),  # 1x2
        ((0.0, 0.5, 0.0, 1.0), (0.5, 0.5, 0.0, 1.0)),  # 2x1
    ),
    3: (
        ((0.0, 1.0, 0.0, 1 / 3), (0.0, 1.0, 1 / 3, 1 / 3), (0.0, 1.0, 2 / 3, 1 / 3)),  # 1x3
    ),
    4: (
        ((0.0, 0.5, 0.0, 0.5), (0.0, 0.5, 0.5, 0.5),
         (0.5, 0.5, 0.0, 0.5), (0.5, 0.5, 0.5, 0.5)),  # 2x2
    ),
}


@dataclass(frozen=True)
class SceneSuite:
    name: str
    seed: int = 0
    count: int = 50
    k_choices: tuple = (2, 3)
    hints: bool = False
    canvas: int = 64
    modifier: str = "none"  # none | vivid | mixed
    chromatic_only: bool = False
    layout: str = "any"  # any | columns (left/right splits only)


def make_suite(name: str, **overrides) -> SceneSuite:
    presets = {
        "ambiguous3": dict(seed=11, count=200, k_choices=(3,), hints=False),
        # Column layouts keep the seam vertical: the stripe bands run in rows,
        # so cross-boundary pairs compare like stripe phases on both sides.
        "pairs": dict(seed=23, count=100, k_choices=(2,), hints=False, layout="columns"),
        "vivid": dict(seed=37, count=50, k_choices=(2,), hints=False,
                      modifier="vivid", chromatic_only=True),
        "single": dict(seed=5, count=25, k_choices=(1,), hints=False),
        "mixed": dict(seed=41, count=100, k_choices=(1, 2, 3, 4), hints=False,
                      modifier="mixed"),
    }
    if name not in presets:
        raise ValueError(f"unknown suite preset {name!r}; options: {sorted(presets)}")
    params = dict(presets[name])
    params.update(overrides)
    return SceneSuite(name=name, **params)


def generate_suite(suite: SceneSuite):
    """Deterministic scene list; regeneration from (name, seed) is identical."""
    if suite.count < 1:
        raise ValueError("suite count must be >= 1")
    rng = np.random.default_rng(
        np.random.SeedSequence([int(suite.seed), zlib.crc32(suite.name.encode())]))
    colors = CHROMATIC_COLORS if suite.chromatic_only else COLORS
    scenes = []
    seen = set()
    attempts = 0
    while len(scenes) < suite.count:
        attempts += 1
        if attempts > 200 * suite.count:
            raise RuntimeError("suite space exhausted; cannot draw enough distinct scenes")
        k = int(rng.choice(list(suite.k_choices)))
        if k > len(colors):
            raise ValueError(f"k={k} exceeds the {len(colors)}-color palette")
        if k not in _LAYOUTS:
            raise ValueError(f"no layout for k={k}")
        options = _LAYOUTS[k]
        if suite.layout == "columns":
            options = tuple(lay for lay in options
                            if all(r[1] == 1.0 for r in lay)) or options
        layout = options[int(rng.integers(len(options)))]
        chosen = list(rng.choice(len(colors), size=k, replace=False))
        regions = []
        sig = [suite.hints]
        for rect_vals, ci in zip(layout, chosen):
            color = colors[int(ci)]
            pattern = PATTERNS[int(rng.integers(len(PATTERNS)))]
            if suite.modifier == "vivid":
                mods = ("vivid",)
            elif suite.modifier == "mixed":
                pick = int(rng.integers(len(MODIFIERS) + 1))
                mods = () if pick == len(MODIFIERS) else (MODIFIERS[pick],)
            else:
                mods = ()
            base = (color, pattern)
            detail = mods + base
            regions.append(RegionSpec(rect=RegionRect(*rect_vals).validate(),
                                      fundamental=base, descriptive=detail))
            sig.append((rect_vals, base, detail))
        key = repr(sig)
        if key in seen:
            continue
        seen.add(key)
        scenes.append(SceneSpec(canvas_height=suite.canvas, canvas_width=suite.canvas,
                                regions=tuple(regions), location_hints=suite.hints))
    return scenes


# ---------------------------------------------------------------------------
# metrics

def region_map(scene: SceneSpec) -> np.ndarray:
    """Covering region index per pixel; overlaps resolve by list order, later wins."""
    m = np.full((scene.canvas_height, scene.canvas_width), -1, dtype=np.int32)
    for i, spec in enumerate(scene.regions):
        p = rect_to_pixels(spec.rect, scene.canvas_height, scene.canvas_width)
        m[p.row_start:p.row_end, p.col_start:p.col_end] = i
    return m


def _guided_scalar(v, s):
    return np.clip(0.5 + s * (np.asarray(v, dtype=np.float64) - 0.5), CLAMP_LO, CLAMP_HI)


def _region_target_rows(color, modifiers, pattern, rows, s):
    """Target rgb per canvas row index for one region, clamped to [0, 1]."""
    rgb = np.asarray(ANCHORS[color], dtype=np.float64)
    for mod in modifiers:
        rgb = apply_modifier(mod, rgb)
    striped = 1.0 if pattern == "striped" else 0.0
    bands = stripe_mask(rows.max() + 1 if len(rows) else 1)
    out = np.zeros((len(rows), 3), dtype=np.float64)
    for idx, row in enumerate(rows):
        factor = 1.0 - STRIPE_DEPTH * striped * bands[row]
        out[idx] = np.clip(_guided_scalar(rgb * factor, s), 0.0, 1.0)
    return out


def target_field(scene: SceneSpec, cfg: SamplerConfig) -> np.ndarray:
    """Closed-form target image in [0, 1], shape (H, W, 3)."""
    h, w = scene.canvas_height, scene.canvas_width
    m = region_map(scene)
    out = np.zeros((h, w, 3), dtype=np.float64)
    bands = stripe_mask(h)
    for i, spec in enumerate(scene.regions):
        mask = m == i
        if not mask.any():
            continue
        rgb = np.asarray(ANCHORS[spec.color], dtype=np.float64)
        for mod in spec.modifiers:
            rgb = apply_modifier(mod, rgb)
        striped = 1.0 if spec.pattern == "striped" else 0.0
        for row in range(h):
            row_mask = mask[row]
            if not row_mask.any():
                continue
            factor = 1.0 - STRIPE_DEPTH * striped * bands[row]
            out[row, row_mask] = np.clip(_guided_scalar(rgb * factor, cfg.s), 0.0, 1.0)
    return out.astype(np.float32)


def _saturation(rgb):
    return float(np.max(rgb) - np.min(rgb))


def _expected_region_mean(scene, region_index, color, modifiers, s):
    """Mean of the [0,1] target over the region's pixels for a candidate color."""
    m = region_map(scene)
    mask = m == region_index
    spec = scene.regions[region_index]
    rows = np.where(mask.any(axis=1))[0]
    bands = stripe_mask(scene.canvas_height)
    rgb = np.asarray(ANCHORS[color], dtype=np.float64)
    for mod in modifiers:
        rgb = apply_modifier(mod, rgb)
    striped = 1.0 if spec.pattern == "striped" else 0.0
    acc = np.zeros(3)
    n = 0
    for row in rows:
        cnt = int(mask[row].sum())
        factor = 1.0 - STRIPE_DEPTH * striped * bands[row]
        acc += cnt * np.clip(_guided_scalar(rgb * factor, s), 0.0, 1.0)
        n += cnt
    return acc / n


def score(image: np.ndarray, scene: SceneSpec, cfg: SamplerConfig) -> dict:
    """Pure metrics of (image, scene): color error, assignment, seams, modifiers."""
    h, w = scene.canvas_height, scene.canvas_width
    if image.shape[:2] != (h, w):
        raise ValueError(f"image shape {image.shape[:2]} != scene canvas {(h, w)}")
    raw = image.astype(np.float64)
    img = np.clip(raw, 0.0, 1.0)
    tgt = target_field(scene, cfg).astype(np.float64)
    m = region_map(scene)

    per_region_err = []
    correct = 0
    fidelity = []
    for i, spec in enumerate(scene.regions):
        mask = m == i
        if not mask.any():
            continue
        diff = img[mask] - tgt[mask]
        per_region_err.append(float(np.mean(np.linalg.norm(diff, axis=1))))
        mean_color = img[mask].mean(axis=0)
        candidates = [_expected_region_mean(scene, i, c, spec.modifiers, cfg.s)
                      for c in COLORS]
        dists = [float(np.linalg.norm(mean_color - cand)) for cand in candidates]
        if COLORS[int(np.argmin(dists))] == spec.color:
            correct += 1
        if spec.modifiers:
            plain = _expected_region_mean(scene, i, spec.color, (), cfg.s)
            modified = _expected_region_mean(scene, i, spec.color, spec.modifiers, cfg.s)
            specified = _saturation(modified) - _saturation(plain)
            realized = _saturation(mean_color) - _saturation(plain)
            if abs(specified) > 1e-9:
                fidelity.append(realized / specified)

    n_regions = len(per_region_err)
    return {
        "color_error": float(np.mean(per_region_err)) if per_region_err else 0.0,
        "assignment_accuracy": correct / n_regions if n_regions else 1.0,
        # seam is a gradient statistic; the raw latent keeps boundary jumps
        # that the [0,1] display clamp would flatten
        "seam_score": seam_score(raw, m),
        "modifier_fidelity": float(np.mean(fidelity)) if fidelity else 0.0,
        "per_region_error": per_region_err,
    }


def seam_score(img: np.ndarray, m: np.ndarray) -> float:
    """Cross-boundary mean |gradient| minus 1-pixel-inset interior mean |gradient|."""
    boundary = np.zeros_like(m, dtype=bool)
    boundary[:, :-1] |= m[:, :-1] != m[:, 1:]
    boundary[:, 1:] |= m[:, :-1] != m[:, 1:]
    boundary[:-1, :] |= m[:-1, :] != m[1:, :]
    boundary[1:, :] |= m[:-1, :] != m[1:, :]
    if not boundary.any():
        return 0.0
    inset = np.zeros_like(boundary)
    inset[:, :-1] |= boundary[:, 1:]
    inset[:, 1:] |= boundary[:, :-1]
    inset[:-1, :] |= boundary[1:, :]
    inset[1:, :] |= boundary[:-1, :]
    inset &= ~boundary

    def pair_means(axis):
        if axis == 1:
            a, b = img[:, :-1], img[:, 1:]
            ma, mb = m[:, :-1], m[:, 1:]
            fa, fb = boundary[:, :-1], boundary[:, 1:]
            ia, ib = inset[:, :-1], inset[:, 1:]
        else:
            a, b = img[:-1, :], img[1:, :]
            ma, mb = m[:-1, :], m[1:, :]
            fa, fb = boundary[:-1, :], boundary[1:, :]
            ia, ib = inset[:-1, :], inset[1:, :]
        grad = np.abs(a - b).mean(axis=2)
        cross = ma != mb
        interior = (ma == mb) & ia & ib & ~fa & ~fb
        return grad[cross], grad[interior]

    ch, ih = pair_means(1)
    cv, iv = pair_means(0)
    cross_vals = np.concatenate([ch, cv])
    interior_vals = np.concatenate([ih, iv])
    cross_mean = float(cross_vals.mean()) if cross_vals.size else 0.0
    interior_mean = float(interior_vals.mean()) if interior_vals.size else 0.0
    return cross_mean - interior_mean


# ---------------------------------------------------------------------------
# benchmark driver

@dataclass
class MetricsRow:
    strategy: str
    suite: str
    n: int
    color_error: float
    assignment_accuracy: float
    seam_score: float
    modifier_fidelity: float
    runtime_ms: float

    def as_tuple(self):
        return (self.strategy, self.suite, self.n, self.color_error,
                self.assignment_accuracy, self.seam_score, self.modifier_fidelity,
                self.runtime_ms)


def run_benchmark(suite: SceneSuite, strategies, cfg: SamplerConfig,
                  scenes=None, collect_images=False):
    """Run every (scene, strategy) pair; returns (rows, per-scene details)."""
    from dataclasses import replace as dc_replace

    if scenes is None:
        scenes = generate_suite(suite)
    rows = []
    details = {}
    for strategy in strategies:
        strat_cfg = dc_replace(cfg, strategy=strategy).validate()
        sampler = Sampler(strat_cfg)
        per_scene = []
        start = time.perf_counter()
        for scene in scenes:
            traj = sampler.sample(scene)
            rec = score(traj.final, scene, strat_cfg)
            if collect_images:
                rec["image"] = traj.final
            per_scene.append(rec)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        details[strategy] = per_scene
        rows.append(MetricsRow(
            strategy=strategy,
            suite=suite.name,
            n=len(scenes),
            color_error=float(np.mean([r["color_error"] for r in per_scene])),
            assignment_accuracy=float(np.mean([r["assignment_accuracy"] for r in per_scene])),
            seam_score=float(np.mean([r["seam_score"] for r in per_scene])),
            modifier_fidelity=float(np.mean([r["modifier_fidelity"] for r in per_scene])),
            runtime_ms=elapsed_ms,
        ))
    return rows, details


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        t = row.as_tuple()
        writer.writerow([t[0], t[1], t[2]] + [repr(float(v)) for v in t[3:]])
    return buf.getvalue()


def rows_from_csv(text: str):
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    out = []
    for rec in reader:
        out.append(MetricsRow(rec[0], rec[1], int(rec[2]), *(float(v) for v in rec[3:])))
    return out


def rows_to_table(rows) -> str:
    widths = [max(len(str(c)), 18) for c in CSV_COLUMNS]
    def fmt(vals):
        return "  ".join(str(v).ljust(w) for v, w in zip(vals, widths))
    lines = [fmt(CSV_COLUMNS)]
    for row in rows:
        t = row.as_tuple()
        lines.append(fmt([t[0], t[1], t[2]] + [f"{v:.6f}" for v in t[3:]]))
    return "\n".join(lines) + "\n"


def emit_report(rows, out_dir, images=None):
    """Write report.csv and report.txt (and optional per-scene images)."""
    import os

    from . import latents

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "report.csv")
    with open(csv_path, "w", encoding="utf-8") as f:
        f.write(rows_to_csv(rows))
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as f:
        f.write(rows_to_table(rows))
    if images:
        img_dir = os.path.join(out_dir, "images")
        os.makedirs(img_dir, exist_ok=True)
        for name, grid in images.items():
            latents.save_ppm(os.path.join(img_dir, f"{name}.ppm"), grid)
            latents.save_png(os.path.join(img_dir, f"{name}.png"), grid)
    return csv_path
