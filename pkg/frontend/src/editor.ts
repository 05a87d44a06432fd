import type {
  FractionalRect,
  RegionDraft,
  SceneDocument,
  Vocabulary,
} from "./types.js";

const EPSILON = 1e-9;

export function clamp01(value: number): number {
  return Math.min(1, Math.max(0, value));
}

/** Snap a drag rectangle into a valid fractional rect (offset+scale <= 1). */
export function normalizeRect(rect: FractionalRect): FractionalRect {
  const yOffset = clamp01(rect.y_offset);
  const xOffset = clamp01(rect.x_offset);
  return {
    y_offset: yOffset,
    y_scale: Math.min(clamp01(rect.y_scale), 1 - yOffset),
    x_offset: xOffset,
    x_scale: Math.min(clamp01(rect.x_scale), 1 - xOffset),
  };
}

/** Convert a pixel-space drag (any corner order) into a fractional rect. */
export function dragToRect(
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  canvasWidth: number,
  canvasHeight: number,
): FractionalRect {
  const left = Math.min(x0, x1) / canvasWidth;
  const top = Math.min(y0, y1) / canvasHeight;
  const width = Math.abs(x1 - x0) / canvasWidth;
  const height = Math.abs(y1 - y0) / canvasHeight;
  return normalizeRect({ y_offset: top, y_scale: height, x_offset: left, x_scale: width });
}

export function rectIsValid(rect: FractionalRect): boolean {
  const values = [rect.y_offset, rect.y_scale, rect.x_offset, rect.x_scale];
  if (values.some((v) => !Number.isFinite(v) || v < 0 || v > 1)) return false;
  if (rect.y_scale <= 0 || rect.x_scale <= 0) return false;
  return (
    rect.y_offset + rect.y_scale <= 1 + EPSILON &&
    rect.x_offset + rect.x_scale <= 1 + EPSILON
  );
}

export interface ValidationIssue {
  regionIndex: number | null;
  field: "rect" | "base" | "detail" | "scene";
  message: string;
}

/**
 * Editor state for one layout: region drafts plus submission plumbing.
 * Pure logic — no DOM access — so it is unit-testable and reusable.
 */
export class EditorController {
  regions: RegionDraft[] = [];
  locationHints = true;
  selectedRegion: number | null = null;

  constructor(
    public canvasHeight: number,
    public canvasWidth: number,
    private readonly vocab: Vocabulary,
  ) {}

  addRegion(rect: FractionalRect): number {
    const normalized = normalizeRect(rect);
    this.regions.push({
      rect: normalized,
      base: [this.vocab.colors[0], this.vocab.patterns[0]],
      detail: [],
    });
    this.selectedRegion = this.regions.length - 1;
    return this.selectedRegion;
  }

  removeRegion(index: number): void {
    this.regions.splice(index, 1);
    if (this.selectedRegion !== null && this.selectedRegion >= this.regions.length) {
      this.selectedRegion = this.regions.length ? this.regions.length - 1 : null;
    }
  }

  setTokens(index: number, base: string[], detail: string[]): void {
    this.regions[index] = { ...this.regions[index], base, detail };
  }

  /** Region index under a fractional point, topmost (last drawn) first. */
  regionAt(x: number, y: number): number | null {
    for (let i = this.regions.length - 1; i >= 0; i--) {
      const r = this.regions[i].rect;
      if (
        x >= r.x_offset &&
        x <= r.x_offset + r.x_scale &&
        y >= r.y_offset &&
        y <= r.y_offset + r.y_scale
      ) {
        return i;
      }
    }
    return null;
  }

  validate(): ValidationIssue[] {
    const issues: ValidationIssue[] = [];
    if (this.regions.length === 0) {
      issues.push({ regionIndex: null, field: "scene", message: "add at least one region" });
    }
    this.regions.forEach((region, i) => {
      if (!rectIsValid(region.rect)) {
        issues.push({ regionIndex: i, field: "rect", message: "rectangle exceeds the canvas" });
      }
      issues.push(...this.validateTokens(i, region.base, "base"));
      if (region.detail.length) {
        issues.push(...this.validateTokens(i, region.detail, "detail"));
      }
    });
    return issues;
  }

  private validateTokens(
    index: number,
    tokens: string[],
    field: "base" | "detail",
  ): ValidationIssue[] {
    const issues: ValidationIssue[] = [];
    const colors = tokens.filter((t) => this.vocab.colors.includes(t));
    const patterns = tokens.filter((t) => this.vocab.patterns.includes(t));
    const known = new Set([
      ...this.vocab.colors,
      ...this.vocab.patterns,
      ...this.vocab.modifiers,
    ]);
    for (const token of tokens) {
      if (!known.has(token)) {
        issues.push({ regionIndex: index, field, message: `unknown token '${token}'` });
      }
    }
    if (colors.length !== 1) {
      issues.push({ regionIndex: index, field, message: "exactly one color required" });
    }
    if (patterns.length !== 1) {
      issues.push({ regionIndex: index, field, message: "exactly one pattern required" });
    }
    if (field === "base" && tokens.some((t) => this.vocab.modifiers.includes(t))) {
      issues.push({ regionIndex: index, field, message: "base allows only color and pattern" });
    }
    return issues;
  }

  /** Scene interchange document; callers must check validate() first. */
  toSceneDocument(): SceneDocument {
    return {
      canvas_height: this.canvasHeight,
      canvas_width: this.canvasWidth,
      regions: this.regions.map((region) => ({
        rect: region.rect,
        base: region.base,
        detail: region.detail.length ? region.detail : region.base,
        refine_rect: region.rect,
        synthetic: false,
      })),
      hints: this.locationHints,
    };
  }

  loadSceneDocument(scene: SceneDocument): void {
    this.canvasHeight = scene.canvas_height;
    this.canvasWidth = scene.canvas_width;
    this.locationHints = scene.hints;
    this.regions = scene.regions
      .filter((r) => !r.synthetic)
      .map((r) => ({
        rect: r.rect,
        base: [...r.base],
        detail: [...r.detail],
      }));
    this.selectedRegion = this.regions.length ? 0 : null;
  }
}
