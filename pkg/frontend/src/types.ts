export interface FractionalRect {
  y_offset: number;
  y_scale: number;
  x_offset: number;
  x_scale: number;
}

export interface RegionDraft {
  rect: FractionalRect;
  base: string[];
  detail: string[];
}

export interface SceneRegionDocument {
  rect: FractionalRect;
  base: string[];
  detail: string[];
  refine_rect: FractionalRect;
  synthetic: boolean;
}

export interface SceneDocument {
  canvas_height: number;
  canvas_width: number;
  regions: SceneRegionDocument[];
  hints: boolean;
  global?: string[];
}

export interface SamplerConfig {
  T?: number;
  r?: number;
  delta?: number;
  s?: number;
  seed?: number;
  strategy?: string;
}

export interface Vocabulary {
  colors: string[];
  patterns: string[];
  modifiers: string[];
  locations: string[];
  anchors: Record<string, number[]>;
}

export interface RunSummary {
  run_id: string;
  created_at: string;
  parent_run: string | null;
  status: string;
  k: number;
  strategy: string;
}

export interface RunRecord {
  run_id: string;
  created_at: string;
  scene: SceneDocument;
  config: Record<string, unknown>;
  parent_run: string | null;
  repaint: RepaintRequest | null;
  status: string;
  global_prompt: string[];
  image_sha256: string;
}

export interface RepaintRequest {
  region_index?: number | null;
  mask_rect?: FractionalRect | null;
  base?: string[] | null;
  detail?: string[] | null;
  nonce?: number | null;
}

export interface ApiError {
  code: string;
  message: string;
  position?: { line: number; col: number };
}
