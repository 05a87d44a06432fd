import type { FractionalRect } from "./types.js";
import type { RgbImage } from "./ppm.js";

export interface DiffResult {
  /** Per-pixel changed flags, row-major, length = width * height. */
  changed: Uint8Array;
  changedCount: number;
  width: number;
  height: number;
}

/** Pixel-exact comparison of two equally sized images. */
export function diffImages(before: RgbImage, after: RgbImage): DiffResult {
  if (before.width !== after.width || before.height !== after.height) {
    throw new Error("diff requires equally sized images");
  }
  const { width, height } = before;
  const changed = new Uint8Array(width * height);
  let changedCount = 0;
  for (let p = 0; p < width * height; p++) {
    const base = p * 3;
    if (
      before.data[base] !== after.data[base] ||
      before.data[base + 1] !== after.data[base + 1] ||
      before.data[base + 2] !== after.data[base + 2]
    ) {
      changed[p] = 1;
      changedCount++;
    }
  }
  return { changed, changedCount, width, height };
}

/** Pixel bounds of a fractional rect, floor-aligned like the server's mapping. */
export function rectToPixelBounds(
  rect: FractionalRect,
  height: number,
  width: number,
): { rowStart: number; rowEnd: number; colStart: number; colEnd: number } {
  const rowStart = Math.floor(rect.y_offset * height);
  const colStart = Math.floor(rect.x_offset * width);
  let rowEnd = Math.floor((rect.y_offset + rect.y_scale) * height);
  let colEnd = Math.floor((rect.x_offset + rect.x_scale) * width);
  rowEnd = Math.min(height, Math.max(rowEnd, rowStart + 1));
  colEnd = Math.min(width, Math.max(colEnd, colStart + 1));
  return { rowStart, rowEnd, colStart, colEnd };
}

/** Count of changed pixels that fall outside the given mask rect. */
export function changedOutsideRect(diff: DiffResult, rect: FractionalRect): number {
  const bounds = rectToPixelBounds(rect, diff.height, diff.width);
  let outside = 0;
  for (let row = 0; row < diff.height; row++) {
    for (let col = 0; col < diff.width; col++) {
      if (!diff.changed[row * diff.width + col]) continue;
      const inRect =
        row >= bounds.rowStart &&
        row < bounds.rowEnd &&
        col >= bounds.colStart &&
        col < bounds.colEnd;
      if (!inRect) outside++;
    }
  }
  return outside;
}

/** RGBA overlay (magenta where changed) for drawing onto a canvas. */
export function overlayRgba(diff: DiffResult): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(new ArrayBuffer(diff.width * diff.height * 4));
  for (let p = 0; p < diff.changed.length; p++) {
    if (diff.changed[p]) {
      out[p * 4] = 255;
      out[p * 4 + 2] = 255;
      out[p * 4 + 3] = 160;
    }
  }
  return out;
}
