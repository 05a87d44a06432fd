import { ApiClient, ApiRequestError } from "./api.js";
import { EditorController, dragToRect } from "./editor.js";
import { changedOutsideRect, diffImages, overlayRgba } from "./diff.js";
import { decodePpm } from "./ppm.js";
import { chainTo } from "./lineage.js";
import type { RunRecord, Vocabulary } from "./types.js";

const SCALE = 6; // editor canvas pixels per latent pixel

const api = new ApiClient();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class App {
  private editor!: EditorController;
  private vocab!: Vocabulary;
  private currentRun: RunRecord | null = null;
  private busy = false;
  private drag: { x: number; y: number } | null = null;

  async start(): Promise<void> {
    this.vocab = await api.getVocab();
    this.editor = new EditorController(64, 64, this.vocab);
    this.bindCanvas();
    el<HTMLButtonElement>("generate").addEventListener("click", () => this.generate());
    el<HTMLButtonElement>("repaint").addEventListener("click", () => this.repaint());
    el<HTMLInputElement>("hints").addEventListener("change", (event) => {
      this.editor.locationHints = (event.target as HTMLInputElement).checked;
    });
    this.populateTokenPickers();
    await this.refreshHistory();
    this.renderEditor();
  }

  // -- layout canvas ------------------------------------------------------

  private bindCanvas(): void {
    const canvas = el<HTMLCanvasElement>("layout");
    canvas.width = this.editor.canvasWidth * SCALE;
    canvas.height = this.editor.canvasHeight * SCALE;
    canvas.addEventListener("mousedown", (event) => {
      this.drag = { x: event.offsetX, y: event.offsetY };
    });
    canvas.addEventListener("mouseup", (event) => {
      if (!this.drag) return;
      const start = this.drag;
      this.drag = null;
      const moved = Math.abs(event.offsetX - start.x) + Math.abs(event.offsetY - start.y);
      if (moved < 4) {
        this.editor.selectedRegion = this.editor.regionAt(
          event.offsetX / canvas.width,
          event.offsetY / canvas.height,
        );
      } else {
        this.editor.addRegion(
          dragToRect(start.x, start.y, event.offsetX, event.offsetY, canvas.width, canvas.height),
        );
      }
      this.renderEditor();
    });
  }

  private renderEditor(): void {
    const canvas = el<HTMLCanvasElement>("layout");
    const ctx = canvas.getContext("2d")!;
    ctx.fillStyle = "#1c1f26";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    this.editor.regions.forEach((region, i) => {
      const r = region.rect;
      const x = r.x_offset * canvas.width;
      const y = r.y_offset * canvas.height;
      const w = r.x_scale * canvas.width;
      const h = r.y_scale * canvas.height;
      ctx.strokeStyle = i === this.editor.selectedRegion ? "#ffd166" : "#4cc9f0";
      ctx.lineWidth = 2;
      ctx.strokeRect(x, y, w, h);
      ctx.fillStyle = "#e8e8e8";
      ctx.font = "12px sans-serif";
      ctx.fillText(`${i}: ${region.base.join(" ")}`, x + 4, y + 14);
    });
    this.renderRegionPanel();
    this.renderIssues();
  }

  private populateTokenPickers(): void {
    const fill = (id: string, options: string[], allowEmpty = false) => {
      const select = el<HTMLSelectElement>(id);
      select.innerHTML = "";
      if (allowEmpty) select.append(new Option("(none)", ""));
      for (const option of options) select.append(new Option(option, option));
    };
    fill("pick-color", this.vocab.colors);
    fill("pick-pattern", this.vocab.patterns);
    fill("pick-modifier", this.vocab.modifiers, true);
    fill("repaint-color", this.vocab.colors);
    fill("repaint-pattern", this.vocab.patterns);
    fill("repaint-modifier", this.vocab.modifiers, true);
  }

  private renderRegionPanel(): void {
    const index = this.editor.selectedRegion;
    const panel = el<HTMLElement>("region-panel");
    panel.style.visibility = index === null ? "hidden" : "visible";
    if (index === null) return;
    const region = this.editor.regions[index];
    el<HTMLElement>("region-title").textContent = `region ${index}`;
    el<HTMLSelectElement>("pick-color").value =
      region.base.find((t) => this.vocab.colors.includes(t)) ?? this.vocab.colors[0];
    el<HTMLSelectElement>("pick-pattern").value =
      region.base.find((t) => this.vocab.patterns.includes(t)) ?? this.vocab.patterns[0];
    el<HTMLSelectElement>("pick-modifier").value =
      region.detail.find((t) => this.vocab.modifiers.includes(t)) ?? "";
    const apply = () => {
      const color = el<HTMLSelectElement>("pick-color").value;
      const pattern = el<HTMLSelectElement>("pick-pattern").value;
      const modifier = el<HTMLSelectElement>("pick-modifier").value;
      const base = [color, pattern];
      const detail = modifier ? [modifier, color, pattern] : [];
      this.editor.setTokens(index, base, detail);
      this.renderEditor();
    };
    for (const id of ["pick-color", "pick-pattern", "pick-modifier"]) {
      el<HTMLSelectElement>(id).onchange = apply;
    }
    el<HTMLButtonElement>("remove-region").onclick = () => {
      this.editor.removeRegion(index);
      this.renderEditor();
    };
  }

  private renderIssues(): void {
    const issues = this.editor.validate();
    el<HTMLElement>("issues").textContent = issues
      .map((i) => (i.regionIndex === null ? i.message : `region ${i.regionIndex}: ${i.message}`))
      .join("; ");
    el<HTMLButtonElement>("generate").disabled = this.busy || issues.length > 0;
  }

  // -- runs ---------------------------------------------------------------

  private setBusy(busy: boolean): void {
    this.busy = busy;
    el<HTMLButtonElement>("generate").disabled = busy;
    el<HTMLButtonElement>("repaint").disabled = busy || this.currentRun === null;
  }

  private async generate(): Promise<void> {
    if (this.editor.validate().length) return; // inline issues already shown
    this.setBusy(true);
    try {
      const { run_id } = await api.createRun(this.editor.toSceneDocument(), { seed: 0 });
      await this.showRun(run_id, null);
    } catch (error) {
      this.showError(error);
    } finally {
      this.setBusy(false);
      await this.refreshHistory();
    }
  }

  private async repaint(): Promise<void> {
    if (!this.currentRun) return;
    const index = Number(el<HTMLSelectElement>("repaint-region").value);
    const color = el<HTMLSelectElement>("repaint-color").value;
    const pattern = el<HTMLSelectElement>("repaint-pattern").value;
    const modifier = el<HTMLSelectElement>("repaint-modifier").value;
    const base = [color, pattern];
    const detail = modifier ? [modifier, color, pattern] : base;
    this.setBusy(true);
    try {
      const parentId = this.currentRun.run_id;
      const { run_id } = await api.createRepaint(parentId, {
        region_index: index,
        base,
        detail,
      });
      await this.showRun(run_id, parentId);
    } catch (error) {
      this.showError(error);
    } finally {
      this.setBusy(false);
      await this.refreshHistory();
    }
  }

  private async showRun(runId: string, parentId: string | null): Promise<void> {
    const record = await api.getRun(runId);
    this.currentRun = record;
    el<HTMLImageElement>("result").src = api.imageUrl(runId, "png") + `?v=${Date.now()}`;
    el<HTMLElement>("run-meta").textContent =
      `run ${runId.slice(0, 12)}…  prompt: ${record.global_prompt.join(" ")}  ` +
      `sha256 ${record.image_sha256.slice(0, 16)}…`;
    const picker = el<HTMLSelectElement>("repaint-region");
    picker.innerHTML = "";
    record.scene.regions.forEach((region, i) => {
      if (!region.synthetic) {
        picker.append(new Option(`${i}: ${region.base.join(" ")}`, String(i)));
      }
    });
    el<HTMLButtonElement>("repaint").disabled = false;
    if (parentId) {
      await this.renderDiff(parentId, record);
    } else {
      el<HTMLElement>("diff-summary").textContent = "";
      const overlay = el<HTMLCanvasElement>("diff-overlay");
      overlay.getContext("2d")!.clearRect(0, 0, overlay.width, overlay.height);
      el<HTMLImageElement>("parent-image").removeAttribute("src");
    }
  }

  private async renderDiff(parentId: string, record: RunRecord): Promise<void> {
    el<HTMLImageElement>("parent-image").src = api.imageUrl(parentId, "png");
    const [beforeBytes, afterBytes] = await Promise.all([
      api.fetchImageBytes(parentId, "ppm"),
      api.fetchImageBytes(record.run_id, "ppm"),
    ]);
    const diff = diffImages(decodePpm(beforeBytes), decodePpm(afterBytes));
    const overlay = el<HTMLCanvasElement>("diff-overlay");
    overlay.width = diff.width;
    overlay.height = diff.height;
    const ctx = overlay.getContext("2d")!;
    ctx.putImageData(new ImageData(overlayRgba(diff), diff.width, diff.height), 0, 0);
    const repaint = record.repaint;
    let confinement = "";
    if (repaint && repaint.region_index !== null && repaint.region_index !== undefined) {
      const rect = record.scene.regions[repaint.region_index].rect;
      const outside = changedOutsideRect(diff, rect);
      confinement = outside === 0 ? " — confined to the selected region" : ` — ${outside}px leaked!`;
    }
    el<HTMLElement>("diff-summary").textContent =
      `${diff.changedCount} pixels changed${confinement}`;
  }

  private async refreshHistory(): Promise<void> {
    const runs = await api.listRuns();
    const list = el<HTMLElement>("history");
    list.innerHTML = "";
    for (const run of runs) {
      const item = document.createElement("li");
      const depth = chainTo(runs, run.run_id).length - 1;
      item.textContent = `${"  ".repeat(depth)}${depth ? "↳ " : ""}${run.run_id.slice(0, 12)}… ` +
        `(${run.k} regions, ${run.strategy})`;
      item.onclick = () => void this.showRun(run.run_id, run.parent_run);
      list.append(item);
    }
  }

  private showError(error: unknown): void {
    const message =
      error instanceof ApiRequestError
        ? `${error.detail.code}: ${error.detail.message}`
        : String(error);
    el<HTMLElement>("issues").textContent = message;
  }
}

void new App().start();
