import type { RunSummary } from "./types.js";

export interface LineageNode {
  run: RunSummary;
  children: LineageNode[];
}

/** Forest of parent→child repaint chains, preserving creation order. */
export function buildLineage(runs: RunSummary[]): LineageNode[] {
  const nodes = new Map<string, LineageNode>();
  for (const run of runs) {
    nodes.set(run.run_id, { run, children: [] });
  }
  const roots: LineageNode[] = [];
  for (const run of runs) {
    const node = nodes.get(run.run_id)!;
    const parent = run.parent_run ? nodes.get(run.parent_run) : undefined;
    if (parent) {
      parent.children.push(node);
    } else {
      roots.push(node);
    }
  }
  return roots;
}

/** Chain from the root ancestor down to the given run, inclusive. */
export function chainTo(runs: RunSummary[], runId: string): RunSummary[] {
  const byId = new Map(runs.map((r) => [r.run_id, r]));
  const chain: RunSummary[] = [];
  let current = byId.get(runId);
  const seen = new Set<string>();
  while (current) {
    if (seen.has(current.run_id)) throw new Error("lineage cycle detected");
    seen.add(current.run_id);
    chain.unshift(current);
    current = current.parent_run ? byId.get(current.parent_run) : undefined;
  }
  return chain;
}
