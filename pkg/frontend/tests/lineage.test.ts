import { describe, expect, it } from "vitest";

import { buildLineage, chainTo } from "../src/lineage.js";
import type { RunSummary } from "../src/types.js";

function run(id: string, parent: string | null): RunSummary {
  return {
    run_id: id,
    created_at: `2026-01-01T00:00:0${id.length}`,
    parent_run: parent,
    status: "done",
    k: 2,
    strategy: "rag_full",
  };
}

describe("lineage", () => {
  it("builds a forest with repaint chains nested under their parents", () => {
    const runs = [run("a", null), run("b", "a"), run("c", "b"), run("d", null)];
    const roots = buildLineage(runs);
    expect(roots.map((n) => n.run.run_id)).toEqual(["a", "d"]);
    expect(roots[0].children[0].run.run_id).toBe("b");
    expect(roots[0].children[0].children[0].run.run_id).toBe("c");
  });

  it("returns the root-to-leaf chain for a grandchild", () => {
    const runs = [run("a", null), run("b", "a"), run("c", "b")];
    expect(chainTo(runs, "c").map((r) => r.run_id)).toEqual(["a", "b", "c"]);
    expect(chainTo(runs, "a").map((r) => r.run_id)).toEqual(["a"]);
  });

  it("treats an unknown parent as a root rather than dropping the run", () => {
    const roots = buildLineage([run("b", "missing")]);
    expect(roots).toHaveLength(1);
  });

  it("detects cycles instead of hanging", () => {
    const runs = [run("a", "b"), run("b", "a")];
    expect(() => chainTo(runs, "a")).toThrow("cycle");
  });
});
