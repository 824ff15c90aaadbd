import { describe, expect, it } from "vitest";

import type { ApiClient } from "../src/api.js";
import { layoutSubgraph } from "../src/graph.js";
import { matchesFilter, Workbench } from "../src/state.js";
import type {
  ModelJson,
  ObligationJson,
  SubgraphJson,
  UpgJson,
  VerdictJson,
  VerdictMode,
} from "../src/types.js";

// A miniature crate in API form: one struct audit with one open pair
// obligation, mirroring the disruptive-buffer shape the server produces.

const MODEL: ModelJson = {
  name: "c",
  root: { path: "c", functions: [], structs: [], submodules: [] },
};

const UPG: UpgJson = {
  nodes: [
    { function: "c::get", kind: "dynamic_method", unsafety: "safe", external: false },
    { function: "get_unchecked", kind: "static_fn", unsafety: "unsafe", external: true },
  ],
  edges: [{ caller: "c::get", callee: "get_unchecked", callee_unsafe: true }],
  struct_groups: [
    {
      struct: "c::Buf",
      constructors: ["c::new"],
      dynamic_methods: ["c::get", "c::set_len"],
      destructor: null,
      disruptive: ["c::set_len"],
    },
  ],
};

const OBLIGATION: ObligationJson = {
  id: "0d5dfa73315757fa",
  kind: "pair_discharge",
  subject: ["c::new", "c::get", "get_unchecked"],
  struct: "c::Buf",
  required: ["len_ok"],
  available: { atoms: [], provenance: {}, removed: ["len_ok"] },
  missing: ["len_ok"],
  status: "open",
};

const SUBGRAPHS: SubgraphJson[] = [
  {
    id: "struct_audit:c::get",
    kind: "struct_audit",
    focus: "c::get",
    nodes: ["c::get", "c::new", "c::set_len"],
    edges: [{ caller: "c::get", callee: "get_unchecked" }],
    obligations: [OBLIGATION.id],
  },
  {
    id: "unsafe_node:get_unchecked",
    kind: "unsafe_node",
    focus: "get_unchecked",
    nodes: ["get_unchecked"],
    edges: [],
    obligations: [],
  },
];

function verdict(structState: "open" | "sound"): VerdictJson {
  return {
    crate: structState,
    mode: "strong",
    modules: { c: { state: structState, ...(structState === "open" ? { open: 1 } : {}) } },
    structs: { "c::Buf": { state: structState, ...(structState === "open" ? { open: 1 } : {}) } },
    functions: {},
  };
}

class FakeApi {
  discharged = false;
  posts: unknown[] = [];
  verdictFetches = 0;
  obligationFetches = 0;

  async model() {
    return MODEL;
  }
  async upg() {
    return UPG;
  }
  async subgraphs() {
    return SUBGRAPHS;
  }
  async obligations(): Promise<ObligationJson[]> {
    this.obligationFetches += 1;
    return [{ ...OBLIGATION, status: this.discharged ? "manually_discharged" : "open" }];
  }
  async verdict(_mode: VerdictMode): Promise<VerdictJson> {
    this.verdictFetches += 1;
    return verdict(this.discharged ? "sound" : "open");
  }
  async submitJudgment(req: { id: string; justification: string }) {
    this.posts.push(req);
    this.discharged = true;
    return { id: req.id, status: "manually_discharged" as const };
  }
}

function makeWorkbench() {
  const api = new FakeApi();
  return { api, wb: new Workbench(api as unknown as ApiClient) };
}

describe("workbench state", () => {
  it("selects the first subgraph with open work after refresh", async () => {
    const { wb } = makeWorkbench();
    await wb.refresh();
    expect(wb.view.selectedSubgraph).toBe("struct_audit:c::get");
  });

  it("rejects selecting a subgraph id the API never reported", async () => {
    const { wb } = makeWorkbench();
    await wb.refresh();
    expect(() => wb.selectSubgraph("struct_audit:c::nope")).toThrow(/unknown subgraph/);
    expect(wb.view.selectedSubgraph).toBe("struct_audit:c::get");
  });

  it("reports the struct verdict entry for struct audits", async () => {
    const { wb } = makeWorkbench();
    await wb.refresh();
    const sg = wb.selected()!;
    expect(wb.structVerdict(sg)?.state).toBe("open");
  });

  it("refuses to submit an empty justification without any request", async () => {
    const { api, wb } = makeWorkbench();
    await wb.refresh();
    await expect(wb.submitJudgment(OBLIGATION.id, "discharged", "   ", "t")).rejects.toThrow(
      /justification/,
    );
    expect(api.posts).toHaveLength(0);
  });

  it("submit re-fetches obligations and verdict in one cycle", async () => {
    const { api, wb } = makeWorkbench();
    await wb.refresh();
    const before = { o: api.obligationFetches, v: api.verdictFetches };
    await wb.submitJudgment(OBLIGATION.id, "discharged", "reviewed the resize path", "t");
    expect(api.posts).toHaveLength(1);
    expect(api.obligationFetches).toBe(before.o + 1);
    expect(api.verdictFetches).toBe(before.v + 1);
    expect(wb.structVerdict(wb.selected()!)?.state).toBe("sound");
    expect(wb.obligation(OBLIGATION.id)?.status).toBe("manually_discharged");
  });

  it("focuses the next open obligation after a judgment (none left here)", async () => {
    const { wb } = makeWorkbench();
    await wb.refresh();
    await wb.submitJudgment(OBLIGATION.id, "discharged", "ok", "t");
    expect(wb.view.focusedObligation).toBeNull();
  });

  it("status filter matches the API statuses only", () => {
    expect(matchesFilter("open", "all")).toBe(true);
    expect(matchesFilter("open", "open")).toBe(true);
    expect(matchesFilter("auto_discharged", "auto")).toBe(true);
    expect(matchesFilter("manually_discharged", "manual")).toBe(true);
    expect(matchesFilter("auto_discharged", "open")).toBe(false);
  });
});

describe("subgraph layout", () => {
  it("groups struct audits into labeled columns", () => {
    const layout = layoutSubgraph(SUBGRAPHS[0]!, UPG);
    expect(layout.columns.map((c) => c.title)).toEqual([
      "constructors",
      "audited method",
      "disruptive",
      "unsafe callees",
    ]);
    const byPath = new Map(layout.nodes.map((n) => [n.path, n]));
    expect(byPath.get("c::new")?.column).toBe(0);
    expect(byPath.get("c::get")?.column).toBe(1);
    expect(byPath.get("c::set_len")?.column).toBe(2);
    expect(byPath.get("get_unchecked")?.column).toBe(3);
    expect(byPath.get("get_unchecked")?.unsafety).toBe("unsafe");
    expect(byPath.get("get_unchecked")?.external).toBe(true);
  });

  it("keeps every edge endpoint placed", () => {
    const layout = layoutSubgraph(SUBGRAPHS[0]!, UPG);
    expect(layout.edges).toHaveLength(1);
    expect(layout.edges[0]!.caller).toBe("c::get");
    expect(layout.edges[0]!.callee).toBe("get_unchecked");
  });

  it("renders a single column for unsafe nodes", () => {
    const layout = layoutSubgraph(SUBGRAPHS[1]!, UPG);
    expect(layout.columns).toHaveLength(1);
    expect(layout.nodes).toHaveLength(1);
  });
});
