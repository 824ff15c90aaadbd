// Workbench state and the fetch/submit cycle. All soundness logic stays
// server-side: this module only holds what the API returned plus the view
// selection, and re-fetches after every acknowledged mutation (optimistic
// updates are deliberately absent).

import { ApiClient } from "./api.js";
import type {
  ObligationJson,
  ObligationStatus,
  SubgraphJson,
  UpgJson,
  VerdictEntry,
  VerdictJson,
  VerdictMode,
} from "./types.js";

export type StatusFilter = "all" | "open" | "auto" | "manual";

export interface ViewState {
  selectedSubgraph: string | null;
  focusedObligation: string | null;
  filter: StatusFilter;
  mode: VerdictMode;
}

export interface Snapshot {
  crateName: string;
  upg: UpgJson;
  subgraphs: SubgraphJson[];
  obligations: ObligationJson[];
  verdict: VerdictJson;
}

const FILTER_TO_STATUS: Record<Exclude<StatusFilter, "all">, ObligationStatus> = {
  open: "open",
  auto: "auto_discharged",
  manual: "manually_discharged",
};

export function matchesFilter(status: ObligationStatus, filter: StatusFilter): boolean {
  return filter === "all" || status === FILTER_TO_STATUS[filter];
}

export class Workbench {
  view: ViewState = { selectedSubgraph: null, focusedObligation: null, filter: "all", mode: "strong" };
  snapshot: Snapshot | null = null;

  constructor(readonly api: ApiClient) {}

  /** Full fetch cycle; keeps the selection when it still exists. */
  async refresh(): Promise<Snapshot> {
    const [model, upg, subgraphs, obligations, verdict] = await Promise.all([
      this.api.model(),
      this.api.upg(),
      this.api.subgraphs(),
      this.api.obligations(),
      this.api.verdict(this.view.mode),
    ]);
    this.snapshot = { crateName: model.name, upg, subgraphs, obligations, verdict };
    if (this.view.selectedSubgraph !== null && !this.subgraph(this.view.selectedSubgraph)) {
      this.view.selectedSubgraph = null;
    }
    if (this.view.selectedSubgraph === null && subgraphs.length > 0) {
      // Prefer the first subgraph that still has open work.
      const open = subgraphs.find((sg) => this.openObligations(sg).length > 0);
      this.view.selectedSubgraph = (open ?? subgraphs[0]!).id;
    }
    return this.snapshot;
  }

  subgraph(id: string): SubgraphJson | undefined {
    return this.snapshot?.subgraphs.find((sg) => sg.id === id);
  }

  selected(): SubgraphJson | undefined {
    return this.view.selectedSubgraph ? this.subgraph(this.view.selectedSubgraph) : undefined;
  }

  obligation(id: string): ObligationJson | undefined {
    return this.snapshot?.obligations.find((o) => o.id === id);
  }

  obligationsOf(sg: SubgraphJson): ObligationJson[] {
    return sg.obligations
      .map((id) => this.obligation(id))
      .filter((o): o is ObligationJson => o !== undefined);
  }

  openObligations(sg: SubgraphJson): ObligationJson[] {
    return this.obligationsOf(sg).filter((o) => o.status === "open");
  }

  selectSubgraph(id: string): void {
    if (!this.subgraph(id)) {
      throw new Error(`unknown subgraph ${id}`);
    }
    this.view.selectedSubgraph = id;
    this.view.focusedObligation = null;
  }

  setFilter(filter: StatusFilter): void {
    this.view.filter = filter;
  }

  async setMode(mode: VerdictMode): Promise<void> {
    this.view.mode = mode;
    if (this.snapshot) {
      this.snapshot.verdict = await this.api.verdict(mode);
    }
  }

  /** Verdict entry for the struct audited by a struct_audit subgraph. */
  structVerdict(sg: SubgraphJson): VerdictEntry | undefined {
    if (sg.kind !== "struct_audit" || !this.snapshot) return undefined;
    const pair = this.obligationsOf(sg).find((o) => o.struct !== null);
    const structPath =
      pair?.struct ?? this.snapshot.upg.struct_groups.find((g) => g.dynamic_methods.includes(sg.focus))?.struct;
    return structPath ? this.snapshot.verdict.structs[structPath] : undefined;
  }

  /**
   * Submit a judgment, then re-fetch obligations and the verdict (one fetch
   * cycle). The next open obligation in the current subgraph, if any, is
   * focused. Client-side validation rejects an empty justification before
   * any request is sent.
   */
  async submitJudgment(
    obligationId: string,
    verdict: "discharged" | "reopened",
    justification: string,
    author: string,
  ): Promise<void> {
    if (justification.trim() === "") {
      throw new Error("justification must be non-empty");
    }
    await this.api.submitJudgment({ id: obligationId, verdict, justification, author });
    const [obligations, verdictTree] = await Promise.all([
      this.api.obligations(),
      this.api.verdict(this.view.mode),
    ]);
    if (this.snapshot) {
      this.snapshot.obligations = obligations;
      this.snapshot.verdict = verdictTree;
    }
    const current = this.selected();
    const next = current ? this.openObligations(current)[0] : undefined;
    this.view.focusedObligation = next ? next.id : null;
  }
}
