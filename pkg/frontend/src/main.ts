// Bootstrap: wire the workbench store to the DOM. Rendering is a full
// redraw from the latest snapshot; state lives in the store, not the DOM.

import { ApiClient } from "./api.js";
import { layoutSubgraph, renderSvg } from "./graph.js";
import { el, functionPanel, obligationCard } from "./panels.js";
import { matchesFilter, Workbench, type StatusFilter } from "./state.js";
import type { ModelJson, SubgraphJson, VerdictEntry } from "./types.js";

const workbench = new Workbench(new ApiClient(""));
let model: ModelJson | null = null;
let detail: HTMLElement | null = null;

function verdictLabel(entry: VerdictEntry | undefined): string {
  if (!entry) return "unknown";
  if (entry.state === "open") return `open (${entry.open ?? "?"} unresolved)`;
  return entry.state;
}

function banner(text: string, state: string): HTMLElement {
  const b = el("div", `banner state-${state}`);
  b.appendChild(el("strong", undefined, text));
  return b;
}

function subgraphLabel(sg: SubgraphJson): string {
  const open = workbench.openObligations(sg).length;
  const suffix = open > 0 ? ` (${open} open)` : "";
  return `${sg.focus}${suffix}`;
}

function renderSidebar(root: HTMLElement): void {
  const snap = workbench.snapshot;
  if (!snap) return;
  root.replaceChildren();
  const kinds: { kind: SubgraphJson["kind"]; title: string }[] = [
    { kind: "unsafe_node", title: "Unsafe nodes" },
    { kind: "call_with_unsafe_callee", title: "Calls with unsafe callees" },
    { kind: "struct_audit", title: "Struct audits" },
  ];
  for (const { kind, title } of kinds) {
    const items = snap.subgraphs.filter((sg) => sg.kind === kind);
    if (items.length === 0) continue;
    root.appendChild(el("h2", "sidebar-title", title));
    const list = el("ul", "subgraph-list");
    for (const sg of items) {
      const li = el("li", sg.id === workbench.view.selectedSubgraph ? "selected" : "");
      const button = el("button", "subgraph-button", subgraphLabel(sg));
      button.addEventListener("click", () => {
        workbench.selectSubgraph(sg.id);
        render();
      });
      li.appendChild(button);
      list.appendChild(li);
    }
    root.appendChild(list);
  }
}

function renderMain(root: HTMLElement): void {
  const snap = workbench.snapshot;
  root.replaceChildren();
  if (!snap) return;

  const crateBanner = banner(
    `crate ${snap.crateName}: ${snap.verdict.crate} [${workbench.view.mode}]`,
    snap.verdict.crate,
  );
  root.appendChild(crateBanner);

  const sg = workbench.selected();
  if (!sg) {
    root.appendChild(el("p", "muted", "nothing to audit: the propagation graph is empty"));
    return;
  }

  const structVerdict = workbench.structVerdict(sg);
  if (structVerdict) {
    root.appendChild(banner(`struct verdict: ${verdictLabel(structVerdict)}`, structVerdict.state));
  }

  root.appendChild(
    renderSvg(layoutSubgraph(sg, snap.upg), {
      onNodeClick(path) {
        if (model) {
          detail?.replaceChildren(functionPanel(model, path));
        }
      },
      onEdgeClick(caller, callee) {
        const related = workbench
          .obligationsOf(sg)
          .filter((o) => o.subject.includes(caller) && o.subject.includes(callee));
        const panel = el("div", "detail-panel");
        panel.appendChild(el("h3", "panel-title", `${caller} → ${callee}`));
        for (const o of related) {
          panel.appendChild(obligationCard(o, false, submit));
        }
        if (related.length === 0) {
          panel.appendChild(el("p", "muted", "no obligations attached to this edge"));
        }
        detail?.replaceChildren(panel);
      },
    }),
  );

  const filterBar = el("div", "filter-bar");
  for (const f of ["all", "open", "auto", "manual"] as StatusFilter[]) {
    const b = el("button", workbench.view.filter === f ? "active" : "", f);
    b.addEventListener("click", () => {
      workbench.setFilter(f);
      render();
    });
    filterBar.appendChild(b);
  }
  root.appendChild(filterBar);

  const list = el("div", "obligation-list");
  const visible = workbench
    .obligationsOf(sg)
    .filter((o) => matchesFilter(o.status, workbench.view.filter));
  for (const o of visible) {
    list.appendChild(obligationCard(o, o.id === workbench.view.focusedObligation, submit));
  }
  if (visible.length === 0) {
    list.appendChild(el("p", "muted", "no obligations match the filter"));
  }
  root.appendChild(list);
}

async function submit(
  obligationId: string,
  verdict: "discharged" | "reopened",
  justification: string,
): Promise<void> {
  await workbench.submitJudgment(obligationId, verdict, justification, "workbench");
  render();
  const focused = workbench.view.focusedObligation;
  if (focused) {
    document.querySelector(`[data-obligation-id="${focused}"]`)?.scrollIntoView({ block: "nearest" });
  }
}

function renderHeader(root: HTMLElement): void {
  root.replaceChildren();
  root.appendChild(el("h1", undefined, "upgaudit workbench"));
  const modeBar = el("div", "mode-bar");
  for (const mode of ["strong", "weak"] as const) {
    const b = el("button", workbench.view.mode === mode ? "active" : "", mode);
    b.addEventListener("click", () => {
      void workbench.setMode(mode).then(render);
    });
    modeBar.appendChild(b);
  }
  root.appendChild(modeBar);
}

function render(): void {
  detail = document.getElementById("detail");
  renderHeader(document.getElementById("header")!);
  renderSidebar(document.getElementById("sidebar")!);
  renderMain(document.getElementById("main")!);
}

async function boot(): Promise<void> {
  const mainEl = document.getElementById("main")!;
  try {
    model = await workbench.api.model();
    await workbench.refresh();
    render();
  } catch (err) {
    const retry = el("div", "banner state-invalid");
    retry.appendChild(el("strong", undefined, `failed to load: ${err instanceof Error ? err.message : err}`));
    const again = el("button", undefined, "retry");
    again.addEventListener("click", () => {
      void boot();
    });
    retry.appendChild(again);
    mainEl.replaceChildren(retry);
  }
}

void boot();
