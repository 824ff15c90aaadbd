// Detail panels: function facts, obligation cards and the judgment form.
// Pure DOM construction from API payloads; no state beyond the arguments.

import type { FunctionJson, ModelJson, ObligationJson } from "./types.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function atomChips(title: string, atoms: string[], variant: string): HTMLElement {
  const row = el("div", "atom-row");
  row.appendChild(el("span", "atom-row-title", title));
  if (atoms.length === 0) {
    row.appendChild(el("span", "atom empty", "none"));
  }
  for (const a of atoms) {
    row.appendChild(el("span", `atom ${variant}`, a));
  }
  return row;
}

export function findFunction(model: ModelJson, path: string): FunctionJson | undefined {
  const walk = (mod: ModelJson["root"]): FunctionJson | undefined => {
    for (const f of mod.functions) {
      if (f.path === path) return f;
    }
    for (const sub of mod.submodules) {
      const hit = walk(sub);
      if (hit) return hit;
    }
    return undefined;
  };
  return walk(model.root);
}

export function functionPanel(model: ModelJson, path: string): HTMLElement {
  const panel = el("div", "detail-panel");
  panel.appendChild(el("h3", "panel-title", path));
  const f = findFunction(model, path);
  if (!f) {
    panel.appendChild(el("p", "muted", "external function (declared constraints only)"));
  } else {
    const badges = el("div", "badges");
    badges.appendChild(el("span", `badge ${f.unsafety}`, f.unsafety));
    badges.appendChild(el("span", "badge", f.visibility));
    badges.appendChild(el("span", "badge", f.role.kind === "plain" ? "function" : f.role.kind));
    panel.appendChild(badges);
  }
  panel.appendChild(atomChips("safety constraints", f?.sc ?? [], "sc"));
  panel.appendChild(atomChips("establishes", f?.establishes ?? [], "est"));
  panel.appendChild(atomChips("breaks", f?.breaks ?? [], "brk"));
  return panel;
}

function subjectLine(o: ObligationJson): string {
  switch (o.kind) {
    case "declare_sc":
      return `${o.subject[0]} must declare its safety constraints`;
    case "call_discharge":
      return `${o.subject[0]} → ${o.subject[1]}`;
    case "pair_discharge":
      return `(${o.subject[0]}, ${o.subject[1]}) → ${o.subject[2]}`;
  }
}

export interface JudgmentFormHandler {
  (obligationId: string, verdict: "discharged" | "reopened", justification: string): Promise<void>;
}

export function obligationCard(
  o: ObligationJson,
  focused: boolean,
  onSubmit: JudgmentFormHandler,
): HTMLElement {
  const card = el("section", `obligation status-${o.status}${focused ? " focused" : ""}`);
  card.dataset["obligationId"] = o.id;

  const head = el("header", "obligation-head");
  head.appendChild(el("span", `status-pill ${o.status}`, o.status.replace("_", " ")));
  head.appendChild(el("code", "obligation-id", o.id));
  head.appendChild(el("span", "obligation-kind", o.kind));
  card.appendChild(head);
  card.appendChild(el("p", "obligation-subject", subjectLine(o)));

  card.appendChild(atomChips("required", o.required, "sc"));
  card.appendChild(atomChips("available", o.available.atoms, "est"));
  if (o.available.removed.length > 0) {
    card.appendChild(atomChips("removed by disruption", o.available.removed, "brk"));
  }
  if (o.missing.length > 0) {
    card.appendChild(atomChips("missing", o.missing, "missing"));
  }

  const form = el("form", "judgment-form");
  const textarea = el("textarea") as HTMLTextAreaElement;
  textarea.placeholder = "justification (required)";
  textarea.rows = 2;
  const errorBox = el("p", "form-error");
  errorBox.hidden = true;
  const buttons = el("div", "form-buttons");
  const discharge = el("button", "discharge", "discharge") as HTMLButtonElement;
  discharge.type = "submit";
  discharge.dataset["verdict"] = "discharged";
  const reopen = el("button", "reopen", "reopen") as HTMLButtonElement;
  reopen.type = "submit";
  reopen.dataset["verdict"] = "reopened";
  if (o.status === "open") {
    buttons.appendChild(discharge);
  } else if (o.status === "manually_discharged") {
    buttons.appendChild(reopen);
  }
  // auto_discharged obligations carry no form actions: they are facts.

  let verdict: "discharged" | "reopened" = o.status === "open" ? "discharged" : "reopened";
  for (const b of [discharge, reopen]) {
    b.addEventListener("click", () => {
      verdict = b.dataset["verdict"] as "discharged" | "reopened";
    });
  }
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const justification = textarea.value;
    if (justification.trim() === "") {
      errorBox.textContent = "justification must be non-empty";
      errorBox.hidden = false;
      return; // no request is sent; the typed text stays
    }
    errorBox.hidden = true;
    onSubmit(o.id, verdict, justification).catch((err: unknown) => {
      errorBox.textContent = err instanceof Error ? err.message : String(err);
      errorBox.hidden = false;
    });
  });

  if (buttons.childElementCount > 0) {
    form.append(textarea, errorBox, buttons);
    card.appendChild(form);
  }
  return card;
}
