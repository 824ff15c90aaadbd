// Payload shapes of the upgaudit HTTP API. These mirror the server's JSON
// exports field for field; the client never derives statuses or verdicts
// itself, it only displays what the API reports.

export type Unsafety = "safe" | "unsafe";
export type ObligationStatus = "auto_discharged" | "open" | "manually_discharged";
export type VerdictState = "sound" | "open" | "invalid";
export type VerdictMode = "strong" | "weak";
export type SubgraphKind = "unsafe_node" | "call_with_unsafe_callee" | "struct_audit";
export type NodeKind = "constructor" | "static_fn" | "dynamic_method" | "destructor";

export interface FunctionJson {
  path: string;
  visibility: "public" | "private";
  unsafety: Unsafety;
  receiver: "none" | "ref_self" | "mut_self";
  role: { kind: "plain" | "constructor" | "method" | "destructor"; struct: string | null };
  sc: string[];
  establishes: string[];
  breaks: string[];
  calls: { callee: string; discharge_hints: Record<string, string> }[];
}

export interface ModuleJson {
  path: string;
  functions: FunctionJson[];
  structs: { name: string; fields: { name: string; type: string }[]; invariant_atoms: string[] }[];
  submodules: ModuleJson[];
}

export interface ModelJson {
  name: string;
  root: ModuleJson;
}

export interface UpgNodeJson {
  function: string;
  kind: NodeKind;
  unsafety: Unsafety;
  external: boolean;
}

export interface UpgEdgeJson {
  caller: string;
  callee: string;
  callee_unsafe: boolean;
}

export interface UpgJson {
  nodes: UpgNodeJson[];
  edges: UpgEdgeJson[];
  struct_groups: {
    struct: string;
    constructors: string[];
    dynamic_methods: string[];
    destructor: string | null;
    disruptive: string[];
  }[];
}

export interface SubgraphJson {
  id: string;
  kind: SubgraphKind;
  focus: string;
  nodes: string[];
  edges: { caller: string; callee: string }[];
  obligations: string[];
}

export interface ObligationJson {
  id: string;
  kind: "declare_sc" | "call_discharge" | "pair_discharge";
  subject: string[];
  struct: string | null;
  required: string[];
  available: { atoms: string[]; provenance: Record<string, string>; removed: string[] };
  missing: string[];
  status: ObligationStatus;
}

export interface VerdictEntry {
  state: VerdictState;
  open?: number;
  notes?: string[];
}

export interface VerdictJson {
  crate: VerdictState;
  mode: VerdictMode;
  modules: Record<string, VerdictEntry>;
  structs: Record<string, VerdictEntry>;
  functions: Record<string, VerdictEntry>;
}

export interface JudgmentRequest {
  id: string;
  verdict: "discharged" | "reopened";
  justification: string;
  author: string;
}

export interface JudgmentResponse {
  id: string;
  status: ObligationStatus;
}
