"""Unsafety propagation graph: construction, segmentation, DOT export.

The graph tracks how undefined-behavior risk flows through a crate: its
nodes are functions that are unsafe or that reach unsafe code through
crate-local calls, its edges are the call edges along such paths, and its
struct groups collect the constructors, dynamic methods and destructor of
every struct with at least one member performing an unsafe call.

Node inclusion is transitive (a safe function whose callee chain ends in an
unsafe call is in the graph) while discharge obligations stay direct; the
graph shows propagation, the obligations bind to the function that actually
makes the unsafe call.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import constraints
from .model import CrateModel, FunctionDecl

KIND_CONSTRUCTOR = "constructor"
KIND_STATIC = "static_fn"
KIND_DYNAMIC = "dynamic_method"
KIND_DESTRUCTOR = "destructor"

SUBGRAPH_UNSAFE_NODE = "unsafe_node"
SUBGRAPH_CALL = "call_with_unsafe_callee"
SUBGRAPH_STRUCT = "struct_audit"


@dataclass(frozen=True)
class UpgNode:
    function: str
    kind: str
    unsafety: str
    external: bool = False


@dataclass(frozen=True)
class UpgEdge:
    caller: str
    callee: str
    callee_unsafe: bool


@dataclass(frozen=True)
class StructGroup:
    struct: str
    constructors: tuple[str, ...]
    dynamic_methods: tuple[str, ...]
    destructor: str | None
    disruptive: tuple[str, ...]

    def members(self) -> tuple[str, ...]:
        extra = (self.destructor,) if self.destructor else ()
        return tuple(sorted(self.constructors + self.dynamic_methods + extra))


@dataclass(frozen=True)
class Upg:
    nodes: tuple[UpgNode, ...]
    edges: tuple[UpgEdge, ...]
    struct_groups: tuple[StructGroup, ...]

    def node(self, path: str) -> UpgNode | None:
        for n in self.nodes:
            if n.function == path:
                return n
        return None


@dataclass(frozen=True)
class Subgraph:
    """One audit unit. `focus` is the audited entity's path; `nodes` and
    `edges` are references into the parent graph (struct_audit subgraphs
    additionally list non-node struct members such as disruptive methods
    with no unsafe callees of their own)."""

    id: str
    kind: str
    focus: str
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]


def node_kind(f: FunctionDecl) -> str:
    if f.role == "constructor":
        return KIND_CONSTRUCTOR
    if f.role == "destructor":
        return KIND_DESTRUCTOR
    if f.is_dynamic:
        return KIND_DYNAMIC
    return KIND_STATIC


def unsafe_callees(model: CrateModel, path: str) -> frozenset[str]:
    """Direct callees of `path` whose declaration is unsafe.

    Direct only: a safe intermediary owns the obligations for its own
    unsafe callees.
    """
    f = model.function(path)
    return frozenset(
        cs.callee for cs in f.calls if model.function(cs.callee).unsafety == "unsafe"
    )


def _reaches_unsafe(model: CrateModel) -> dict[str, bool]:
    """Fixpoint: crate functions that reach an unsafe callee through
    crate-local calls (directly or transitively)."""
    local = {f.path: f for f in model.functions()}
    reach = {p: False for p in local}
    changed = True
    while changed:
        changed = False
        for path, f in local.items():
            if reach[path]:
                continue
            for cs in f.calls:
                callee = model.function(cs.callee)
                if callee.unsafety == "unsafe" or reach.get(cs.callee, False):
                    reach[path] = True
                    changed = True
                    break
    return reach


def build_upg(model: CrateModel) -> Upg:
    """Build the graph over a validated model."""
    reach = _reaches_unsafe(model)
    included = {
        f.path: f for f in model.functions() if f.unsafety == "unsafe" or reach[f.path]
    }

    edges: set[UpgEdge] = set()
    extern_nodes: dict[str, FunctionDecl] = {}
    for f in included.values():
        seen: set[str] = set()
        for cs in f.calls:
            if cs.callee in seen:
                continue
            seen.add(cs.callee)
            callee = model.function(cs.callee)
            if callee.unsafety == "unsafe":
                edges.add(UpgEdge(f.path, cs.callee, True))
                if model.is_external(cs.callee):
                    extern_nodes[cs.callee] = callee
            elif cs.callee in included:
                # Safe callee that itself reaches unsafe code: propagation edge.
                edges.add(UpgEdge(f.path, cs.callee, False))

    nodes = [
        UpgNode(f.path, node_kind(f), f.unsafety, external=False)
        for f in included.values()
    ] + [
        UpgNode(e.path, KIND_STATIC, e.unsafety, external=True)
        for e in extern_nodes.values()
    ]

    groups = []
    for s in model.structs():
        ctors = [f.path for f in model.constructors_of(s.path)]
        methods = [f.path for f in model.dynamic_methods_of(s.path)]
        dtor = model.destructor_of(s.path)
        member_paths = ctors + methods + ([dtor.path] if dtor else [])
        if not any(unsafe_callees(model, p) for p in member_paths):
            continue
        disruptive = tuple(
            sorted(
                p
                for p in methods + ([dtor.path] if dtor else [])
                if constraints.bs_of_method(model.function(p))
            )
        )
        groups.append(
            StructGroup(
                struct=s.path,
                constructors=tuple(sorted(ctors)),
                dynamic_methods=tuple(sorted(methods)),
                destructor=dtor.path if dtor else None,
                disruptive=disruptive,
            )
        )

    return Upg(
        nodes=tuple(sorted(nodes, key=lambda n: n.function)),
        edges=tuple(sorted(edges, key=lambda e: (e.caller, e.callee))),
        struct_groups=tuple(sorted(groups, key=lambda g: g.struct)),
    )


def segment(upg: Upg) -> tuple[Subgraph, ...]:
    """Split the graph into audit subgraphs.

    * one `unsafe_node` per unsafe function node,
    * one `call_with_unsafe_callee` per call edge whose discharge is a plain
      function / static-method obligation (every edge not owned by a
      struct_audit subgraph, so propagation-only edges stay covered),
    * one `struct_audit` per dynamic method or destructor with direct unsafe
      callees, spanning that method, all constructors and all disruptive
      methods of its struct.

    Output is ordered by (focus path, kind, counterpart).
    """
    kinds = {n.function: n.kind for n in upg.nodes}
    out: list[Subgraph] = []

    for n in upg.nodes:
        if n.unsafety == "unsafe":
            out.append(
                Subgraph(
                    id=f"unsafe_node:{n.function}",
                    kind=SUBGRAPH_UNSAFE_NODE,
                    focus=n.function,
                    nodes=(n.function,),
                    edges=(),
                )
            )

    dynamic_kinds = (KIND_DYNAMIC, KIND_DESTRUCTOR)
    for e in upg.edges:
        if kinds.get(e.caller) in dynamic_kinds and e.callee_unsafe:
            continue  # owned by the caller's struct_audit subgraph
        out.append(
            Subgraph(
                id=f"call:{e.caller}->{e.callee}",
                kind=SUBGRAPH_CALL,
                focus=e.caller,
                nodes=tuple(sorted({e.caller, e.callee})),
                edges=((e.caller, e.callee),),
            )
        )

    for g in upg.struct_groups:
        candidates = g.dynamic_methods + ((g.destructor,) if g.destructor else ())
        for m in sorted(candidates):
            unsafe_edges = tuple(
                (e.caller, e.callee)
                for e in upg.edges
                if e.caller == m and e.callee_unsafe
            )
            if not unsafe_edges:
                continue
            members = sorted(set(g.constructors) | {m} | set(g.disruptive))
            out.append(
                Subgraph(
                    id=f"struct_audit:{m}",
                    kind=SUBGRAPH_STRUCT,
                    focus=m,
                    nodes=tuple(members),
                    edges=unsafe_edges,
                )
            )

    return tuple(sorted(out, key=lambda s: (s.focus, s.kind, s.id)))


def upg_to_json_dict(upg: Upg) -> dict:
    return {
        "nodes": [
            {"function": n.function, "kind": n.kind, "unsafety": n.unsafety, "external": n.external}
            for n in upg.nodes
        ],
        "edges": [
            {"caller": e.caller, "callee": e.callee, "callee_unsafe": e.callee_unsafe}
            for e in upg.edges
        ],
        "struct_groups": [
            {
                "struct": g.struct,
                "constructors": list(g.constructors),
                "dynamic_methods": list(g.dynamic_methods),
                "destructor": g.destructor,
                "disruptive": list(g.disruptive),
            }
            for g in upg.struct_groups
        ],
    }


def subgraph_to_json_dict(sg: Subgraph) -> dict:
    return {
        "id": sg.id,
        "kind": sg.kind,
        "focus": sg.focus,
        "nodes": list(sg.nodes),
        "edges": [{"caller": a, "callee": b} for a, b in sg.edges],
    }


def _dot_id(path: str) -> str:
    return '"%s"' % path.replace('"', '\\"')


def _node_attrs(node: UpgNode | None) -> str:
    if node is None:
        return ""
    attrs = []
    if node.unsafety == "unsafe":
        attrs.append("shape=box")
    if node.external:
        attrs.append("style=dashed")
    return " [%s]" % ",".join(attrs) if attrs else ""


def export_dot(upg: Upg) -> str:
    """Byte-deterministic DOT rendering: struct groups become clusters,
    unsafe nodes are boxes, extern nodes are dashed."""
    by_path = {n.function: n for n in upg.nodes}
    lines = ["digraph upg {"]
    clustered: set[str] = set()
    for g in upg.struct_groups:
        cluster = g.struct.replace("::", "__")
        lines.append(f"  subgraph cluster_{cluster} {{")
        lines.append(f'    label="{g.struct}";')
        for member in g.members():
            lines.append(f"    {_dot_id(member)}{_node_attrs(by_path.get(member))};")
            clustered.add(member)
        lines.append("  }")
    for n in upg.nodes:
        if n.function not in clustered:
            lines.append(f"  {_dot_id(n.function)}{_node_attrs(n)};")
    for e in upg.edges:
        lines.append(f"  {_dot_id(e.caller)} -> {_dot_id(e.callee)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
