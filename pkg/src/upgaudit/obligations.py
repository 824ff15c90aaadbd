"""Discharge obligations and verdict rollup.

An obligation is one thing the auditor (or the set algebra on their behalf)
must establish:

  * `declare_sc`: an unsafe function in the crate declares no safety
    constraints and must be annotated. Never auto-discharged.
  * `call_discharge`: a function or static-like caller must cover one unsafe
    callee's constraint set from its own facts.
  * `pair_discharge`: a (constructor, dynamic method) pair must cover one of
    the method's unsafe callees, after subtracting every invariant the
    struct's disruptive methods may break.

Obligation ids are content hashes of (kind, subjects, required atoms), so
regenerating on an unchanged model reproduces identical ids; audit judgments
attach to those ids.

Verdicts roll up: a function or struct is sound when all its obligations are
discharged (automatically or by judgment); a module is sound when its
members are, recursively; the crate when every module is. Weak mode limits
the quantification to public functions and public structs.
"""

from __future__ import annotations

import hashlib
from collections import defaultdict
from dataclasses import dataclass

from . import upg as upg_mod
from .constraints import AvailableFacts, facts_for_function, facts_for_pair
from .model import CrateModel, Diagnostic, FunctionDecl, ModuleDecl
from .upg import StructGroup, Upg, unsafe_callees

KIND_DECLARE_SC = "declare_sc"
KIND_CALL = "call_discharge"
KIND_PAIR = "pair_discharge"

STATUS_AUTO = "auto_discharged"
STATUS_OPEN = "open"
STATUS_MANUAL = "manually_discharged"

_EMPTY_FACTS = AvailableFacts(atoms=frozenset(), provenance=())


@dataclass(frozen=True)
class Obligation:
    id: str
    kind: str
    subject: tuple[str, ...]
    struct: str | None
    required: frozenset[str]
    available: AvailableFacts
    missing: frozenset[str]
    status: str  # status at generation time: auto_discharged or open

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "subject": list(self.subject),
            "struct": self.struct,
            "required": sorted(self.required),
            "available": {
                "atoms": sorted(self.available.atoms),
                "provenance": dict(self.available.provenance),
                "removed": sorted(self.available.removed),
            },
            "missing": sorted(self.missing),
            "status": self.status,
        }


def obligation_id(kind: str, subject: tuple[str, ...], required: frozenset[str]) -> str:
    key = "\x1f".join([kind, *subject, *sorted(required)])
    return hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]


def _make(kind, subject, struct, required, available) -> Obligation:
    missing = frozenset(required - available.atoms)
    if kind == KIND_DECLARE_SC:
        status = STATUS_OPEN  # nothing to check; requires annotation or judgment
    else:
        status = STATUS_AUTO if not missing else STATUS_OPEN
    return Obligation(
        id=obligation_id(kind, subject, required),
        kind=kind,
        subject=subject,
        struct=struct,
        required=required,
        available=available,
        missing=missing,
        status=status,
    )


def _hints_by_callee(f: FunctionDecl) -> dict[str, frozenset[str]]:
    """Hint atoms usable per callee: the intersection across call sites, so
    an atom counts only when it is asserted at every call to that callee."""
    sets: dict[str, list[frozenset[str]]] = defaultdict(list)
    for cs in f.calls:
        sets[cs.callee].append(cs.hint_atoms())
    return {callee: frozenset.intersection(*atom_sets) for callee, atom_sets in sets.items()}


def gen_function_obligations(f: FunctionDecl, model: CrateModel) -> list[Obligation]:
    """Obligations of a plain function, static method or constructor: an
    annotation obligation when unsafe with no declared constraints, plus one
    call discharge per distinct unsafe callee."""
    out: list[Obligation] = []
    if f.unsafety == "unsafe" and not f.sc:
        out.append(_make(KIND_DECLARE_SC, (f.path,), None, frozenset(), _EMPTY_FACTS))
    hints = _hints_by_callee(f)
    base = facts_for_function(f)
    for u in sorted(unsafe_callees(model, f.path)):
        callee = model.function(u)
        available = base.with_auditor_atoms(hints.get(u, frozenset()) & callee.sc)
        out.append(_make(KIND_CALL, (f.path, u), None, callee.sc, available))
    return out


def gen_struct_obligations(
    group: StructGroup, model: CrateModel
) -> tuple[list[Obligation], list[Diagnostic]]:
    """Pair obligations for every (constructor, unsafe-calling dynamic
    method, unsafe callee) triple, plus the function obligations of the
    struct's constructors.

    A struct whose dynamic methods perform unsafe calls but that has no
    constructor cannot be audited pairwise (the methods are unreachable
    without construction); that is reported as a diagnostic and no pair
    obligations are produced for it.
    """
    out: list[Obligation] = []
    diags: list[Diagnostic] = []
    candidates = group.dynamic_methods + ((group.destructor,) if group.destructor else ())
    with_unsafe = [m for m in candidates if unsafe_callees(model, m)]
    if with_unsafe and not group.constructors:
        diags.append(
            Diagnostic(
                "error",
                "struct has no constructors; its dynamic methods with unsafe callees "
                "cannot be executed and cannot be audited",
                subject=group.struct,
            )
        )
    else:
        for c in group.constructors:
            ctor = model.function(c)
            for m in with_unsafe:
                method = model.function(m)
                hints = _hints_by_callee(method)
                base = facts_for_pair(ctor, method, group, model)
                for u in sorted(unsafe_callees(model, m)):
                    callee = model.function(u)
                    available = base.with_auditor_atoms(hints.get(u, frozenset()) & callee.sc)
                    out.append(_make(KIND_PAIR, (c, m, u), group.struct, callee.sc, available))
    for c in group.constructors:
        out.extend(gen_function_obligations(model.function(c), model))
    return out, diags


def gen_all(
    model: CrateModel, upg: Upg | None = None
) -> tuple[list[Obligation], list[Diagnostic]]:
    """Every obligation of the crate, sorted by id and de-duplicated.

    Static methods are not distinguishable from plain functions in the model
    and are audited exactly like them, which yields the same obligations.
    """
    if upg is None:
        upg = upg_mod.build_upg(model)
    by_id: dict[str, Obligation] = {}
    diags: list[Diagnostic] = []

    def add(obs: list[Obligation]) -> None:
        for o in obs:
            by_id.setdefault(o.id, o)

    for f in model.functions():
        if f.receiver == "none" and f.role in ("plain", "constructor"):
            add(gen_function_obligations(f, model))
        elif f.unsafety == "unsafe" and not f.sc:
            # Unsafe dynamic methods must declare their constraints too.
            add([_make(KIND_DECLARE_SC, (f.path,), None, frozenset(), _EMPTY_FACTS)])
    for group in upg.struct_groups:
        obs, gdiags = gen_struct_obligations(group, model)
        add(obs)
        diags.extend(gdiags)

    return sorted(by_id.values(), key=lambda o: o.id), diags


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

SOUND = "sound"
OPEN = "open"
INVALID = "invalid"


@dataclass(frozen=True)
class Verdict:
    state: str
    open_count: int = 0
    notes: tuple[str, ...] = ()

    def render(self) -> str:
        if self.state == SOUND:
            return "sound"
        if self.state == OPEN:
            return f"open ({self.open_count} unresolved)"
        return "invalid (%s)" % "; ".join(self.notes)


@dataclass
class VerdictTree:
    mode: str
    crate: Verdict
    modules: dict[str, Verdict]
    structs: dict[str, Verdict]
    functions: dict[str, Verdict]

    def to_json_dict(self) -> dict:
        def v(d: Verdict) -> dict:
            out = {"state": d.state}
            if d.state == OPEN:
                out["open"] = d.open_count
            if d.notes:
                out["notes"] = list(d.notes)
            return out

        return {
            "crate": self.crate.state,
            "mode": self.mode,
            "modules": {p: v(d) for p, d in sorted(self.modules.items())},
            "structs": {p: v(d) for p, d in sorted(self.structs.items())},
            "functions": {p: v(d) for p, d in sorted(self.functions.items())},
        }


def struct_is_public(model: CrateModel, struct_path: str) -> bool:
    """A struct counts as public when any constructor, dynamic method or
    destructor of it is public (it is then reachable from outside)."""
    members = (
        model.constructors_of(struct_path)
        + model.dynamic_methods_of(struct_path)
        + ([model.destructor_of(struct_path)] if model.destructor_of(struct_path) else [])
    )
    return any(f.visibility == "public" for f in members)


def _verdict_from(open_ids: set[str], notes: tuple[str, ...] = ()) -> Verdict:
    if notes:
        return Verdict(INVALID, open_count=len(open_ids), notes=notes)
    if open_ids:
        return Verdict(OPEN, open_count=len(open_ids))
    return Verdict(SOUND)


def crate_verdict(
    model: CrateModel,
    mode: str,
    obligations: list[Obligation],
    statuses: dict[str, str],
    gen_diags: list[Diagnostic] | None = None,
) -> VerdictTree:
    """Roll effective obligation statuses up to a full verdict tree.

    `statuses` maps obligation id to effective status (see
    `audit.effective_statuses`); an obligation is unresolved iff its status
    is `open`. `gen_diags` are generation-time diagnostics (for example a
    struct with no constructors); they mark the subject invalid.
    """
    assert mode in ("strong", "weak")
    fn_obls: dict[str, list[Obligation]] = defaultdict(list)
    struct_obls: dict[str, list[Obligation]] = defaultdict(list)
    for o in obligations:
        if o.kind == KIND_PAIR:
            struct_obls[o.struct].append(o)
        else:
            fn_obls[o.subject[0]].append(o)
    invalid_subjects: dict[str, tuple[str, ...]] = defaultdict(tuple)
    for d in gen_diags or []:
        if d.severity == "error" and d.subject:
            invalid_subjects[d.subject] += (d.message,)

    def open_ids(obs: list[Obligation]) -> set[str]:
        return {o.id for o in obs if statuses.get(o.id, o.status) == STATUS_OPEN}

    functions: dict[str, Verdict] = {}
    for f in model.functions():
        functions[f.path] = _verdict_from(open_ids(fn_obls.get(f.path, [])), invalid_subjects.get(f.path, ()))

    structs: dict[str, Verdict] = {}
    struct_scope: dict[str, set[str]] = {}
    for s in model.structs():
        ids = open_ids(struct_obls.get(s.path, []))
        for c in model.constructors_of(s.path):
            ids |= open_ids(fn_obls.get(c.path, []))
        struct_scope[s.path] = ids
        structs[s.path] = _verdict_from(ids, invalid_subjects.get(s.path, ()))

    def module_scope(mod: ModuleDecl) -> tuple[set[str], tuple[str, ...]]:
        ids: set[str] = set()
        notes: tuple[str, ...] = ()
        for f in mod.functions:
            if mode == "weak" and f.visibility != "public":
                continue
            ids |= open_ids(fn_obls.get(f.path, []))
            notes += invalid_subjects.get(f.path, ())
        for s in mod.structs:
            if mode == "weak" and not struct_is_public(model, s.path):
                continue
            ids |= struct_scope[s.path]
            notes += invalid_subjects.get(s.path, ())
        for sub in mod.submodules:
            sub_ids, sub_notes = module_scope(sub)
            ids |= sub_ids
            notes += sub_notes
        return ids, notes

    modules: dict[str, Verdict] = {}

    def fill(mod: ModuleDecl) -> None:
        ids, notes = module_scope(mod)
        modules[mod.path] = _verdict_from(ids, notes)
        for sub in mod.submodules:
            fill(sub)

    fill(model.root)
    crate = modules[model.root.path]
    return VerdictTree(mode=mode, crate=crate, modules=modules, structs=structs, functions=functions)


def module_verdict(
    mod: ModuleDecl,
    mode: str,
    model: CrateModel,
    obligations: list[Obligation],
    statuses: dict[str, str],
    gen_diags: list[Diagnostic] | None = None,
) -> Verdict:
    """Verdict of one module (submodules included), in strong or weak mode."""
    tree = crate_verdict(model, mode, obligations, statuses, gen_diags)
    return tree.modules[mod.path]
