"""Crate model: declarations, validation, and canonical JSON serialization.

The model is the shared input of every analysis stage. It is immutable once
built: collections are tuples or frozensets and the path index is derived,
never stored state. Two loaders produce it (the facts language in `facts.py`
and `load_json` here); both normalize to the same canonical form, so
structural equality between models means semantic equality.

Canonical form:
  * functions, structs and submodules are sorted by path inside each module,
  * atom sets are frozensets (serialized as sorted arrays),
  * call sites keep declaration order (the order is semantic: the execution
    oracle steps through call sites in order),
  * external function declarations live outside the module tree; in JSON they
    are stored in the root module's function list and recognized on load by
    their path falling outside the crate namespace.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

ATOM_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

VISIBILITIES = ("public", "private")
UNSAFETIES = ("safe", "unsafe")
RECEIVERS = ("none", "ref_self", "mut_self")
ROLES = ("plain", "constructor", "method", "destructor")

FactSet = frozenset  # sets of atom names; plain frozenset[str] throughout


@dataclass(frozen=True)
class Diagnostic:
    """One validation or parse finding. `severity` is "error" or "warn".

    Position is carried three ways depending on the producer: (line, col)
    for facts sources, a JSON pointer for documents, or a subject path for
    semantic checks on an already-built model.
    """

    severity: str
    message: str
    line: int | None = None
    col: int | None = None
    pointer: str | None = None
    subject: str | None = None

    def render(self) -> str:
        if self.line is not None:
            where = f" at {self.line}:{self.col}"
        elif self.pointer is not None:
            where = f" at {self.pointer}"
        elif self.subject is not None:
            where = f" [{self.subject}]"
        else:
            where = ""
        return f"{self.severity}: {self.message}{where}"


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diags)


@dataclass(frozen=True)
class CallSite:
    """A call from a function body to a fully-qualified callee path.

    `discharge_hints` maps atoms of the callee's safety constraints to an
    auditor-readable justification of why the atom holds at this site. Hinted
    atoms count as available facts for the call's obligations and are injected
    into the oracle's state at this site only.
    """

    callee: str
    discharge_hints: tuple[tuple[str, str], ...] = ()

    def hint_atoms(self) -> frozenset[str]:
        return frozenset(a for a, _ in self.discharge_hints)


@dataclass(frozen=True)
class FunctionDecl:
    path: str
    visibility: str = "private"
    unsafety: str = "safe"
    receiver: str = "none"  # none | ref_self | mut_self
    role: str = "plain"  # plain | constructor | method | destructor
    of_struct: str | None = None  # resolved struct path for non-plain roles
    sc: frozenset[str] = frozenset()
    establishes: frozenset[str] = frozenset()
    breaks: frozenset[str] = frozenset()
    calls: tuple[CallSite, ...] = ()

    @property
    def is_dynamic(self) -> bool:
        """Dynamic method or destructor: takes &self or &mut self."""
        return self.receiver in ("ref_self", "mut_self")


@dataclass(frozen=True)
class StructDecl:
    path: str
    fields: tuple[tuple[str, str], ...] = ()  # (field name, opaque type tag)
    invariant_atoms: frozenset[str] = frozenset()


@dataclass(frozen=True)
class ModuleDecl:
    path: str
    functions: tuple[FunctionDecl, ...] = ()
    structs: tuple[StructDecl, ...] = ()
    submodules: tuple[ModuleDecl, ...] = ()


@dataclass(frozen=True)
class CrateModel:
    """A whole crate plus its declared external callees.

    The index maps every path (modules, structs, crate functions, externs)
    to its declaration and is rebuilt on construction; it does not take part
    in equality.
    """

    name: str
    root: ModuleDecl
    externs: tuple[FunctionDecl, ...] = ()
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        idx = self._index
        idx.clear()

        def walk(mod: ModuleDecl) -> None:
            idx[mod.path] = ("module", mod)
            for f in mod.functions:
                idx[f.path] = ("function", f)
            for s in mod.structs:
                idx[s.path] = ("struct", s)
            for sub in mod.submodules:
                walk(sub)

        walk(self.root)
        for e in self.externs:
            idx[e.path] = ("extern", e)

    # -- lookups ---------------------------------------------------------

    def lookup(self, path: str):
        """(kind, decl) for a path, or None."""
        return self._index.get(path)

    def function(self, path: str) -> FunctionDecl:
        kind, decl = self._index[path]
        if kind not in ("function", "extern"):
            raise KeyError(f"{path} is a {kind}, not a function")
        return decl

    def is_external(self, path: str) -> bool:
        entry = self._index.get(path)
        return entry is not None and entry[0] == "extern"

    def functions(self):
        """All crate-local functions, sorted by path."""
        return [d for _, (k, d) in sorted(self._index.items()) if k == "function"]

    def structs(self):
        return [d for _, (k, d) in sorted(self._index.items()) if k == "struct"]

    def modules(self):
        return [d for _, (k, d) in sorted(self._index.items()) if k == "module"]

    def constructors_of(self, struct_path: str) -> list[FunctionDecl]:
        return [f for f in self.functions() if f.role == "constructor" and f.of_struct == struct_path]

    def dynamic_methods_of(self, struct_path: str) -> list[FunctionDecl]:
        return [f for f in self.functions() if f.role == "method" and f.of_struct == struct_path]

    def destructor_of(self, struct_path: str) -> FunctionDecl | None:
        ds = [f for f in self.functions() if f.role == "destructor" and f.of_struct == struct_path]
        return ds[0] if ds else None

    def in_crate_namespace(self, path: str) -> bool:
        return path == self.name or path.startswith(self.name + "::")

    # -- serialization ----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {"name": self.name, "root": _module_to_dict(self.root, self.externs)}

    def to_json_bytes(self) -> bytes:
        text = json.dumps(self.to_json_dict(), sort_keys=True, indent=2, ensure_ascii=True)
        return (text + "\n").encode("utf-8")

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------


def _function_to_dict(f: FunctionDecl) -> dict:
    return {
        "path": f.path,
        "visibility": f.visibility,
        "unsafety": f.unsafety,
        "receiver": f.receiver,
        "role": {"kind": f.role, "struct": f.of_struct},
        "sc": sorted(f.sc),
        "establishes": sorted(f.establishes),
        "breaks": sorted(f.breaks),
        "calls": [
            {"callee": c.callee, "discharge_hints": dict(c.discharge_hints)}
            for c in f.calls
        ],
    }


def _struct_to_dict(s: StructDecl) -> dict:
    return {
        "name": s.path,
        "fields": [{"name": n, "type": t} for n, t in s.fields],
        "invariant_atoms": sorted(s.invariant_atoms),
    }


def _module_to_dict(mod: ModuleDecl, extra_functions: tuple[FunctionDecl, ...] = ()) -> dict:
    functions = sorted(mod.functions + tuple(extra_functions), key=lambda f: f.path)
    return {
        "path": mod.path,
        "functions": [_function_to_dict(f) for f in functions],
        "structs": [_struct_to_dict(s) for s in mod.structs],
        "submodules": [_module_to_dict(m) for m in mod.submodules],
    }


# ---------------------------------------------------------------------------
# Assembly: shared by both loaders and by programmatic construction
# ---------------------------------------------------------------------------


def assemble(
    name: str, root: ModuleDecl, externs: tuple[FunctionDecl, ...]
) -> tuple[CrateModel | None, list[Diagnostic]]:
    """Build a CrateModel from parts, checking structural invariants.

    Checks path uniqueness, module containment, and the extern namespace
    rule. Returns (model, diags); model is None when any error was found.
    """
    diags: list[Diagnostic] = []
    seen: dict[str, str] = {}

    def claim(path: str, kind: str) -> None:
        if path in seen:
            diags.append(
                Diagnostic("error", f"duplicate path {path} ({seen[path]} and {kind})", subject=path)
            )
        else:
            seen[path] = kind

    def walk(mod: ModuleDecl) -> None:
        claim(mod.path, "module")
        for f in mod.functions:
            claim(f.path, "function")
            if _parent_path(f.path) != mod.path:
                diags.append(
                    Diagnostic(
                        "error",
                        f"function {f.path} is declared in module {mod.path} but its path does not match",
                        subject=f.path,
                    )
                )
        for s in mod.structs:
            claim(s.path, "struct")
            if _parent_path(s.path) != mod.path:
                diags.append(
                    Diagnostic(
                        "error",
                        f"struct {s.path} is declared in module {mod.path} but its path does not match",
                        subject=s.path,
                    )
                )
        for sub in mod.submodules:
            if _parent_path(sub.path) != mod.path:
                diags.append(
                    Diagnostic(
                        "error",
                        f"module {sub.path} is nested in {mod.path} but its path does not match",
                        subject=sub.path,
                    )
                )
            walk(sub)

    if root.path != name:
        diags.append(Diagnostic("error", f"root module path must equal the crate name {name!r}"))
    walk(root)
    for e in externs:
        claim(e.path, "extern")
        if e.path == name or e.path.startswith(name + "::"):
            diags.append(
                Diagnostic(
                    "error",
                    f"extern function {e.path} collides with the crate namespace",
                    subject=e.path,
                )
            )
        if e.calls or e.establishes or e.breaks or e.role != "plain" or e.receiver != "none":
            diags.append(
                Diagnostic(
                    "error",
                    f"extern function {e.path} may only declare unsafety and sc",
                    subject=e.path,
                )
            )

    if has_errors(diags):
        return None, diags
    return CrateModel(name=name, root=root, externs=externs), diags


def _parent_path(path: str) -> str:
    return path.rsplit("::", 1)[0] if "::" in path else ""


def _sort_module(mod: ModuleDecl) -> ModuleDecl:
    """Recursively order a module's members by path (canonical form)."""
    return ModuleDecl(
        path=mod.path,
        functions=tuple(sorted(mod.functions, key=lambda f: f.path)),
        structs=tuple(sorted(mod.structs, key=lambda s: s.path)),
        submodules=tuple(sorted((_sort_module(m) for m in mod.submodules), key=lambda m: m.path)),
    )


def make_model(
    name: str, root: ModuleDecl, externs: tuple[FunctionDecl, ...] = ()
) -> tuple[CrateModel | None, list[Diagnostic]]:
    """Canonicalize, assemble and validate a model built programmatically."""
    model, diags = assemble(name, _sort_module(root), tuple(sorted(externs, key=lambda e: e.path)))
    if model is None:
        return None, diags
    diags.extend(validate(model))
    if has_errors(diags):
        return None, diags
    return model, diags


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate(
    model: CrateModel, positions: dict[str, tuple[int, int]] | None = None
) -> list[Diagnostic]:
    """Semantic checks over a structurally well-formed model.

    Total: never raises on a well-typed model, every defect becomes one
    diagnostic. Errors: unresolved or non-function callees, safe functions
    with constraints, role/receiver mismatches, misplaced `breaks`, hint
    atoms outside the callee's constraints, duplicate destructors. Warnings:
    unsafe functions with no declared constraints, struct invariant lists
    that omit constructor-established atoms methods rely on.
    """
    diags: list[Diagnostic] = []

    def at(path: str, severity: str, message: str) -> None:
        pos = (positions or {}).get(path)
        if pos:
            diags.append(Diagnostic(severity, message, line=pos[0], col=pos[1], subject=path))
        else:
            diags.append(Diagnostic(severity, message, subject=path))

    dtor_seen: dict[str, str] = {}
    for f in model.functions():
        if f.unsafety == "safe" and f.sc:
            at(f.path, "error", "safe function declares non-empty sc")
        if f.unsafety == "unsafe" and not f.sc:
            at(f.path, "warn", "unsafe function declares no safety constraints")
        if f.role == "constructor" and f.receiver != "none":
            at(f.path, "error", "constructor must not take a receiver")
        if f.role == "method" and f.receiver == "none":
            at(f.path, "error", "method must take &self or &mut self")
        if f.role == "destructor" and (f.receiver != "mut_self" or f.unsafety != "safe"):
            at(f.path, "error", "destructor must be a safe function taking &mut self")
        if f.role == "plain" and f.receiver != "none":
            at(f.path, "error", "function with a receiver must declare `method of` or `destructor of`")
        if f.role != "plain":
            entry = model.lookup(f.of_struct) if f.of_struct else None
            if entry is None or entry[0] != "struct":
                at(f.path, "error", f"role refers to unknown struct {f.of_struct}")
            elif f.role == "destructor":
                if f.of_struct in dtor_seen:
                    at(f.path, "error", f"struct {f.of_struct} already has destructor {dtor_seen[f.of_struct]}")
                else:
                    dtor_seen[f.of_struct] = f.path
        if f.breaks and not (f.role in ("method", "destructor") and f.is_dynamic):
            at(f.path, "error", "breaks is only meaningful on dynamic methods and destructors")
        for atom in sorted(f.sc | f.establishes | f.breaks):
            if not ATOM_RE.match(atom):
                at(f.path, "error", f"invalid atom name {atom!r}")
        for cs in f.calls:
            entry = model.lookup(cs.callee)
            if entry is None:
                at(f.path, "error", f"unresolved callee {cs.callee}")
                continue
            kind, decl = entry
            if kind not in ("function", "extern"):
                at(f.path, "error", f"callee {cs.callee} is a {kind}, not a function")
                continue
            bad_hints = cs.hint_atoms() - decl.sc
            if bad_hints:
                at(
                    f.path,
                    "error",
                    f"discharge hint atoms {sorted(bad_hints)} are not safety constraints of {cs.callee}",
                )

    for e in model.externs:
        if e.unsafety == "unsafe" and not e.sc:
            at(e.path, "warn", "unsafe function declares no safety constraints")

    # Struct invariant coverage: atoms that constructors install and that
    # dynamic methods' unsafe callees later require should be documented.
    for s in model.structs():
        ctors = model.constructors_of(s.path)
        methods = model.dynamic_methods_of(s.path)
        dtor = model.destructor_of(s.path)
        established = frozenset().union(*(c.establishes for c in ctors)) if ctors else frozenset()
        required: frozenset[str] = frozenset()
        for m in methods + ([dtor] if dtor else []):
            for cs in m.calls:
                entry = model.lookup(cs.callee)
                if entry and entry[0] in ("function", "extern") and entry[1].unsafety == "unsafe":
                    required |= entry[1].sc
        gap = (established & required) - s.invariant_atoms
        if gap:
            at(
                s.path,
                "warn",
                f"struct invariants omit constructor-established atoms relied on by methods: {sorted(gap)}",
            )

    return diags


# ---------------------------------------------------------------------------
# JSON loader
# ---------------------------------------------------------------------------

_TOP_KEYS = {"name", "root"}
_MODULE_KEYS = {"path", "functions", "structs", "submodules"}
_FUNCTION_KEYS = {"path", "visibility", "unsafety", "receiver", "role", "sc", "establishes", "breaks", "calls"}
_ROLE_KEYS = {"kind", "struct"}
_CALL_KEYS = {"callee", "discharge_hints"}
_STRUCT_KEYS = {"name", "fields", "invariant_atoms"}
_FIELD_KEYS = {"name", "type"}

class _SchemaError(Exception):
    def __init__(self, message: str, pointer: str):
        super().__init__(message)
        self.message = message
        self.pointer = pointer


def _expect_keys(obj: dict, keys: set, pointer: str) -> None:
    if not isinstance(obj, dict):
        raise _SchemaError("expected an object", pointer)
    for k in sorted(keys - obj.keys()):
        raise _SchemaError("missing required key", f"{pointer}/{k}")
    for k in sorted(obj.keys() - keys):
        raise _SchemaError(f"unexpected key {k!r}", f"{pointer}/{k}")


def _expect_str(value, pointer: str) -> str:
    if not isinstance(value, str):
        raise _SchemaError("expected a string", pointer)
    return value


def _expect_list(value, pointer: str) -> list:
    if not isinstance(value, list):
        raise _SchemaError("expected an array", pointer)
    return value


def _atom_set(value, pointer: str) -> frozenset[str]:
    out = set()
    for i, item in enumerate(_expect_list(value, pointer)):
        atom = _expect_str(item, f"{pointer}/{i}")
        if not ATOM_RE.match(atom):
            raise _SchemaError(f"invalid atom name {atom!r}", f"{pointer}/{i}")
        out.add(atom)
    return frozenset(out)


def _enum(value, options: tuple, pointer: str) -> str:
    v = _expect_str(value, pointer)
    if v not in options:
        raise _SchemaError(f"expected one of {list(options)}, got {v!r}", pointer)
    return v


def _load_function(obj, pointer: str) -> FunctionDecl:
    _expect_keys(obj, _FUNCTION_KEYS, pointer)
    role_obj = obj["role"]
    _expect_keys(role_obj, _ROLE_KEYS, f"{pointer}/role")
    kind = _enum(role_obj["kind"], ROLES, f"{pointer}/role/kind")
    of_struct = role_obj["struct"]
    if of_struct is not None:
        of_struct = _expect_str(of_struct, f"{pointer}/role/struct")
    if kind == "plain" and of_struct is not None:
        raise _SchemaError("plain role must not name a struct", f"{pointer}/role/struct")
    if kind != "plain" and of_struct is None:
        raise _SchemaError(f"{kind} role requires a struct path", f"{pointer}/role/struct")
    calls = []
    for i, c in enumerate(_expect_list(obj["calls"], f"{pointer}/calls")):
        cp = f"{pointer}/calls/{i}"
        _expect_keys(c, _CALL_KEYS, cp)
        hints = c["discharge_hints"]
        if not isinstance(hints, dict):
            raise _SchemaError("expected an object", f"{cp}/discharge_hints")
        hint_items = []
        for atom in sorted(hints):
            if not ATOM_RE.match(atom):
                raise _SchemaError(f"invalid atom name {atom!r}", f"{cp}/discharge_hints/{atom}")
            hint_items.append((atom, _expect_str(hints[atom], f"{cp}/discharge_hints/{atom}")))
        calls.append(CallSite(callee=_expect_str(c["callee"], f"{cp}/callee"), discharge_hints=tuple(hint_items)))
    return FunctionDecl(
        path=_expect_str(obj["path"], f"{pointer}/path"),
        visibility=_enum(obj["visibility"], VISIBILITIES, f"{pointer}/visibility"),
        unsafety=_enum(obj["unsafety"], UNSAFETIES, f"{pointer}/unsafety"),
        receiver=_enum(obj["receiver"], RECEIVERS, f"{pointer}/receiver"),
        role=kind,
        of_struct=of_struct,
        sc=_atom_set(obj["sc"], f"{pointer}/sc"),
        establishes=_atom_set(obj["establishes"], f"{pointer}/establishes"),
        breaks=_atom_set(obj["breaks"], f"{pointer}/breaks"),
        calls=tuple(calls),
    )


def _load_struct(obj, pointer: str) -> StructDecl:
    _expect_keys(obj, _STRUCT_KEYS, pointer)
    fields = []
    for i, fobj in enumerate(_expect_list(obj["fields"], f"{pointer}/fields")):
        fp = f"{pointer}/fields/{i}"
        _expect_keys(fobj, _FIELD_KEYS, fp)
        fields.append((_expect_str(fobj["name"], f"{fp}/name"), _expect_str(fobj["type"], f"{fp}/type")))
    return StructDecl(
        path=_expect_str(obj["name"], f"{pointer}/name"),
        fields=tuple(fields),
        invariant_atoms=_atom_set(obj["invariant_atoms"], f"{pointer}/invariant_atoms"),
    )


def _load_module(obj, pointer: str) -> ModuleDecl:
    _expect_keys(obj, _MODULE_KEYS, pointer)
    functions = tuple(
        _load_function(f, f"{pointer}/functions/{i}")
        for i, f in enumerate(_expect_list(obj["functions"], f"{pointer}/functions"))
    )
    structs = tuple(
        _load_struct(s, f"{pointer}/structs/{i}")
        for i, s in enumerate(_expect_list(obj["structs"], f"{pointer}/structs"))
    )
    submodules = tuple(
        _load_module(m, f"{pointer}/submodules/{i}")
        for i, m in enumerate(_expect_list(obj["submodules"], f"{pointer}/submodules"))
    )
    return ModuleDecl(
        path=_expect_str(obj["path"], f"{pointer}/path"),
        functions=functions,
        structs=structs,
        submodules=submodules,
    )


def load_json(data: bytes | str) -> tuple[CrateModel | None, list[Diagnostic]]:
    """Load a crate document, returning (model, diagnostics).

    The model is None when the document violates the schema or any semantic
    validation rule of severity error. Schema findings carry a JSON pointer.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            return None, [Diagnostic("error", f"input is not UTF-8: {exc}")]
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        return None, [Diagnostic("error", f"invalid JSON: {exc.msg}", line=exc.lineno, col=exc.colno)]

    try:
        _expect_keys(doc, _TOP_KEYS, "")
        name = _expect_str(doc["name"], "/name")
        root = _load_module(doc["root"], "/root")
    except _SchemaError as exc:
        return None, [Diagnostic("error", exc.message, pointer=exc.pointer or "/")]

    # Split externally declared callees out of the root function list: they
    # are the entries whose path is outside the crate namespace.
    def is_local(f: FunctionDecl) -> bool:
        return f.path == name or f.path.startswith(name + "::")

    local = tuple(f for f in root.functions if is_local(f))
    externs = tuple(f for f in root.functions if not is_local(f))
    root = ModuleDecl(path=root.path, functions=local, structs=root.structs, submodules=root.submodules)

    model, diags = assemble(name, _sort_module(root), tuple(sorted(externs, key=lambda e: e.path)))
    if model is None:
        return None, diags
    diags.extend(validate(model))
    if has_errors(diags):
        return None, diags
    return model, diags
