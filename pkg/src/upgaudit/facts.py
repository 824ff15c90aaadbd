"""Parser for the crate facts language.

The facts language is the tool's own input format for describing a crate:
its modules, structs, functions, call sites and constraint annotations.
It is whitespace-insensitive and `#` starts a line comment.

    crate      := "crate" IDENT "{" item* "}"
    item       := module | structdecl | fndecl | externfn
    module     := "module" IDENT "{" item* "}"
    structdecl := "struct" IDENT "{" fieldline* ("invariants" atomset ";")? "}"
    fieldline  := "field" IDENT ":" IDENT ";"
    fndecl     := "fn" ("unsafe")? ("pub")? IDENT recv? roleclause? clause* ";"
    recv       := "(" ("&self" | "&mut self")? ")"
    roleclause := ("constructor" | "destructor" | "method") "of" IDENT
    clause     := "sc" atomset | "establishes" atomset | "breaks" atomset
                | "calls" PATH ("where" "{" (IDENT ":" STRING ","?)* "}")?
    externfn   := "extern" "fn" "unsafe"? PATH "sc" atomset ";"
    atomset    := "[" (IDENT ","?)* "]"
    PATH       := IDENT ("::" IDENT)*

A function's struct membership comes from its role clause: `constructor of`,
`destructor of`, or `method of` (for dynamic methods taking a receiver).
Callee paths resolve like module-scoped names: the declaring module and its
ancestors are tried innermost-first, then the path as written against the
crate index, then the extern declarations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import (
    ATOM_RE,
    CallSite,
    CrateModel,
    Diagnostic,
    FunctionDecl,
    ModuleDecl,
    StructDecl,
    assemble,
    has_errors,
    validate,
)

KEYWORDS = {
    "crate", "module", "struct", "field", "invariants", "fn", "unsafe", "pub",
    "constructor", "destructor", "method", "of", "sc", "establishes", "breaks",
    "calls", "where", "extern", "self", "mut",
}

_PUNCT = {"{", "}", "[", "]", "(", ")", ":", ";", ",", "&"}


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "keyword", "string", "punct", "pathsep", "eof"
    text: str
    line: int
    col: int


class ParseError(Exception):
    def __init__(self, message: str, token: Token):
        super().__init__(message)
        self.diagnostic = Diagnostic("error", message, line=token.line, col=token.col)


def _lex(text: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == ":" and i + 1 < n and text[i + 1] == ":":
            tokens.append(Token("pathsep", "::", line, col))
            i += 2
            col += 2
            continue
        if ch in _PUNCT:
            tokens.append(Token("punct", ch, line, col))
            i += 1
            col += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            buf = []
            closed = False
            while i < n:
                c = text[i]
                if c == "\n":
                    break
                if c == "\\" and i + 1 < n:
                    esc = text[i + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    i += 2
                    col += 2
                    continue
                if c == '"':
                    closed = True
                    i += 1
                    col += 1
                    break
                buf.append(c)
                i += 1
                col += 1
            if not closed:
                diags.append(Diagnostic("error", "unterminated string literal", line=start_line, col=start_col))
            tokens.append(Token("string", "".join(buf), start_line, start_col))
            continue
        if ch.isalpha() or ch == "_":
            start_col = col
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "keyword" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, line, start_col))
            col += j - i
            i = j
            continue
        diags.append(Diagnostic("error", f"unexpected character {ch!r}", line=line, col=col))
        i += 1
        col += 1
    tokens.append(Token("eof", "", line, col))
    return tokens, diags


# Intermediate structures: names are raw (unresolved) until the whole crate
# has been read, because callees may refer forward or to outer modules.


@dataclass
class _RawFn:
    name: str
    module: str  # declaring module path
    pos: tuple[int, int]
    visibility: str = "private"
    unsafety: str = "safe"
    receiver: str = "none"
    role: str = "plain"
    role_struct: str | None = None
    role_pos: tuple[int, int] | None = None
    sc: set = field(default_factory=set)
    establishes: set = field(default_factory=set)
    breaks: set = field(default_factory=set)
    calls: list = field(default_factory=list)  # (raw path, hints dict, pos)

    @property
    def path(self) -> str:
        return f"{self.module}::{self.name}"


@dataclass
class _RawModule:
    path: str
    functions: list = field(default_factory=list)
    structs: list = field(default_factory=list)
    submodules: list = field(default_factory=list)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.externs: list[tuple[str, str, frozenset, tuple[int, int]]] = []

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if not self.at(kind, text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {tok.text or tok.kind!r}", tok)
        return self.next()

    def ident(self, what: str) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError(f"expected {what}, found {tok.text or tok.kind!r}", tok)
        return self.next()

    # -- grammar ----------------------------------------------------------

    def crate(self) -> tuple[str, _RawModule]:
        self.expect("keyword", "crate")
        name = self.ident("crate name").text
        self.expect("punct", "{")
        root = _RawModule(path=name)
        self.items(root)
        self.expect("punct", "}")
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected {tok.text!r} after crate body", tok)
        return name, root

    def items(self, mod: _RawModule) -> None:
        while True:
            tok = self.peek()
            if tok.kind == "keyword" and tok.text == "module":
                mod.submodules.append(self.module(mod.path))
            elif tok.kind == "keyword" and tok.text == "struct":
                mod.structs.append(self.structdecl(mod.path))
            elif tok.kind == "keyword" and tok.text == "fn":
                mod.functions.append(self.fndecl(mod.path))
            elif tok.kind == "keyword" and tok.text == "extern":
                self.externfn()
            else:
                return

    def module(self, parent: str) -> _RawModule:
        self.expect("keyword", "module")
        name = self.ident("module name").text
        self.expect("punct", "{")
        mod = _RawModule(path=f"{parent}::{name}")
        self.items(mod)
        self.expect("punct", "}")
        return mod

    def structdecl(self, parent: str):
        self.expect("keyword", "struct")
        name_tok = self.ident("struct name")
        self.expect("punct", "{")
        fields = []
        invariants: frozenset = frozenset()
        while self.at("keyword", "field"):
            self.next()
            fname = self.ident("field name").text
            self.expect("punct", ":")
            ftype = self.ident("field type").text
            self.expect("punct", ";")
            fields.append((fname, ftype))
        if self.at("keyword", "invariants"):
            self.next()
            invariants = self.atomset()
            self.expect("punct", ";")
        self.expect("punct", "}")
        return (
            StructDecl(path=f"{parent}::{name_tok.text}", fields=tuple(fields), invariant_atoms=invariants),
            (name_tok.line, name_tok.col),
        )

    def fndecl(self, module: str) -> _RawFn:
        self.expect("keyword", "fn")
        unsafety = "safe"
        visibility = "private"
        if self.at("keyword", "unsafe"):
            self.next()
            unsafety = "unsafe"
        if self.at("keyword", "pub"):
            self.next()
            visibility = "public"
        name_tok = self.ident("function name")
        fn = _RawFn(
            name=name_tok.text,
            module=module,
            pos=(name_tok.line, name_tok.col),
            visibility=visibility,
            unsafety=unsafety,
        )
        if self.at("punct", "("):
            self.next()
            if self.at("punct", "&"):
                self.next()
                if self.at("keyword", "mut"):
                    self.next()
                    self.expect("keyword", "self")
                    fn.receiver = "mut_self"
                else:
                    self.expect("keyword", "self")
                    fn.receiver = "ref_self"
            self.expect("punct", ")")
        tok = self.peek()
        if tok.kind == "keyword" and tok.text in ("constructor", "destructor", "method"):
            self.next()
            self.expect("keyword", "of")
            struct_tok = self.ident("struct name")
            fn.role = tok.text
            fn.role_struct = struct_tok.text
            fn.role_pos = (struct_tok.line, struct_tok.col)
        while not self.at("punct", ";"):
            tok = self.peek()
            if tok.kind == "keyword" and tok.text == "sc":
                self.next()
                fn.sc |= self.atomset()
            elif tok.kind == "keyword" and tok.text == "establishes":
                self.next()
                fn.establishes |= self.atomset()
            elif tok.kind == "keyword" and tok.text == "breaks":
                self.next()
                fn.breaks |= self.atomset()
            elif tok.kind == "keyword" and tok.text == "calls":
                self.next()
                path_tok = self.peek()
                path = self.path()
                hints: dict[str, str] = {}
                if self.at("keyword", "where"):
                    self.next()
                    self.expect("punct", "{")
                    while not self.at("punct", "}"):
                        atom = self.ident("hint atom").text
                        self.expect("punct", ":")
                        just = self.expect("string").text
                        hints[atom] = just
                        if self.at("punct", ","):
                            self.next()
                    self.expect("punct", "}")
                fn.calls.append((path, hints, (path_tok.line, path_tok.col)))
            else:
                raise ParseError(f"expected a clause or ';', found {tok.text or tok.kind!r}", tok)
        self.expect("punct", ";")
        return fn

    def externfn(self) -> None:
        start = self.expect("keyword", "extern")
        self.expect("keyword", "fn")
        unsafety = "safe"
        if self.at("keyword", "unsafe"):
            self.next()
            unsafety = "unsafe"
        path = self.path()
        self.expect("keyword", "sc")
        sc = self.atomset()
        self.expect("punct", ";")
        self.externs.append((path, unsafety, sc, (start.line, start.col)))

    def path(self) -> str:
        parts = [self.ident("path").text]
        while self.at("pathsep"):
            self.next()
            parts.append(self.ident("path segment").text)
        return "::".join(parts)

    def atomset(self) -> frozenset:
        self.expect("punct", "[")
        atoms = set()
        while not self.at("punct", "]"):
            tok = self.ident("atom")
            if not ATOM_RE.match(tok.text):
                raise ParseError(f"invalid atom name {tok.text!r}", tok)
            atoms.add(tok.text)
            if self.at("punct", ","):
                self.next()
        self.expect("punct", "]")
        return frozenset(atoms)


def _ancestors(module_path: str) -> list[str]:
    """Module path and its ancestors, innermost first."""
    parts = module_path.split("::")
    return ["::".join(parts[:i]) for i in range(len(parts), 0, -1)]


def parse_facts(text: str) -> tuple[CrateModel | None, list[Diagnostic]]:
    """Parse facts source into a validated CrateModel.

    Returns (model, diagnostics); model is None whenever any diagnostic of
    severity error was produced. Diagnostics are positioned (line, column)
    and ordered by discovery.
    """
    tokens, diags = _lex(text)
    if has_errors(diags):
        return None, diags

    parser = _Parser(tokens)
    try:
        name, raw_root = parser.crate()
    except ParseError as exc:
        return None, diags + [exc.diagnostic]

    # Index pass: collect declared paths before resolving references.
    fn_paths: dict[str, _RawFn] = {}
    struct_paths: set[str] = set()
    positions: dict[str, tuple[int, int]] = {}

    def index(raw: _RawModule) -> None:
        for fn in raw.functions:
            if fn.path in fn_paths:
                other = fn_paths[fn.path]
                diags.append(
                    Diagnostic(
                        "error",
                        f"duplicate path {fn.path} (first declared at {other.pos[0]}:{other.pos[1]})",
                        line=fn.pos[0],
                        col=fn.pos[1],
                    )
                )
            else:
                fn_paths[fn.path] = fn
                positions[fn.path] = fn.pos
        for s, pos in raw.structs:
            struct_paths.add(s.path)
            positions[s.path] = pos
        for sub in raw.submodules:
            index(sub)

    index(raw_root)
    extern_paths = {}
    for path, unsafety, sc, pos in parser.externs:
        if path in extern_paths or path in fn_paths:
            diags.append(Diagnostic("error", f"duplicate path {path}", line=pos[0], col=pos[1]))
        extern_paths[path] = FunctionDecl(path=path, visibility="public", unsafety=unsafety, sc=sc)
        positions[path] = pos

    def resolve_struct(fn: _RawFn) -> str | None:
        raw = fn.role_struct
        for mod in _ancestors(fn.module):
            candidate = f"{mod}::{raw}"
            if candidate in struct_paths:
                return candidate
        if raw in struct_paths:
            return raw
        line, col = fn.role_pos or fn.pos
        diags.append(Diagnostic("error", f"unknown struct {raw!r} in role clause", line=line, col=col))
        return None

    def resolve_callee(fn: _RawFn, raw: str, pos: tuple[int, int]) -> str | None:
        for mod in _ancestors(fn.module):
            candidate = f"{mod}::{raw}"
            if candidate in fn_paths:
                return candidate
        if raw in fn_paths:
            return raw
        if raw in extern_paths:
            return raw
        diags.append(
            Diagnostic("error", f"unresolved callee {raw} (declare it or add an `extern fn`)", line=pos[0], col=pos[1])
        )
        return None

    def build(raw: _RawModule) -> ModuleDecl:
        functions = []
        for fn in raw.functions:
            of_struct = resolve_struct(fn) if fn.role != "plain" else None
            calls = []
            for raw_path, hints, pos in fn.calls:
                resolved = resolve_callee(fn, raw_path, pos)
                if resolved is None:
                    continue
                calls.append(CallSite(callee=resolved, discharge_hints=tuple(sorted(hints.items()))))
            functions.append(
                FunctionDecl(
                    path=fn.path,
                    visibility=fn.visibility,
                    unsafety=fn.unsafety,
                    receiver=fn.receiver,
                    role=fn.role,
                    of_struct=of_struct,
                    sc=frozenset(fn.sc),
                    establishes=frozenset(fn.establishes),
                    breaks=frozenset(fn.breaks),
                    calls=tuple(calls),
                )
            )
        return ModuleDecl(
            path=raw.path,
            functions=tuple(sorted(functions, key=lambda f: f.path)),
            structs=tuple(sorted((s for s, _ in raw.structs), key=lambda s: s.path)),
            submodules=tuple(sorted((build(m) for m in raw.submodules), key=lambda m: m.path)),
        )

    root = build(raw_root)
    if has_errors(diags):
        return None, diags

    externs = tuple(sorted(extern_paths.values(), key=lambda e: e.path))
    model, assemble_diags = assemble(name, root, externs)
    diags.extend(assemble_diags)
    if model is None:
        return None, diags
    diags.extend(validate(model, positions=positions))
    if has_errors(diags):
        return None, diags
    return model, diags
