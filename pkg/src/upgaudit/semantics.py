"""Bounded abstract-execution oracle.

Ground truth for the analyzer: executes call traces over sets of true atoms
and reports the first trace that performs an unsafe call while some of the
callee's constraint atoms are false (the model of undefined behavior).

Body semantics, a function of the declared facts only:

  * on entry the function's `establishes` atoms and its own constraints
    (assumed satisfied by a cooperating caller) become true,
  * call sites are checked in declaration order; an unsafe callee whose
    constraints are not covered by the current state (plus any atoms hinted
    at that site) is an undefined-behavior witness,
  * on exit the effective broken set (`breaks` minus own constraints) turns
    false. A caller honoring the function's constraints keeps the
    constrained atoms valid, mirroring how the broken-invariant set of a
    disruptive method is computed.

Struct checking enumerates every trace `constructor; m1; ...; mj[; dtor]`
with j <= k over the struct's dynamic methods, with repetition, in
lexicographic order (prefixes first). The initial state assumes the caller
satisfies the constraints of every function in the trace. Enumeration is
exhaustive; exceeding the configured trace cap is an explicit error, never
silent truncation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import CrateModel, FunctionDecl
from .upg import StructGroup

DEFAULT_BOUND = 4
DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class Trace:
    steps: tuple[str, ...]
    context_assumptions: frozenset[str]


@dataclass(frozen=True)
class UbReport:
    trace: Trace
    failing_step: str
    failing_callee: str
    missing: frozenset[str]

    def to_json_dict(self) -> dict:
        return {
            "trace": {
                "steps": list(self.trace.steps),
                "context_assumptions": sorted(self.trace.context_assumptions),
            },
            "failing_step": self.failing_step,
            "failing_callee": self.failing_callee,
            "missing": sorted(self.missing),
        }


class TraceCapExceeded(Exception):
    def __init__(self, struct: str, estimate: int, cap: int):
        super().__init__(
            f"struct {struct}: {estimate} traces per constructor exceed the cap of {cap}"
        )
        self.struct = struct
        self.estimate = estimate
        self.cap = cap


def _step(
    f: FunctionDecl, state: frozenset[str], model: CrateModel
) -> tuple[frozenset[str], tuple[str, frozenset[str]] | None]:
    """Execute one body: (exit state, failure). Failure is
    (callee path, missing atoms) at the first undischarged unsafe call."""
    s1 = state | f.establishes | f.sc
    for cs in f.calls:
        callee = model.function(cs.callee)
        if callee.unsafety != "unsafe":
            continue
        have = s1 | cs.hint_atoms()
        if not callee.sc <= have:
            return s1, (cs.callee, frozenset(callee.sc - have))
    return s1 - (f.breaks - f.sc), None


def exec_function(
    f: FunctionDecl, state: frozenset[str], model: CrateModel
) -> frozenset[str] | UbReport:
    """Run one function from `state`; the resulting state, or a witness."""
    result, failure = _step(f, state, model)
    if failure is None:
        return result
    callee, missing = failure
    return UbReport(
        trace=Trace(steps=(f.path,), context_assumptions=f.sc),
        failing_step=f.path,
        failing_callee=callee,
        missing=missing,
    )


def oracle_check_function(f: FunctionDecl, model: CrateModel) -> UbReport | None:
    """Check a plain function, static method or constructor under a caller
    that satisfies its declared constraints."""
    result = exec_function(f, frozenset(f.sc), model)
    return result if isinstance(result, UbReport) else None


def oracle_check_struct(
    group: StructGroup,
    model: CrateModel,
    k: int = DEFAULT_BOUND,
    cap: int = DEFAULT_CAP,
) -> UbReport | None:
    """Exhaustively check every bounded trace of a struct group.

    Returns the first witness in enumeration order (constructors in path
    order; method sequences lexicographic with shorter prefixes first; each
    sequence tried without, then with, the destructor), or None.
    """
    assert k >= 1 and cap >= 1
    methods = list(group.dynamic_methods)
    dtor = group.destructor
    alphabet_size = len(methods) + (1 if dtor else 0)
    if alphabet_size**k > cap:
        raise TraceCapExceeded(group.struct, alphabet_size**k, cap)

    decls = {p: model.function(p) for p in methods + ([dtor] if dtor else [])}
    step_cache: dict[tuple[str, frozenset[str]], tuple[frozenset[str], tuple | None]] = {}

    def cached_step(path: str, state: frozenset[str]):
        key = (path, state)
        hit = step_cache.get(key)
        if hit is None:
            hit = _step(decls[path], state, model)
            step_cache[key] = hit
        return hit

    def run(ctor: str, seq: tuple[str, ...]) -> UbReport | None:
        steps = (ctor,) + seq
        assumptions = frozenset().union(*(model.function(p).sc for p in steps))
        state = assumptions
        ctor_decl = model.function(ctor)
        state, failure = _step(ctor_decl, state, model)
        trace = Trace(steps=steps, context_assumptions=assumptions)
        if failure is not None:
            return UbReport(trace, ctor, failure[0], failure[1])
        for path in seq:
            state, failure = cached_step(path, state)
            if failure is not None:
                return UbReport(trace, path, failure[0], failure[1])
        return None

    def sequences(prefix: tuple[str, ...]):
        yield prefix
        if len(prefix) < k:
            for m in methods:
                yield from sequences(prefix + (m,))

    for ctor in group.constructors:
        for seq in sequences(()):
            report = run(ctor, seq)
            if report is not None:
                return report
            if dtor:
                report = run(ctor, seq + (dtor,))
                if report is not None:
                    return report
    return None


def oracle_check_crate(
    model: CrateModel,
    upg_groups: tuple[StructGroup, ...],
    k: int = DEFAULT_BOUND,
    cap: int = DEFAULT_CAP,
) -> tuple[int, list[UbReport]]:
    """Run the oracle over every eligible function and every struct group.

    Returns (number of subjects checked, witnesses): at most one witness per
    function and per struct, in deterministic subject order. Structs outside
    the propagation graph have no members with unsafe callees and are
    trivially clean, so only graph groups are enumerated.
    """
    witnesses: list[UbReport] = []
    checked = 0
    for f in model.functions():
        if f.receiver == "none" and f.role in ("plain", "constructor"):
            checked += 1
            report = oracle_check_function(f, model)
            if report is not None:
                witnesses.append(report)
    for group in upg_groups:
        checked += 1
        report = oracle_check_struct(group, model, k=k, cap=cap)
        if report is not None:
            witnesses.append(report)
    return checked, witnesses
