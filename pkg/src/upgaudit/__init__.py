"""upgaudit: soundness auditor for annotated crate models.

Pipeline: parse a crate facts file (or JSON document) into a CrateModel,
build the unsafety propagation graph, generate discharge obligations from
the constraint algebra, apply persisted audit judgments, and roll verdicts
up to struct, module and crate level. A bounded abstract-execution oracle
cross-checks the analyzer: whenever every obligation discharges
automatically, the oracle finds no undefined-behavior witness.
"""

__version__ = "0.1.0"

from .model import (
    CallSite,
    CrateModel,
    Diagnostic,
    FunctionDecl,
    ModuleDecl,
    StructDecl,
    load_json,
    make_model,
    validate,
)
from .facts import parse_facts
from .constraints import (
    AvailableFacts,
    bs_of_method,
    bs_of_struct,
    entails,
    facts_for_function,
    facts_for_pair,
)
from .upg import Subgraph, StructGroup, Upg, UpgEdge, UpgNode, build_upg, export_dot, segment, unsafe_callees
from .obligations import Obligation, Verdict, VerdictTree, crate_verdict, gen_all, module_verdict
from .semantics import (
    Trace,
    TraceCapExceeded,
    UbReport,
    exec_function,
    oracle_check_crate,
    oracle_check_function,
    oracle_check_struct,
)
from .audit import AuditError, AuditState, Judgment, effective_statuses, load_audit, mark

__all__ = [
    "AuditError",
    "AuditState",
    "AvailableFacts",
    "CallSite",
    "CrateModel",
    "Diagnostic",
    "FunctionDecl",
    "Judgment",
    "ModuleDecl",
    "Obligation",
    "StructDecl",
    "StructGroup",
    "Subgraph",
    "Trace",
    "TraceCapExceeded",
    "UbReport",
    "Upg",
    "UpgEdge",
    "UpgNode",
    "Verdict",
    "VerdictTree",
    "bs_of_method",
    "bs_of_struct",
    "build_upg",
    "crate_verdict",
    "effective_statuses",
    "entails",
    "exec_function",
    "export_dot",
    "facts_for_function",
    "facts_for_pair",
    "gen_all",
    "load_audit",
    "load_json",
    "make_model",
    "mark",
    "module_verdict",
    "oracle_check_crate",
    "oracle_check_function",
    "oracle_check_struct",
    "parse_facts",
    "segment",
    "unsafe_callees",
    "validate",
]
