"""Command-line entry point.

Subcommands:
    check       parse, validate, build the graph, generate obligations,
                apply the audit trail and print the verdict tree
    oracle      run the bounded abstract-execution oracle, JSON report
    obligations list obligations with effective statuses
    mark        record a judgment (discharge or reopen) for an obligation
    export-dot  print the propagation graph as DOT
    serve       serve the HTTP API (and, optionally, the web UI bundle)

Exit codes: 0 sound / clean, 1 open obligations or witnesses found,
2 diagnostics of severity error (bad input, unknown obligation), 3 trace
cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from . import audit as audit_mod
from . import obligations as obligations_mod
from . import semantics
from .model import CrateModel, Diagnostic, has_errors, load_json
from .facts import parse_facts
from .obligations import STATUS_OPEN, Obligation, crate_verdict
from .server import AuditApp, serve
from .upg import build_upg, export_dot, segment

EXIT_SOUND = 0
EXIT_OPEN = 1
EXIT_ERROR = 2
EXIT_CAP = 3


def _print_diags(diags: list[Diagnostic]) -> None:
    for d in diags:
        print(d.render(), file=sys.stderr)


def _load_model(path: str, fmt: str | None) -> tuple[CrateModel | None, list[Diagnostic]]:
    p = Path(path)
    if not p.exists():
        return None, [Diagnostic("error", f"no such file: {path}")]
    data = p.read_bytes()
    if fmt is None:
        fmt = "json" if p.suffix == ".json" else "facts"
    if fmt == "json":
        return load_json(data)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        return None, [Diagnostic("error", f"input is not UTF-8: {exc}")]
    return parse_facts(text)


def _analysis(args) -> tuple[int, dict | None]:
    """Shared pipeline: model, graph, obligations, audit state, statuses."""
    model, diags = _load_model(args.input, args.format)
    _print_diags(diags)
    if model is None:
        return EXIT_ERROR, None
    upg = build_upg(model)
    obls, gen_diags = obligations_mod.gen_all(model, upg)
    audit_path = args.audit or os.environ.get("UPG_AUDIT_FILE")
    if audit_path:
        state, audit_diags = audit_mod.load_audit(audit_path, model.fingerprint(), {o.id for o in obls})
        _print_diags(audit_diags)
        if state.stale:
            print(
                f"warn: {len(state.stale)} stale judgment(s) ignored (model fingerprint changed)",
                file=sys.stderr,
            )
    else:
        state = audit_mod.AuditState(model_fingerprint=model.fingerprint())
    statuses = audit_mod.effective_statuses(obls, state)
    return EXIT_SOUND, {
        "model": model,
        "upg": upg,
        "obligations": obls,
        "gen_diags": gen_diags,
        "audit_state": state,
        "audit_path": audit_path,
        "statuses": statuses,
    }


def _obligation_line(o: Obligation, status: str) -> str:
    missing = f" missing {sorted(o.missing)}" if o.missing else ""
    if o.kind == "pair_discharge":
        subject = f"({o.subject[0]}, {o.subject[1]}) -> {o.subject[2]}"
    elif o.kind == "call_discharge":
        subject = f"{o.subject[0]} -> {o.subject[1]}"
    else:
        subject = o.subject[0]
    return f"[{status} {o.id}] {o.kind} {subject}: required {sorted(o.required)}{missing}"


def _status_rank(status: str) -> int:
    return 0 if status == STATUS_OPEN else 1


def cmd_check(args) -> int:
    code, ctx = _analysis(args)
    if ctx is None:
        return code
    model, obls, statuses = ctx["model"], ctx["obligations"], ctx["statuses"]
    gen_diags = ctx["gen_diags"]
    _print_diags(gen_diags)
    tree = crate_verdict(model, args.mode, obls, statuses, gen_diags)

    if args.output == "json":
        payload = {
            "verdict": tree.to_json_dict(),
            "obligations": [dict(o.to_json_dict(), status=statuses[o.id]) for o in obls],
        }
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print(f"crate: {tree.crate.render()}")
        by_fn: dict[str, list[Obligation]] = {}
        by_struct: dict[str, list[Obligation]] = {}
        for o in obls:
            if o.kind == "pair_discharge":
                by_struct.setdefault(o.struct, []).append(o)
            else:
                by_fn.setdefault(o.subject[0], []).append(o)

        def print_obls(items: list[Obligation], indent: str) -> None:
            for o in sorted(items, key=lambda o: (_status_rank(statuses[o.id]), o.id)):
                print(f"{indent}{_obligation_line(o, statuses[o.id])}")

        for mod in model.modules():
            print(f"  module {mod.path}: {tree.modules[mod.path].render()}")
            for s in mod.structs:
                print(f"    struct {s.path}: {tree.structs[s.path].render()}")
                print_obls(by_struct.get(s.path, []), "      ")
            for f in mod.functions:
                print(f"    fn {f.path}: {tree.functions[f.path].render()}")
                print_obls(by_fn.get(f.path, []), "      ")

    if has_errors(gen_diags):
        return EXIT_ERROR
    if tree.crate.state == "sound":
        return EXIT_SOUND
    return EXIT_OPEN


def cmd_oracle(args) -> int:
    code, ctx = _analysis(args)
    if ctx is None:
        return code
    model, upg = ctx["model"], ctx["upg"]
    try:
        checked, witnesses = semantics.oracle_check_crate(
            model, upg.struct_groups, k=args.k, cap=args.cap
        )
    except semantics.TraceCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    report = {"checked": checked, "ub_witnesses": [w.to_json_dict() for w in witnesses]}
    print(json.dumps(report, sort_keys=True, indent=2))
    return EXIT_SOUND if not witnesses else EXIT_OPEN


def cmd_obligations(args) -> int:
    code, ctx = _analysis(args)
    if ctx is None:
        return code
    obls, statuses = ctx["obligations"], ctx["statuses"]
    _print_diags(ctx["gen_diags"])
    if args.output == "json":
        print(json.dumps([dict(o.to_json_dict(), status=statuses[o.id]) for o in obls], sort_keys=True, indent=2))
    else:
        for o in sorted(obls, key=lambda o: (_status_rank(statuses[o.id]), o.id)):
            print(_obligation_line(o, statuses[o.id]))
    return EXIT_SOUND


def cmd_mark(args) -> int:
    code, ctx = _analysis(args)
    if ctx is None:
        return code
    if not ctx["audit_path"]:
        print("error: mark requires --audit or UPG_AUDIT_FILE", file=sys.stderr)
        return EXIT_ERROR
    try:
        state, judgment = audit_mod.mark(
            ctx["audit_state"],
            args.id,
            args.verdict,
            args.justification,
            args.author,
            known_ids={o.id for o in ctx["obligations"]},
        )
    except audit_mod.AuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    audit_mod.append_judgment(ctx["audit_path"], judgment)
    statuses = audit_mod.effective_statuses(ctx["obligations"], state)
    print(f"{args.id}: {statuses[args.id]}")
    return EXIT_SOUND


def cmd_export_dot(args) -> int:
    code, ctx = _analysis(args)
    if ctx is None:
        return code
    sys.stdout.write(export_dot(ctx["upg"]))
    return EXIT_SOUND


def cmd_serve(args) -> int:
    code, ctx = _analysis(args)
    if ctx is None:
        return code
    if not ctx["audit_path"]:
        print("error: serve requires --audit or UPG_AUDIT_FILE", file=sys.stderr)
        return EXIT_ERROR
    host, _, port_str = args.addr.rpartition(":")
    try:
        port = int(port_str)
    except ValueError:
        print(f"error: bad --addr {args.addr!r}, expected host:port", file=sys.stderr)
        return EXIT_ERROR
    ui_dir = args.ui
    if ui_dir is None:
        for candidate in (
            Path.cwd() / "frontend" / "dist",
            Path(__file__).resolve().parents[2] / "frontend" / "dist",
        ):
            if (candidate / "index.html").is_file():
                ui_dir = str(candidate)
                break
    app = AuditApp(
        model=ctx["model"],
        upg=ctx["upg"],
        subgraphs=segment(ctx["upg"]),
        obligations=ctx["obligations"],
        gen_diags=ctx["gen_diags"],
        audit_state=ctx["audit_state"],
        audit_path=ctx["audit_path"],
        ui_dir=ui_dir,
    )
    try:
        httpd = serve(app, host or "127.0.0.1", port)
    except OSError as exc:
        print(f"error: cannot bind {args.addr}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    actual = httpd.server_address
    print(f"serving on http://{actual[0]}:{actual[1]}", flush=True)
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
    return EXIT_SOUND


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="upgaudit", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"upgaudit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, output=False) -> None:
        p.add_argument("input", help="crate facts file or JSON document")
        p.add_argument("--format", choices=("facts", "json"), default=None,
                       help="input format (default: by file extension)")
        p.add_argument("--audit", default=None,
                       help="audit trail file (default: $UPG_AUDIT_FILE)")
        if output:
            p.add_argument("--output", choices=("text", "json"), default="text")

    p = sub.add_parser("check", help="verdict tree from obligations and judgments")
    common(p, output=True)
    p.add_argument("--mode", choices=("strong", "weak"), default="strong")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("oracle", help="bounded abstract-execution oracle")
    common(p)
    p.add_argument("--k", type=int, default=semantics.DEFAULT_BOUND, help="trace length bound (>= 1)")
    p.add_argument("--cap", type=int, default=semantics.DEFAULT_CAP, help="max traces per constructor")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("obligations", help="list obligations")
    common(p, output=True)
    p.set_defaults(fn=cmd_obligations)

    p = sub.add_parser("mark", help="record an audit judgment")
    common(p)
    p.add_argument("--id", required=True, help="obligation id")
    p.add_argument("--verdict", choices=("discharged", "reopened"), required=True)
    p.add_argument("--justification", required=True)
    p.add_argument("--author", default=os.environ.get("USER", "auditor"))
    p.set_defaults(fn=cmd_mark)

    p = sub.add_parser("export-dot", help="print the propagation graph as DOT")
    common(p)
    p.set_defaults(fn=cmd_export_dot)

    p = sub.add_parser("serve", help="serve the HTTP API")
    common(p)
    p.add_argument("--addr", default="127.0.0.1:8787", help="host:port to bind")
    p.add_argument("--ui", default=None, help="directory with the built web UI")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "k", 1) < 1 or getattr(args, "cap", 1) < 1:
        print("error: --k and --cap must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
