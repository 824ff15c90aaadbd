"""Persisted human audit judgments.

The audit trail is a line-delimited JSON file, one judgment per line,
append-only: marking never rewrites history, a later judgment for the same
obligation supersedes earlier ones. Every line records the model
fingerprint current when the judgment was made; judgments whose fingerprint
no longer matches the model are stale and count as if absent (the
obligations they discharged reopen), but they stay in the file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .model import Diagnostic
from .obligations import Obligation, STATUS_AUTO, STATUS_MANUAL, STATUS_OPEN

VERDICT_DISCHARGED = "discharged"
VERDICT_REOPENED = "reopened"

_LINE_KEYS = {"id", "verdict", "justification", "author", "ts", "fp"}


class AuditError(ValueError):
    pass


@dataclass(frozen=True)
class Judgment:
    obligation_id: str
    verdict: str  # discharged | reopened
    justification: str
    author: str
    ts: str  # ISO-8601 UTC
    fingerprint: str

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "id": self.obligation_id,
                "verdict": self.verdict,
                "justification": self.justification,
                "author": self.author,
                "ts": self.ts,
                "fp": self.fingerprint,
            },
            sort_keys=True,
            ensure_ascii=True,
        )


@dataclass
class AuditState:
    """Judgments applicable to the current model plus the stale remainder."""

    model_fingerprint: str
    judgments: tuple[Judgment, ...] = ()
    stale: tuple[Judgment, ...] = ()


def _now_ts() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def load_audit(
    path: str | Path, model_fingerprint: str, known_ids: set[str]
) -> tuple[AuditState, list[Diagnostic]]:
    """Read an audit file, splitting current from stale judgments.

    Judgments with the current fingerprint but an unknown obligation id are
    rejected with a diagnostic; malformed lines likewise. A missing file is
    an empty trail.
    """
    diags: list[Diagnostic] = []
    judgments: list[Judgment] = []
    stale: list[Judgment] = []
    p = Path(path)
    if not p.exists():
        return AuditState(model_fingerprint=model_fingerprint), diags
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            diags.append(Diagnostic("error", f"malformed audit line: {exc.msg}", line=lineno))
            continue
        if not isinstance(obj, dict) or set(obj) != _LINE_KEYS:
            diags.append(Diagnostic("error", "malformed audit line: unexpected keys", line=lineno))
            continue
        if obj["verdict"] not in (VERDICT_DISCHARGED, VERDICT_REOPENED):
            diags.append(Diagnostic("error", f"malformed audit line: bad verdict {obj['verdict']!r}", line=lineno))
            continue
        j = Judgment(
            obligation_id=obj["id"],
            verdict=obj["verdict"],
            justification=obj["justification"],
            author=obj["author"],
            ts=obj["ts"],
            fingerprint=obj["fp"],
        )
        if j.fingerprint != model_fingerprint:
            stale.append(j)
        elif j.obligation_id not in known_ids:
            diags.append(
                Diagnostic("error", f"judgment references unknown obligation id {j.obligation_id}", line=lineno)
            )
        else:
            judgments.append(j)
    return AuditState(model_fingerprint, tuple(judgments), tuple(stale)), diags


def mark(
    state: AuditState,
    obligation_id: str,
    verdict: str,
    justification: str,
    author: str,
    known_ids: set[str],
    ts: str | None = None,
) -> tuple[AuditState, Judgment]:
    """Append one judgment, returning the new state and the judgment.

    Pure with respect to files; callers persist with `append_judgment`.
    """
    if obligation_id not in known_ids:
        raise AuditError(f"unknown obligation {obligation_id}")
    if verdict not in (VERDICT_DISCHARGED, VERDICT_REOPENED):
        raise AuditError(f"verdict must be 'discharged' or 'reopened', got {verdict!r}")
    if not justification.strip():
        raise AuditError("justification must be non-empty")
    j = Judgment(
        obligation_id=obligation_id,
        verdict=verdict,
        justification=justification,
        author=author,
        ts=ts or _now_ts(),
        fingerprint=state.model_fingerprint,
    )
    return AuditState(state.model_fingerprint, state.judgments + (j,), state.stale), j


def append_judgment(path: str | Path, judgment: Judgment) -> None:
    """Append one line; flushed and fsynced before returning."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "a", encoding="utf-8", newline="\n") as fh:
        fh.write(judgment.to_json_line() + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def effective_statuses(
    obligations: list[Obligation], state: AuditState
) -> dict[str, str]:
    """Effective status per obligation id.

    Auto-discharged obligations stay discharged regardless of judgments;
    otherwise the last judgment wins, and no judgment means open.
    """
    statuses = {o.id: o.status for o in obligations}
    last: dict[str, str] = {}
    for j in state.judgments:
        last[j.obligation_id] = j.verdict
    for o in obligations:
        if o.status == STATUS_AUTO:
            continue
        verdict = last.get(o.id)
        if verdict == VERDICT_DISCHARGED:
            statuses[o.id] = STATUS_MANUAL
        else:
            statuses[o.id] = STATUS_OPEN
    return statuses
