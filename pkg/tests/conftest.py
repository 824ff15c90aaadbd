from __future__ import annotations

import contextlib
import io
import json
import os
from pathlib import Path

import pytest

from upgaudit import parse_facts
from upgaudit.cli import main as cli_main

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

UNSOUND_FIXTURES = [
    "undeclared_sc",
    "two_fn",
    "constructor_gap",
    "buf_disruptive",
    "visibility",
]
CONSERVATIVE_FIXTURES = ["conservative_dtor", "conservative_refill"]
ALL_FIXTURES = sorted(p.stem for p in FIXTURES.glob("*.facts"))


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.facts"


def load_fixture(name: str):
    model, diags = parse_facts(fixture_path(name).read_text())
    assert model is not None, [d.render() for d in diags]
    return model


def run_cli(argv: list[str]) -> tuple[int, str, str]:
    """Invoke the CLI in-process, capturing stdout and stderr."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            code = cli_main(argv)
        except SystemExit as exc:  # argparse errors
            code = exc.code if isinstance(exc.code, int) else 2
    return code, out.getvalue(), err.getvalue()


def check_golden(name: str, content: str) -> None:
    """Compare against a committed golden file; refresh with UPDATE_GOLDENS=1."""
    path = GOLDEN / name
    if os.environ.get("UPDATE_GOLDENS") == "1":
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content)
        return
    assert path.exists(), f"golden file {name} missing; run with UPDATE_GOLDENS=1"
    assert content == path.read_text(), f"output differs from golden {name}"


def check_golden_json(name: str, payload) -> None:
    check_golden(name, json.dumps(payload, sort_keys=True, indent=2) + "\n")


@pytest.fixture
def buf_model():
    return load_fixture("buf_disruptive")
