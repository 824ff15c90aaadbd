from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from upgaudit import load_json, parse_facts
from upgaudit.model import Diagnostic

from .conftest import ALL_FIXTURES, fixture_path
from .modelgen import random_model


def test_load_empty_document():
    doc = {"name": "c", "root": {"path": "c", "functions": [], "structs": [], "submodules": []}}
    model, diags = load_json(json.dumps(doc))
    assert diags == []
    assert model.name == "c"
    assert model.root.functions == ()


def test_loaders_agree_on_two_function_model():
    facts_model, diags = parse_facts("crate c { fn unsafe f() sc [a]; fn g() calls f; }")
    assert diags == []
    json_model, diags = load_json(facts_model.to_json_bytes())
    assert diags == []
    assert json_model == facts_model


def test_missing_name_reports_pointer():
    model, diags = load_json(json.dumps({"root": {}}))
    assert model is None
    assert diags[0].pointer == "/name"
    assert diags[0].message == "missing required key"


def test_unexpected_key_reports_pointer():
    doc = {"name": "c", "root": {"path": "c", "functions": [], "structs": [], "submodules": []}, "extra": 1}
    model, diags = load_json(json.dumps(doc))
    assert model is None
    assert diags[0].pointer == "/extra"


def test_bad_function_field_reports_nested_pointer():
    doc = {
        "name": "c",
        "root": {
            "path": "c",
            "functions": [
                {
                    "path": "c::f",
                    "visibility": "public",
                    "unsafety": "sometimes",
                    "receiver": "none",
                    "role": {"kind": "plain", "struct": None},
                    "sc": [],
                    "establishes": [],
                    "breaks": [],
                    "calls": [],
                }
            ],
            "structs": [],
            "submodules": [],
        },
    }
    model, diags = load_json(json.dumps(doc))
    assert model is None
    assert diags[0].pointer == "/root/functions/0/unsafety"


def test_invalid_json_is_a_diagnostic():
    model, diags = load_json(b"{nope")
    assert model is None
    assert diags[0].severity == "error"


def test_non_utf8_bytes_are_a_diagnostic():
    model, diags = load_json(b"\xff\xfe{}")
    assert model is None
    assert "not UTF-8" in diags[0].message


def test_externs_round_trip_through_root_functions():
    src = "crate c { fn g() establishes [a] calls u; extern fn unsafe u sc [a]; }"
    model, _ = parse_facts(src)
    doc = model.to_json_dict()
    paths = [f["path"] for f in doc["root"]["functions"]]
    assert paths == ["c::g", "u"]
    reloaded, diags = load_json(model.to_json_bytes())
    assert diags == []
    assert reloaded == model
    assert reloaded.is_external("u")
    assert not reloaded.is_external("c::g")


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_round_trip_on_fixture_corpus(name):
    model, diags = parse_facts(fixture_path(name).read_text())
    assert model is not None, [d.render() for d in diags]
    reloaded, rediags = load_json(model.to_json_bytes())
    assert reloaded is not None, [d.render() for d in rediags]
    assert reloaded == model
    assert reloaded.to_json_bytes() == model.to_json_bytes()


@given(st.integers(0, 10**9))
@settings(max_examples=60, deadline=None)
def test_round_trip_on_random_models(seed):
    model = random_model(random.Random(seed))
    reloaded, diags = load_json(model.to_json_bytes())
    assert reloaded is not None, [d.render() for d in diags]
    assert reloaded == model
    assert reloaded.fingerprint() == model.fingerprint()


def test_duplicate_paths_rejected_by_loader():
    model, _ = parse_facts("crate c { fn f; }")
    doc = model.to_json_dict()
    doc["root"]["functions"].append(doc["root"]["functions"][0])
    reloaded, diags = load_json(json.dumps(doc))
    assert reloaded is None
    assert any("duplicate path c::f" in d.message for d in diags)


def test_loader_applies_same_semantic_validations_as_parser():
    model, _ = parse_facts("crate c { fn unsafe f() sc [a]; fn g() calls f; }")
    doc = model.to_json_dict()
    # Turn f safe while keeping its constraint set: must be rejected.
    doc["root"]["functions"][0]["unsafety"] = "safe"
    reloaded, diags = load_json(json.dumps(doc))
    assert reloaded is None
    assert any("safe function declares non-empty sc" in d.message for d in diags)


def test_serialization_is_byte_deterministic():
    src = fixture_path("buf_disruptive").read_text()
    a, _ = parse_facts(src)
    b, _ = parse_facts(src)
    assert a.to_json_bytes() == b.to_json_bytes()
    assert a.fingerprint() == b.fingerprint()


def test_diagnostic_rendering():
    assert Diagnostic("error", "boom", line=3, col=7).render() == "error: boom at 3:7"
    assert Diagnostic("error", "boom", pointer="/name").render() == "error: boom at /name"
    assert Diagnostic("warn", "meh", subject="c::f").render() == "warn: meh [c::f]"
