from __future__ import annotations

import random

from hypothesis import given, settings
from hypothesis import strategies as st

from upgaudit import build_upg, export_dot, parse_facts, segment, unsafe_callees
from upgaudit.constraints import bs_of_method

from .conftest import check_golden, load_fixture
from .modelgen import random_model


def test_unsafe_callees_empty_without_calls():
    model, _ = parse_facts("crate c { fn f; }")
    assert unsafe_callees(model, "c::f") == frozenset()


def test_unsafe_callees_direct_unsafe():
    model = load_fixture("two_fn")
    assert unsafe_callees(model, "c::g") == {"c::f"}


def test_unsafe_callees_is_direct_only():
    # The safe intermediary owns the obligation; its caller has none.
    src = """
    crate c {
      fn unsafe f() sc [a];
      fn h() establishes [a] calls f;
      fn g() calls h;
    }
    """
    model, diags = parse_facts(src)
    assert diags == []
    assert unsafe_callees(model, "c::g") == frozenset()
    assert unsafe_callees(model, "c::h") == {"c::f"}


def test_safe_non_calling_crate_has_empty_graph():
    model, _ = parse_facts("crate c { fn f; fn g; }")
    upg = build_upg(model)
    assert upg.nodes == () and upg.edges == () and upg.struct_groups == ()


def test_two_function_graph():
    upg = build_upg(load_fixture("two_fn"))
    assert [n.function for n in upg.nodes] == ["c::f", "c::g"]
    assert [(e.caller, e.callee, e.callee_unsafe) for e in upg.edges] == [("c::g", "c::f", True)]
    assert upg.struct_groups == ()


def test_transitive_reach_includes_safe_intermediaries():
    src = """
    crate c {
      fn unsafe f() sc [a];
      fn h() establishes [a] calls f;
      fn g() calls h;
      fn lonely;
    }
    """
    model, _ = parse_facts(src)
    upg = build_upg(model)
    assert [n.function for n in upg.nodes] == ["c::f", "c::g", "c::h"]
    edges = {(e.caller, e.callee): e.callee_unsafe for e in upg.edges}
    assert edges == {("c::g", "c::h"): False, ("c::h", "c::f"): True}


def test_buf_struct_group():
    upg = build_upg(load_fixture("buf_disruptive"))
    (group,) = upg.struct_groups
    assert group.struct == "c::Buf"
    assert group.constructors == ("c::new",)
    assert group.dynamic_methods == ("c::get", "c::set_len")
    assert group.destructor is None
    assert group.disruptive == ("c::set_len",)


def test_extern_unsafe_callee_becomes_node():
    upg = build_upg(load_fixture("buf_disruptive"))
    node = upg.node("get_unchecked")
    assert node is not None and node.external and node.unsafety == "unsafe"


def test_segment_empty():
    model, _ = parse_facts("crate c { }")
    assert segment(build_upg(model)) == ()


def test_segment_two_function_model():
    subgraphs = segment(build_upg(load_fixture("two_fn")))
    assert [(s.kind, s.focus) for s in subgraphs] == [
        ("unsafe_node", "c::f"),
        ("call_with_unsafe_callee", "c::g"),
    ]
    call = subgraphs[1]
    assert call.nodes == ("c::f", "c::g")
    assert call.edges == (("c::g", "c::f"),)


def test_segment_struct_audit_spans_constructors_and_disruptive():
    subgraphs = segment(build_upg(load_fixture("buf_disruptive")))
    audit = [s for s in subgraphs if s.kind == "struct_audit"]
    assert len(audit) == 1
    assert audit[0].focus == "c::get"
    assert audit[0].nodes == ("c::get", "c::new", "c::set_len")
    assert audit[0].edges == (("c::get", "get_unchecked"),)


def test_segment_covers_every_edge_and_every_unsafe_node():
    for seed in range(40):
        model = random_model(random.Random(seed))
        upg = build_upg(model)
        subgraphs = segment(upg)
        covered = {edge for s in subgraphs for edge in s.edges}
        assert {(e.caller, e.callee) for e in upg.edges} <= covered
        unsafe_nodes = [n.function for n in upg.nodes if n.unsafety == "unsafe"]
        for path in unsafe_nodes:
            owners = [s for s in subgraphs if s.kind == "unsafe_node" and s.focus == path]
            assert len(owners) == 1


def test_edge_endpoints_are_nodes():
    for seed in range(40):
        upg = build_upg(random_model(random.Random(seed)))
        paths = {n.function for n in upg.nodes}
        for e in upg.edges:
            assert e.caller in paths and e.callee in paths


def test_struct_group_iff_member_has_unsafe_callee():
    for seed in range(40):
        model = random_model(random.Random(seed))
        upg = build_upg(model)
        grouped = {g.struct for g in upg.struct_groups}
        for s in model.structs():
            members = (
                model.constructors_of(s.path)
                + model.dynamic_methods_of(s.path)
                + ([model.destructor_of(s.path)] if model.destructor_of(s.path) else [])
            )
            expected = any(unsafe_callees(model, m.path) for m in members)
            assert (s.path in grouped) == expected


def test_disruptive_iff_nonempty_broken_set():
    for seed in range(40):
        model = random_model(random.Random(seed))
        for g in build_upg(model).struct_groups:
            candidates = g.dynamic_methods + ((g.destructor,) if g.destructor else ())
            for m in candidates:
                assert (m in g.disruptive) == bool(bs_of_method(model.function(m)))
            assert set(g.disruptive) <= set(candidates)


def test_struct_group_spans_modules():
    # Methods may live in a different module than the struct; the role
    # clause resolves through the ancestor chain.
    src = """
    crate c {
      struct Buf { invariants [len_ok]; }
      fn pub new constructor of Buf establishes [len_ok];
      module accessors {
        fn pub get (&self) method of Buf calls raw::read;
      }
      extern fn unsafe raw::read sc [len_ok];
    }
    """
    model, diags = parse_facts(src)
    assert model is not None, [d.render() for d in diags]
    (group,) = build_upg(model).struct_groups
    assert group.struct == "c::Buf"
    assert group.constructors == ("c::new",)
    assert group.dynamic_methods == ("c::accessors::get",)
    audit = [s for s in segment(build_upg(model)) if s.kind == "struct_audit"]
    assert audit[0].nodes == ("c::accessors::get", "c::new")


def test_export_dot_empty():
    model, _ = parse_facts("crate c { }")
    assert export_dot(build_upg(model)) == "digraph upg {\n}\n"


def test_export_dot_two_function_edge():
    dot = export_dot(build_upg(load_fixture("two_fn")))
    assert '"c::g" -> "c::f"' in dot
    assert '"c::f" [shape=box];' in dot
    check_golden("two_fn.dot", dot)


def test_export_dot_buf_cluster():
    dot = export_dot(build_upg(load_fixture("buf_disruptive")))
    assert "subgraph cluster_c__Buf" in dot
    check_golden("buf_disruptive.dot", dot)


def test_rebuild_is_byte_identical():
    model = load_fixture("buf_disruptive")
    assert export_dot(build_upg(model)) == export_dot(build_upg(model))


@given(st.integers(0, 10**9))
@settings(max_examples=40, deadline=None)
def test_graph_orderings_are_lexicographic(seed):
    upg = build_upg(random_model(random.Random(seed)))
    node_paths = [n.function for n in upg.nodes]
    assert node_paths == sorted(node_paths)
    edge_keys = [(e.caller, e.callee) for e in upg.edges]
    assert edge_keys == sorted(edge_keys)
