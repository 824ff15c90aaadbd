from __future__ import annotations

import json
import subprocess
import sys

from upgaudit import gen_all

from .conftest import check_golden, fixture_path, load_fixture, run_cli


def test_check_empty_crate_is_sound():
    code, out, err = run_cli(["check", str(fixture_path("empty"))])
    assert code == 0
    assert out.splitlines()[0] == "crate: sound"


def test_check_open_model_reports_missing_and_exits_1():
    code, out, err = run_cli(["check", str(fixture_path("two_fn"))])
    assert code == 1
    assert "crate: open (1 unresolved)" in out
    assert "missing ['a']" in out
    assert "call_discharge c::g -> c::f" in out


def test_check_malformed_input_exits_2(tmp_path):
    bad = tmp_path / "bad.facts"
    bad.write_text("crate c { fn g() sc [a]; }")
    code, out, err = run_cli(["check", str(bad)])
    assert code == 2
    assert "safe function declares non-empty sc" in err


def test_check_missing_file_exits_2():
    code, _, err = run_cli(["check", "/nonexistent/x.facts"])
    assert code == 2
    assert "no such file" in err


def test_check_text_report_matches_golden():
    for name in ("buf_disruptive", "visibility", "conservative_dtor"):
        code, out, _ = run_cli(["check", str(fixture_path(name))])
        assert code == 1
        check_golden(f"{name}.check.txt", out)


def test_check_weak_mode_flips_visibility_fixture():
    path = str(fixture_path("visibility"))
    strong_code, strong_out, _ = run_cli(["check", path, "--mode", "strong"])
    weak_code, weak_out, _ = run_cli(["check", path, "--mode", "weak"])
    assert strong_code == 1 and "crate: open" in strong_out
    assert weak_code == 0 and "crate: sound" in weak_out


def test_check_json_output_is_valid():
    code, out, _ = run_cli(["check", str(fixture_path("buf_disruptive")), "--output", "json"])
    assert code == 1
    payload = json.loads(out)
    assert payload["verdict"]["crate"] == "open"
    assert payload["verdict"]["structs"]["c::Buf"]["state"] == "open"
    assert len(payload["obligations"]) == 1


def test_check_reads_json_input(tmp_path):
    model = load_fixture("buf_disruptive")
    doc = tmp_path / "crate.json"
    doc.write_bytes(model.to_json_bytes())
    code, out, _ = run_cli(["check", str(doc)])
    assert code == 1
    assert "struct c::Buf: open" in out


def test_oracle_sound_model_exits_0():
    code, out, _ = run_cli(["oracle", str(fixture_path("sound_buf"))])
    assert code == 0
    report = json.loads(out)
    assert report["ub_witnesses"] == []
    assert report["checked"] == 2


def test_oracle_witness_exits_1_and_prints_trace():
    code, out, _ = run_cli(["oracle", str(fixture_path("buf_disruptive")), "--k", "2"])
    assert code == 1
    report = json.loads(out)
    (w,) = report["ub_witnesses"]
    assert w["trace"]["steps"] == ["c::new", "c::set_len", "c::get"]
    assert w["missing"] == ["len_ok"]


def test_oracle_cap_exceeded_exits_3_naming_struct():
    code, out, err = run_cli(["oracle", str(fixture_path("big_struct")), "--cap", "1"])
    assert code == 3
    assert "wide::Grid" in err


def test_oracle_rejects_bad_bounds():
    code, _, err = run_cli(["oracle", str(fixture_path("sound_buf")), "--k", "0"])
    assert code == 2


def test_obligations_text_listing():
    code, out, _ = run_cli(["obligations", str(fixture_path("buf_disruptive"))])
    assert code == 0
    assert "pair_discharge (c::new, c::get) -> get_unchecked" in out


def test_obligations_json_is_sorted_by_id():
    code, out, _ = run_cli(["obligations", str(fixture_path("visibility")), "--output", "json"])
    assert code == 0
    listed = json.loads(out)
    ids = [o["id"] for o in listed]
    assert ids == sorted(ids)
    assert {o["status"] for o in listed} == {"auto_discharged", "open"}


def test_export_dot_matches_library_output():
    from upgaudit import build_upg, export_dot

    code, out, _ = run_cli(["export-dot", str(fixture_path("buf_disruptive"))])
    assert code == 0
    assert out == export_dot(build_upg(load_fixture("buf_disruptive")))


def test_mark_then_check_uses_audit_file(tmp_path):
    model = load_fixture("buf_disruptive")
    obls, _ = gen_all(model)
    (o,) = obls
    audit = tmp_path / "trail.jsonl"
    path = str(fixture_path("buf_disruptive"))

    code, out, _ = run_cli([
        "mark", path, "--audit", str(audit),
        "--id", o.id, "--verdict", "discharged",
        "--justification", "set_len is crate-private and only used before get",
        "--author", "rev",
    ])
    assert code == 0
    assert f"{o.id}: manually_discharged" in out

    code, out, _ = run_cli(["check", path, "--audit", str(audit)])
    assert code == 0
    assert "crate: sound" in out

    code, out, _ = run_cli([
        "mark", path, "--audit", str(audit),
        "--id", o.id, "--verdict", "reopened",
        "--justification", "new caller appeared",
    ])
    assert code == 0
    code, out, _ = run_cli(["check", path, "--audit", str(audit)])
    assert code == 1


def test_mark_unknown_id_exits_2(tmp_path):
    audit = tmp_path / "trail.jsonl"
    code, _, err = run_cli([
        "mark", str(fixture_path("buf_disruptive")), "--audit", str(audit),
        "--id", "0000000000000000", "--verdict", "discharged", "--justification", "x",
    ])
    assert code == 2
    assert "unknown obligation" in err


def test_audit_env_var_is_default(tmp_path, monkeypatch):
    model = load_fixture("buf_disruptive")
    obls, _ = gen_all(model)
    (o,) = obls
    audit = tmp_path / "env_trail.jsonl"
    monkeypatch.setenv("UPG_AUDIT_FILE", str(audit))
    code, _, _ = run_cli([
        "mark", str(fixture_path("buf_disruptive")),
        "--id", o.id, "--verdict", "discharged", "--justification", "ok",
    ])
    assert code == 0
    assert audit.exists()


def test_stale_judgments_warn_but_do_not_apply(tmp_path):
    audit = tmp_path / "trail.jsonl"
    model = load_fixture("buf_disruptive")
    obls, _ = gen_all(model)
    (o,) = obls
    run_cli([
        "mark", str(fixture_path("buf_disruptive")), "--audit", str(audit),
        "--id", o.id, "--verdict", "discharged", "--justification", "ok",
    ])
    # Same trail against a different model: the judgment is stale.
    code, out, err = run_cli(["check", str(fixture_path("sound_buf")), "--audit", str(audit)])
    assert code == 0
    assert "stale judgment" in err


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "upgaudit.cli", "check", str(fixture_path("empty"))],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "crate: sound" in proc.stdout


def test_serve_subprocess_answers_requests(tmp_path):
    import urllib.request

    proc = subprocess.Popen(
        [
            sys.executable, "-m", "upgaudit.cli", "serve",
            str(fixture_path("buf_disruptive")),
            "--addr", "127.0.0.1:0",
            "--audit", str(tmp_path / "trail.jsonl"),
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    try:
        banner = proc.stdout.readline().strip()
        assert banner.startswith("serving on http://")
        base = banner.split("serving on ")[1]
        with urllib.request.urlopen(f"{base}/api/verdict?mode=strong", timeout=5) as resp:
            payload = json.loads(resp.read())
        assert payload["crate"] == "open"
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def test_outputs_are_byte_identical_across_runs():
    path = str(fixture_path("buf_disruptive"))
    for argv in (["check", path], ["oracle", path], ["export-dot", path]):
        runs = {run_cli(argv) for _ in range(3)}
        assert len(runs) == 1
