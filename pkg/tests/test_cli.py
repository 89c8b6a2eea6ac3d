import io
import json

import pytest

from sahlkit.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, RunConfig, UsageError, run

RAUSZER_1 = "r >- (q >- p) <= (p \\/ q) >- p"


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def call_json(*argv):
    code, out, err = call(*argv, "--format", "json")
    return code, json.loads(out)


def test_classify_negative_verdict_exits_zero():
    code, out, _ = call("classify", "--sig", "bi-intuitionistic", "--ineq", RAUSZER_1)
    assert code == EXIT_OK
    assert "verdict: negative" in out


def test_missing_ineq_is_usage_error():
    code, out, err = call("classify", "--sig", "intuitionistic")
    assert code == EXIT_USAGE and "--ineq" in err and out == ""


@pytest.mark.parametrize("argv", [
    [],
    ["nonsense"],
    ["classify", "--sig", "nosuch", "--ineq", "p <= p"],
    ["classify", "--ineq", "p <="],
    ["translate", "--ineq", "p <= q", "--eps", "p=1"],
    ["translate", "--ineq", "p <= q", "--eps", "p=7,q=1"],
    ["modelcheck", "--ineq", "p <= p", "--frame", "/nonexistent.json"],
    ["corpus", "run", "/nonexistent.txt"],
    ["corpus", "run", "--max-worlds", "0"],
    ["algebra"],
])
def test_usage_errors(argv):
    assert call(*argv)[0] == EXIT_USAGE


def test_translate_text_and_json():
    code, out, _ = call("translate", "--ineq", "p -> q <= q", "--eps", "p=1,q=1", "--pretty")
    assert code == EXIT_OK and out.strip() == "□≤(¬□≤p ∨ □≤q) ≤ □≤q"
    code, data = call_json("translate", "--ineq", "p -> q <= q", "--eps", "p=1,q=1")
    assert data["translation"] == "boxle(~boxle p \\/ boxle q) <= boxle q"


def test_modelcheck_exit_codes(tmp_path):
    chain = tmp_path / "chain.json"
    chain.write_text('{"worlds": 2, "leq": [[0, 1]]}')
    code, out, _ = call("modelcheck", "--frame", str(chain), "--ineq", "top <= p \\/ (p -> bot)")
    assert code == EXIT_FAIL and "p=[1]" in out
    code, data = call_json("modelcheck", "--frame", str(chain), "--ineq", "p /\\ (p -> q) <= q")
    assert code == EXIT_OK and data["valid"]
    bad = tmp_path / "bad.json"
    bad.write_text('{"worlds": 2, "leq": [[0, 1]], "rel": {"dia": [[0, 1]], "box": []}}')
    code, _, err = call("modelcheck", "--sig", "positive-modal", "--frame", str(bad), "--ineq", "p <= dia p")
    assert code == EXIT_USAGE and "invalid frame" in err


def test_transfer_check_reports_every_witness():
    code, data = call_json("transfer-check", "--ineq", "p -> (q -> r) <= (p -> q) -> (p -> r)")
    assert code == EXIT_OK
    assert len(data["results"]) == 3 and all(r["pass"] for r in data["results"])


def test_correspond_verify_and_figures(tmp_path):
    code, out, _ = call("correspond", "--sig", "classical-modal", "--ineq", "box_o p <= ~box_o ~p",
                        "--verify", "3", "--figures", str(tmp_path), "--steps")
    assert code == EXIT_OK
    assert "forall j0. exists x0. R_box(j0, x0)" in out and "verified on" in out
    assert (tmp_path / "smallest-failing-frame.png").stat().st_size > 0


def test_correspond_rejection():
    code, data = call_json("correspond", "--sig", "classical-modal", "--ineq", "box_o dia_o boxle p <= dia_o boxle p")
    assert code == EXIT_FAIL and not data["ok"] and data["reason"] == "NotInductive"


def test_demo_mix(tmp_path):
    code, out, _ = call("algebra", "demo-mix", "--figures", str(tmp_path))
    assert code == EXIT_OK
    assert "box_le(a) = b" in out and "holds: False" in out
    assert (tmp_path / "mix-counterexample.png").exists()


def test_algebra_check(tmp_path):
    fr = tmp_path / "f.json"
    fr.write_text('{"worlds": 2, "leq": [[0, 1]], "rel": {"box": [[0, 0], [0, 1], [1, 1]], '
                  '"dia": [[0, 0], [1, 0], [1, 1]]}}')
    code, data = call_json("algebra", "check", "--sig", "positive-modal", "--frame", str(fr))
    assert code == EXIT_OK and {r["check"] for r in data["reports"]} == {"diagrams", "adjunction",
                                                                          "interior-closure", "s4"}


def test_corpus_run_user_file(tmp_path):
    corpus = tmp_path / "c.txt"
    corpus.write_text("refl ; classical-modal ; box_o p <= p ; correspond worlds=2\n"
                      "wrong ; classical-modal ; box_o p <= p ; no-correspondent\n")
    code, out, _ = call("corpus", "run", str(corpus), "--format", "csv", "--figures", str(tmp_path / "figs"))
    assert code == EXIT_FAIL
    lines = out.strip().splitlines()
    assert lines[0].startswith("id,entry,signature") and len(lines) == 3
    assert (tmp_path / "figs" / "corpus-summary.png").exists()


def test_json_schema_is_shared_and_matches_text(tmp_path):
    runs = [
        ("classify", "--ineq", "p <= p"),
        ("translate", "--ineq", "p <= p", "--eps", "p=1"),
        ("correspond", "--sig", "classical-modal", "--ineq", "box_o p <= p"),
        ("algebra", "demo-mix"),
    ]
    for argv in runs:
        code, data = call_json(*argv)
        assert {"command", "ok"} <= set(data)
        assert data["command"] == " ".join(a for a in argv[:2] if not a.startswith("-"))
        assert (code == EXIT_OK) == data["ok"]
    _, text, _ = call("classify", "--sig", "bi-intuitionistic", "--ineq", RAUSZER_1)
    _, data = call_json("classify", "--sig", "bi-intuitionistic", "--ineq", RAUSZER_1)
    assert f"verdict: {data['verdict']}" in text


def test_env_var_sets_default_frame_bound(monkeypatch):
    monkeypatch.setenv("SK_MAX_WORLDS", "2")
    _, data = call_json("transfer-check", "--sig", "positive-modal", "--ineq", "box p <= p", "--eps", "p=1")
    assert data["max_worlds"] == 2


def test_run_config_validation():
    with pytest.raises(UsageError):
        RunConfig("classify", max_worlds=0)
    assert RunConfig("classify").max_vars == 12
