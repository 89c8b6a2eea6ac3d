import pytest

from sahlkit.corpus import CorpusError, default_corpus_text, load_corpus, parse_eps, parse_omega, read_corpus, run

SMALL = """
# comment line
em ; intuitionistic ; top <= p \\/ (p -> bot) ; sahlqvist p=1 ; correspond p=1 worlds=2 ; transfer p=1
refl ; classical-modal ; box_o p <= p ; correspond worlds=2
r1 ; bi-intuitionistic ; r >- (q >- p) <= (p \\/ q) >- p ; not-inductive ; no-correspondent
"""


def test_parse_order_types_and_orders():
    assert parse_eps("p=1, q=d, r=∂, s=D") == {"p": "1", "q": "d", "r": "d", "s": "d"}
    assert parse_omega("r<p,p<q") == (("r", "p"), ("p", "q"))
    with pytest.raises(CorpusError):
        parse_eps("p=2")
    with pytest.raises(CorpusError):
        parse_eps("p")
    with pytest.raises(CorpusError):
        parse_omega("p>q")


@pytest.mark.parametrize("text", [
    "only ; two",
    "x ; nosuch ; p <= p",
    "x ; intuitionistic ; p <= ; sahlqvist p=1",
    "x ; intuitionistic ; p <= p ; frobnicate",
    "x ; intuitionistic ; p <= p ; sahlqvist",
])
def test_malformed_lines(text):
    with pytest.raises(CorpusError, match="line 1"):
        read_corpus(text)


def test_small_corpus_runs_green():
    outcomes = run(read_corpus(SMALL), max_worlds=2)
    assert [o.ok for o in outcomes] == [True] * 6
    rows = [o.row() for o in outcomes]
    assert rows[0]["id"] == "em: sahlqvist"
    assert set(rows[0]) == {"id", "entry", "signature", "inequality", "check", "ok", "seconds", "detail"}


def test_wrong_expectations_are_reported():
    text = ("bad ; intuitionistic ; top <= p \\/ (p -> bot) ; not-sahlqvist ; no-correspondent ; "
            "inductive-only p=1 omega=\n"
            "bad2 ; bi-intuitionistic ; r >- (q >- p) <= (p \\/ q) >- p ; correspond")
    outcomes = run(read_corpus(text), max_worlds=2)
    assert [o.ok for o in outcomes] == [False] * 4


def test_parallel_run_keeps_order():
    entries = read_corpus(SMALL)
    serial = [(o.row()["id"], o.ok) for o in run(entries, 2)]
    parallel = [(o.row()["id"], o.ok) for o in run(entries, 2, jobs=2)]
    assert serial == parallel


def test_bundled_corpus_covers_the_worked_examples():
    entries = load_corpus()
    ids = {e.id for e in entries}
    assert {"frege", "rauszer-1", "rauszer-2", "fischer-servi-1", "fischer-servi-2", "dunn-1", "dunn-2",
            "interior-demo", "unprefixed-box-dia", "reflexivity", "symmetry"} <= ids
    assert default_corpus_text().startswith("#")
    correspond = [x for e in entries for x in e.expectations if x.kind == "correspond"]
    assert len(correspond) >= 10


def test_load_from_path(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text(SMALL, encoding="utf-8")
    assert len(load_corpus(path)) == 3
    with pytest.raises(CorpusError):
        run(load_corpus(path), max_worlds=0)
