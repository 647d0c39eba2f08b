import csv
import io
import json

import pytest

from bmp.cli import main
from bmp.oracle import ExhaustiveScorer
from bmp.storage import ingest_collection, read_queries, write_run


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def kv(out):
    return dict(line.split("=", 1) for line in out.splitlines() if "=" in line)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--docs", "600", "--vocab", "300", "--avg-terms", "15", "--queries", "25",
                 "--topics", "4", "--seed", "3", "--out-docs", str(d / "docs.jsonl"),
                 "--out-queries", str(d / "queries.jsonl")]) == 0
    for mode in ("raw", "compressed"):
        assert main(["index", "--input", str(d / "docs.jsonl"), "--output", str(d / f"{mode}.bmp"),
                     "--block-size", "16", "--bm-mode", mode]) == 0
    return d


def search(capsys, ws, index="compressed.bmp", k=10, *extra):
    out = ws / f"run_{index}_{k}_{len(extra)}"
    code, _, err = run(capsys, "search", "--index", ws / index, "--queries", ws / "queries.jsonl",
                       "--k", k, "--output", out, *extra)
    assert code == 0, err
    return out.read_text()


class TestIndex:
    def test_two_docs(self, tmp_path, capsys):
        (tmp_path / "d").write_text('{"a": {"x": 1}}\n{"b": {"x": 2, "y": 1}}\n')
        code, out, _ = run(capsys, "index", "--input", tmp_path / "d", "--output", tmp_path / "o",
                           "--block-size", 8, "--bm-mode", "raw")
        assert code == 0
        info = kv(out)
        assert info["num_blocks"] == "1" and info["n"] == "2" and info["V"] == "2"
        assert info["section.block-max"] == "2"

    def test_missing_input(self, tmp_path, capsys):
        code, _, err = run(capsys, "index", "--input", tmp_path / "nope", "--output", tmp_path / "o")
        assert code != 0 and "file not found" in err

    def test_unsupported_block_size(self, tmp_path, capsys):
        (tmp_path / "d").write_text('{"a": {"x": 1}}\n')
        code, _, err = run(capsys, "index", "--input", tmp_path / "d", "--output", tmp_path / "o",
                           "--block-size", 24)
        assert code == 1 and "unsupported block size" in err

    def test_malformed_input(self, tmp_path, capsys):
        (tmp_path / "d").write_text('{"a": {"x": 1}}\n{oops\n')
        code, _, err = run(capsys, "index", "--input", tmp_path / "d", "--output", tmp_path / "o")
        assert code == 2 and "line 2" in err


class TestSearch:
    def test_matches_oracle_run(self, workspace, capsys):
        ws = workspace
        manifest, docs = ingest_collection(ws / "docs.jsonl")
        scorer = ExhaustiveScorer(docs)
        expected = io.StringIO()
        for qid, q in read_queries(ws / "queries.jsonl", manifest):
            write_run(expected, qid, scorer.topk(q, 10), manifest.doc_names)
        assert search(capsys, ws, "compressed.bmp", 10, "--alpha", "1", "--beta", "1") == expected.getvalue()

    def test_prefix(self, workspace, capsys):
        small, large = search(capsys, workspace, k=10), search(capsys, workspace, k=100)
        by_q = {}
        for line in large.splitlines():
            by_q.setdefault(line.split()[0], []).append(line)
        for qid, lines in by_q.items():
            head = [l for l in small.splitlines() if l.split()[0] == qid]
            assert head == lines[: len(head)]

    def test_bm_mode_invariance(self, workspace, capsys):
        assert search(capsys, workspace, "raw.bmp") == search(capsys, workspace, "compressed.bmp")

    def test_deterministic(self, workspace, capsys):
        a = search(capsys, workspace, "compressed.bmp", 10, "--alpha", "0.7")
        b = search(capsys, workspace, "compressed.bmp", 10, "--alpha", "0.7")
        assert a == b

    def test_empty_queries(self, workspace, tmp_path, capsys):
        (tmp_path / "q").write_text("")
        code, _, _ = run(capsys, "search", "--index", workspace / "raw.bmp", "--queries", tmp_path / "q",
                         "--output", tmp_path / "run")
        assert code == 0 and (tmp_path / "run").read_text() == ""

    @pytest.mark.parametrize("flag,value", [("--alpha", "0"), ("--alpha", "1.5"), ("--beta", "0"),
                                            ("--k", "0")])
    def test_out_of_range(self, workspace, capsys, flag, value):
        code, _, _ = run(capsys, "search", "--index", workspace / "raw.bmp", "--queries",
                         workspace / "queries.jsonl", flag, value)
        assert code == 1

    def test_bad_index(self, workspace, tmp_path, capsys):
        (tmp_path / "bad").write_bytes(b"XXXX" + bytes(64))
        code, _, err = run(capsys, "search", "--index", tmp_path / "bad", "--queries",
                           workspace / "queries.jsonl")
        assert code == 2 and "magic" in err


class TestBench:
    def test_csv(self, workspace, tmp_path, capsys):
        code, _, _ = run(capsys, "bench", "--index", workspace / "raw.bmp", "--queries",
                         workspace / "queries.jsonl", "--alpha", "0.75,1", "--beta", "1",
                         "--warmup", 0, "--runs", 3, "--output", tmp_path / "b.csv")
        assert code == 0
        rows = list(csv.DictReader((tmp_path / "b.csv").open()))
        assert len(rows) == 2
        assert all(r["runs"] == "3" and r["queries"] == "25" for r in rows)
        safe = rows[1]
        assert float(safe["mean_overlap"]) == 1.0
        assert 0 < float(safe["evaluated_block_fraction"]) <= 1

    def test_nonexistent_index(self, workspace, tmp_path, capsys):
        code, _, _ = run(capsys, "bench", "--index", tmp_path / "none", "--queries",
                         workspace / "queries.jsonl")
        assert code != 0

    def test_zero_runs(self, workspace, capsys):
        code, _, _ = run(capsys, "bench", "--index", workspace / "raw.bmp", "--queries",
                         workspace / "queries.jsonl", "--runs", 0)
        assert code == 1


class TestEval:
    @pytest.fixture
    def qrels(self, tmp_path):
        p = tmp_path / "qrels"
        p.write_text("q1 0 a 1\nq2 0 d 1\n")
        return p

    def evaluate(self, capsys, tmp_path, qrels, run_text):
        (tmp_path / "run").write_text(run_text)
        code, out, err = run(capsys, "eval", "--run", tmp_path / "run", "--qrels", qrels, "--k", 10)
        return code, kv(out), err

    def test_all_first(self, capsys, tmp_path, qrels):
        code, out, _ = self.evaluate(capsys, tmp_path, qrels, "q1 Q0 a 1 9 t\nq2 Q0 d 1 9 t\n")
        assert code == 0 and float(out["RR@10"]) == 1.0

    def test_none_relevant(self, capsys, tmp_path, qrels):
        _, out, _ = self.evaluate(capsys, tmp_path, qrels, "q1 Q0 x 1 9 t\nq2 Q0 y 1 9 t\n")
        assert float(out["RR@10"]) == 0.0

    def test_mixed(self, capsys, tmp_path, qrels):
        _, out, _ = self.evaluate(capsys, tmp_path, qrels, "q1 Q0 a 1 9 t\nq2 Q0 x 1 9 t\nq2 Q0 d 2 8 t\n")
        assert float(out["RR@10"]) == pytest.approx(0.75) and out["queries"] == "2"

    def test_malformed_qrels(self, capsys, tmp_path):
        p = tmp_path / "qrels"
        p.write_text("q1 0 a 1\nq1 0 a\n")
        code, _, err = self.evaluate(capsys, tmp_path, p, "q1 Q0 a 1 9 t\n")
        assert code == 2 and "line 2" in err


class TestCompare:
    def test_no_mismatches(self, workspace, capsys):
        code, out, _ = run(capsys, "compare", "--index", workspace / "compressed.bmp", "--queries",
                           workspace / "queries.jsonl", "--k", 50)
        assert code == 0 and "mismatches=0" in out

    def test_with_documents(self, workspace, capsys):
        code, out, _ = run(capsys, "compare", "--index", workspace / "raw.bmp", "--queries",
                           workspace / "queries.jsonl", "--documents", workspace / "docs.jsonl")
        assert code == 0 and "queries=25" in out


def test_synth_is_seeded(tmp_path, capsys):
    outs = []
    for i in range(2):
        run(capsys, "synth", "--docs", 50, "--vocab", 40, "--queries", 5, "--seed", 9,
            "--out-docs", tmp_path / f"d{i}", "--out-queries", tmp_path / f"q{i}")
        outs.append((tmp_path / f"d{i}").read_text())
    assert outs[0] == outs[1]
    assert len(outs[0].splitlines()) == 50
    json.loads(outs[0].splitlines()[0])


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as e:
        main(["search"])
    assert e.value.code == 1
