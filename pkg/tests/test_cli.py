import json

import numpy as np
import pytest

from bnidentity.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from bnidentity.gof_product import GofConfig

MODEL_P = {
    "nodes": [
        {"name": "A", "arity": 2, "parents": [], "cpt": [[0.3, 0.7]]},
        {"name": "B", "arity": 2, "parents": [0], "cpt": [[0.9, 0.1], [0.2, 0.8]]},
        {"name": "C", "arity": 2, "parents": [1], "cpt": [[0.5, 0.5], [0.4, 0.6]]},
    ]
}


def _model_q():
    doc = json.loads(json.dumps(MODEL_P))
    doc["nodes"][0]["cpt"] = [[0.5, 0.5]]
    doc["nodes"][2]["cpt"] = [[0.1, 0.9], [0.4, 0.6]]
    return doc


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "p.json").write_text(json.dumps(MODEL_P))
    (tmp_path / "q.json").write_text(json.dumps(_model_q()))
    (tmp_path / "tp.txt").write_text("0 1\n1 2\n2 3\n")
    (tmp_path / "tq.txt").write_text("# star\n0 1\n0 2\n0 3\n")
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return [line.split(",") for line in text.strip().splitlines()]


class TestCommands:
    def test_sample_and_divergence(self, workdir, capsys):
        code, out, _ = run(capsys, "sample", "--model", workdir / "p.json", "--count", 5, "--seed", 3)
        assert code == EXIT_OK and out.splitlines()[0] == "A,B,C" and len(out.splitlines()) == 6
        code, out, _ = run(capsys, "divergence", "--p", workdir / "p.json", "--q", workdir / "q.json")
        table = dict(rows(out)[1:])
        assert code == EXIT_OK and set(table) == {"HellingerSq", "TV", "KL", "ChiSq"}
        assert float(table["TV"]) == pytest.approx(0.31)

    def test_divergence_vectors(self, workdir, capsys):
        (workdir / "a.txt").write_text("0.5\n0.5\n")
        (workdir / "b.txt").write_text("0.3 0.7\n")
        _, out, _ = run(capsys, "divergence", "--p", workdir / "a.txt", "--q", workdir / "b.txt")
        assert float(dict(rows(out)[1:])["HellingerSq"]) == pytest.approx(0.021093687069296707)

    def test_verify_subadditivity(self, workdir, capsys):
        code, out, _ = run(capsys, "verify-subadditivity", "--model-p", workdir / "p.json", "--model-q", workdir / "q.json")
        table = {r[0]: r for r in rows(out)[1:] if r[0] != "term"}
        assert code == EXIT_OK and float(table["slack"][-1]) >= 0

    def test_verify_with_partition(self, workdir, capsys):
        (workdir / "part.json").write_text(json.dumps({"blocks": [{"members": [0, 1]}, {"members": [2], "conditioning": [1]}]}))
        code, out, _ = run(
            capsys, "verify-subadditivity", "--model-p", workdir / "p.json",
            "--model-q", workdir / "q.json", "--partition", workdir / "part.json",
        )
        assert code == EXIT_OK and sum(r[0] == "term" for r in rows(out)) == 2

    def test_order_trees(self, workdir, capsys):
        code, out, _ = run(capsys, "order-trees", "--tree-p", workdir / "tp.txt", "--tree-q", workdir / "tq.txt", "--check")
        table = rows(out)
        assert code == EXIT_OK and table[0][:2] == ["position", "node"] and len(table) == 5
        assert max(int(r[-1]) for r in table[1:]) <= 5

    def test_testers_and_subtest(self, workdir, capsys):
        run(capsys, "sample", "--model", workdir / "p.json", "--count", 3000, "--seed", 1, "--out", workdir / "ps.csv")
        run(capsys, "sample", "--model", workdir / "q.json", "--count", 3000, "--seed", 2, "--out", workdir / "qs.csv")
        common = ["--p-samples", workdir / "ps.csv", "--q-samples", workdir / "qs.csv", "--eps", 0.3, "--budget", 3000]
        code, out, _ = run(capsys, "test-known", "--dag", workdir / "p.json", *common)
        summary = rows(out)[-1]
        assert code == EXIT_OK and summary[0] == "summary" and summary[6] == "Far"
        code, out, _ = run(capsys, "test-unknown", "--max-indegree", 1, *common)
        assert code == EXIT_OK and len(rows(out)) == 1 + 3 + 1
        code, out, _ = run(capsys, "test-trees", *common)
        assert code == EXIT_OK and len(rows(out)) == 1 + 7 + 1
        code, out, _ = run(capsys, "subtest", "--a", workdir / "ps.csv", "--b", workdir / "qs.csv", "--eps", 0.2, "--budget", 3000)
        assert code == EXIT_OK and rows(out)[1][0] == "Far"

    def test_undersampled_warning_on_stderr(self, workdir, capsys):
        run(capsys, "sample", "--model", workdir / "p.json", "--count", 50, "--out", workdir / "s.csv")
        code, _, err = run(capsys, "subtest", "--a", workdir / "s.csv", "--b", workdir / "s.csv", "--eps", 0.2)
        assert code == EXIT_OK and err.startswith("warning:")

    def test_gof_product(self, workdir, capsys):
        n, rng = 8, np.random.default_rng(0)
        (workdir / "q.txt").write_text("\n".join(["0.5"] * n))
        rows_needed = GofConfig(eps=0.5).rows_needed(n)
        data = (rng.random((rows_needed, n)) < 0.5).astype(int)
        header = ",".join(f"X{i}" for i in range(n))
        np.savetxt(workdir / "g.csv", data, fmt="%d", delimiter=",", header=header, comments="")
        code, out, _ = run(capsys, "gof-product", "--q", workdir / "q.txt", "--p-samples", workdir / "g.csv", "--eps", 0.5, "--mode", "chebyshev")
        assert code == EXIT_OK and rows(out)[1][-1] == "chebyshev"

    def test_experiment(self, workdir, capsys):
        cfg = {"scenario": "size", "generator": {"family": "chain", "n": 3}, "tester": "known", "eps": 0.3, "samples": 400}
        (workdir / "exp.json").write_text(json.dumps(cfg))
        code, out, _ = run(capsys, "experiment", "--config", workdir / "exp.json", "--trials", 2, "--seed", 4)
        assert code == EXIT_OK and rows(out)[-1][0] == "summary" and len(rows(out)) == 4


class TestExitCodes:
    def test_usage(self, capsys):
        assert run(capsys, "nope")[0] == EXIT_USAGE
        assert run(capsys, "divergence", "--p", "x")[0] == EXIT_USAGE

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "divergence", "--p", tmp_path / "nope.json", "--q", tmp_path / "nope.json")
        assert code == EXIT_DATA and "nope.json" in err

    def test_invalid_model(self, capsys, tmp_path):
        bad = {"nodes": [{"name": "A", "arity": 2, "parents": [], "cpt": [[0.3, 0.3]]}]}
        (tmp_path / "bad.json").write_text(json.dumps(bad))
        code, _, _ = run(capsys, "sample", "--model", tmp_path / "bad.json", "--count", 3)
        assert code == EXIT_DATA

    def test_bad_tree(self, capsys, tmp_path):
        (tmp_path / "t.txt").write_text("0 1\n1 2 3\n")
        assert run(capsys, "order-trees", "--tree-p", tmp_path / "t.txt", "--tree-q", tmp_path / "t.txt")[0] == EXIT_DATA

    def test_experiment_unknown_key(self, capsys, tmp_path):
        (tmp_path / "e.json").write_text('{"scenario": "size", "bogus": 1}')
        assert run(capsys, "experiment", "--config", tmp_path / "e.json")[0] == EXIT_DATA
