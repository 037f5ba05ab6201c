import csv
import io
import json

import pytest

from sparsecount.cli import main
from sparsecount.generators import family
from sparsecount.oracle import evaluate_formula
from sparsecount.parser import parse_query

K3 = "v 0\nv 1\nv 2\ne 0 1\ne 1 2\ne 0 2\n"
STAR = "v 0\nv 1\nv 2\nv 3\nv 4\ne 0 1\ne 0 2\ne 0 3\ne 0 4\n"
P4 = "v 0\nv 1\nv 2\nv 3\ne 0 1\ne 1 2\ne 2 3\n"


@pytest.fixture
def graph(tmp_path):
    def write(text, name="g.txt"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_check_k3(graph, capsys):
    code, out, _ = run(capsys, "check", graph(K3), "exists x. # y. E(x,y) > 1", "--epsilon", "0.5")
    assert code == 0 and out.strip() == "1"


def test_check_empty_label(graph, capsys):
    code, out, err = run(capsys, "check", graph(K3), "#x P(x) > 0")
    assert code == 1 and out.strip() == "0"


def test_check_malformed_query(graph, capsys):
    code, _, err = run(capsys, "check", graph(K3), "exists x. (P(x)")
    assert code == 64 and "error" in err


def test_check_json_schema(graph, capsys):
    code, out, _ = run(capsys, "check", graph(K3), "# x. (# y. E(x,y) > 1) > 2", "--format", "json",
                       "--epsilon", "1/10")
    rec = json.loads(out)
    assert code == 0
    assert set(rec) == {"answer", "epsilon", "rounds", "wall_time_ms"}
    assert rec["answer"] == "1" and rec["epsilon"] == "1/10"


def test_check_query_file(graph, capsys, tmp_path):
    q = tmp_path / "q.txt"
    q.write_text("forall x. exists y. E(x,y)")
    code, out, _ = run(capsys, "check", graph(K3), "-f", str(q))
    assert code == 0 and out.strip() == "1"


def test_bad_graph_file(graph, capsys):
    code, _, err = run(capsys, "check", graph("v 0\ne 0 3\n"), "exists x. P(x)")
    assert code == 64 and "line 2" in err


def test_missing_graph_file(capsys):
    code, _, _ = run(capsys, "check", "/nonexistent/graph.txt", "exists x. P(x)")
    assert code == 64


def test_bad_epsilon(graph, capsys):
    code, _, _ = run(capsys, "check", graph(K3), "exists x. P(x)", "--epsilon", "-1")
    assert code == 64


def test_pds_star_json(graph, capsys):
    code, out, _ = run(capsys, "pds", graph(STAR), "--k", "1", "--format", "json")
    rec = json.loads(out)
    assert code == 0 and rec["tuple"] == [0] and rec["value"] == 5


def test_pds_path(graph, capsys):
    code, out, _ = run(capsys, "pds", graph(P4), "--k", "1", "--format", "json")
    assert json.loads(out)["value"] == 3


def test_pds_threshold(graph, capsys):
    code, out, _ = run(capsys, "pds", graph(K3), "--k", "2", "--threshold", "2")
    assert code == 0 and out.strip() == "yes"


def test_pds_k_too_large(graph, capsys):
    code, _, _ = run(capsys, "pds", graph(K3), "--k", "5")
    assert code == 65


def test_count_all_tuples(graph, capsys):
    code, out, _ = run(capsys, "count", graph(P4), "E(x,y)", "--format", "json")
    rec = json.loads(out)
    assert rec["variables"] == ["x"]
    assert [r["count"] for r in rec["rows"]] == [1, 2, 2, 1]


def test_count_single_tuple(graph, capsys):
    code, out, _ = run(capsys, "count", graph(P4), "E(x,y) | x = y", "--tuple", "1")
    assert code == 0 and out.strip() == "1\t3"


def test_count_bad_tuple(graph, capsys):
    code, _, _ = run(capsys, "count", graph(P4), "E(x,y)", "--tuple", "9")
    assert code == 64


def test_optimize_min(graph, capsys):
    text = "v 0\nv 1\nv 2\nv 3\ne 0 1\ne 1 2\n"
    code, out, _ = run(capsys, "optimize", graph(text), "E(x,y)", "--mode", "min", "--format", "json")
    rec = json.loads(out)
    assert rec["tuple"] == [3] and rec["value"] == 0


def test_oracle_eval_and_witness(graph, capsys):
    labelled = "".join(f"v {i}{' P' if i < 6 else ''}\n" for i in range(8))
    code, out, _ = run(capsys, "oracle", "eval", graph(labelled), "# y. P(y) > 5")
    assert code == 0 and out.strip() == "1"
    code, out, _ = run(capsys, "oracle", "witness", graph(labelled), "# y. P(y) > 5",
                       "--epsilon", "0.2", "--format", "json")
    rec = json.loads(out)
    assert rec["unstable"] is True


def test_oracle_budget(graph, capsys):
    code, _, _ = run(capsys, "oracle", "witness", graph(K3), "# y. (# z. E(y,z) > 500) > 500",
                     "--epsilon", "1", "--oracle-cap", "10")
    assert code == 65


def test_augment_stats(graph, capsys):
    code, out, _ = run(capsys, "augment", graph(P4), "--rounds", "2", "--format", "json")
    rec = json.loads(out)
    assert code == 0 and len(rec["rounds"]) == 2
    assert rec["indegree"] == 1


def _bench(capsys, *extra):
    code, out, _ = run(capsys, "bench", *extra)
    assert code == 0
    return list(csv.reader(io.StringIO(out)))


HEADER = ["family", "n", "m", "wall_time_ms", "answer", "max_indegree", "predicates_added"]


def test_bench_empty_sizes(capsys):
    assert _bench(capsys, "--sizes", "") == [HEADER]


def test_bench_tree_single_vertex(capsys):
    q = "# x. (# y. E(x,y) > 2) > 100"
    rows = _bench(capsys, "--family", "tree", "--sizes", "1", "--query", q)
    assert rows[0] == HEADER and len(rows) == 2
    truth = evaluate_formula(parse_query(q), family("tree", 1, 0), {})
    assert rows[1][4] == str(int(truth))


def test_bench_deterministic(capsys):
    args = ("--family", "bounded-degree-random", "--sizes", "30,60", "--seed", "3")
    a = _bench(capsys, *args)
    b = _bench(capsys, *args)
    strip = lambda rows: [r[:3] + r[4:] for r in rows]
    assert strip(a) == strip(b) and len(a) == 3


def test_bench_grid_rows(capsys):
    rows = _bench(capsys, "--family", "grid", "--sizes", "1024,4096")
    assert [r[1] for r in rows[1:]] == ["1024", "4096"]


def test_usage_error(capsys):
    assert run(capsys, "frobnicate")[0] == 64
