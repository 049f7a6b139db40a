import json

import pytest

from cli import EXIT_BUDGET, EXIT_OK, EXIT_USAGE, main


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def _json(capsys, *argv):
    code, out = _run(capsys, *argv)
    return code, json.loads(out)


def test_no_command_is_a_usage_error(capsys):
    assert main([]) == EXIT_USAGE


def test_jordan_diagonal(capsys):
    code, doc = _json(capsys, "jordan", "--p", "3", "--matrix", "1,p,p^3")
    assert code == EXIT_OK
    assert doc["schema"] == "v1"
    assert doc["profile"] == {"0": 1, "1": 1, "3": 1}
    assert doc["det_valuation"] == 4
    assert doc["decomposition_checked"] is True
    assert doc["invariants"]["t0"] == 1


def test_jordan_json_file_with_scaling(capsys, tmp_path):
    path = tmp_path / "T.json"
    path.write_text(json.dumps({"p": 3, "scale": -1, "entries": [[1, 0], [0, 9]]}), encoding="utf-8")
    code, doc = _json(capsys, "jordan", "--matrix", str(path), "--scaled", "1,1")
    assert code == EXIT_OK
    assert doc["profile"] == {"-1": 1, "1": 1}
    assert doc["scaled"]["empty"] is False
    assert doc["scaled"]["profile"] == {"0": 1, "2": 1}


def test_jordan_bad_entry(capsys):
    assert main(["jordan", "--matrix", "1,0"]) == EXIT_USAGE


def test_strata_with_graph(capsys, tmp_path):
    dot = tmp_path / "grd.dot"
    code, doc = _json(capsys, "strata", "--exponents", "0,1,1,1", "--graph", str(dot))
    assert code == EXIT_OK
    report = doc["report"]
    assert report["status"] == "PASS"
    assert report["t0"] == 3
    assert report["maximal_vertex_count"] == 1
    assert report["grd_size"] == 29
    assert dot.read_text(encoding="utf-8").startswith("digraph GrD {")


def test_density_brute_and_closed(capsys):
    code, doc = _json(capsys, "density", "--S", "1,1", "--T", "1,1")
    assert code == EXIT_OK
    assert doc["closed_form"] == "32/27"
    assert doc["density"] == "32/27"
    assert doc["count"] == 96
    assert doc["k"] == 1


def test_density_below_stable_level(capsys):
    code, doc = _json(capsys, "density", "--S", "1", "--T", "p", "--k", "1", "--brute")
    assert code == EXIT_OK
    assert doc["unstable"] is True
    assert doc["density"] == "1/3"


def test_density_budget_exit_code(capsys):
    assert main(["density", "--S", "1,1", "--T", "1,1", "--brute", "--budget", "10"]) == EXIT_BUDGET


def test_intersect(capsys):
    code, doc = _json(capsys, "intersect", "--a", "1", "--b", "2")
    assert code == EXIT_OK
    assert doc["all_equal"] is True
    assert doc["total"] == 5
    assert doc["density_ratio"] == 5
    assert doc["per_stratum"] == {"0": 1, "2": 4}


def test_intersect_from_matrix(capsys):
    code, doc = _json(capsys, "intersect", "--T", "1,p^2,p^3")
    assert code == EXIT_OK
    assert doc["n"] == 3
    assert doc["total"] == 18


def test_intersect_parity(capsys):
    assert main(["intersect", "--a", "1", "--b", "1"]) == EXIT_USAGE


def test_display_sim(capsys, tmp_path):
    dump = tmp_path / "steps.json"
    code, doc = _json(capsys, "display-sim", "--v", "2", "--dump-steps", str(dump))
    assert code == EXIT_OK
    assert doc["obstruction_exponent"] == 13
    assert doc["parity_pattern"] is True
    steps = json.loads(dump.read_text(encoding="utf-8"))
    assert len(steps["steps"]) == 6


def test_display_sim_truncation(capsys):
    assert main(["display-sim", "--v", "2", "--steps", "1"]) == EXIT_BUDGET


def test_e_s_table(capsys):
    code, out = _run(capsys, "table", "--kind", "e_s", "--format", "csv")
    assert code == EXIT_OK
    assert out == "s,e_s\n0,1\n1,4\n2,12\n3,36\n4,108\n"


def test_main_identity_table(capsys, tmp_path):
    out = tmp_path / "main.csv"
    code, _ = _run(capsys, "table", "--kind", "main-identity", "--max-ab", "3", "--format", "csv",
                   "--out", str(out))
    assert code == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "p,a,b,length_formula,ledger_total,density_ratio,agree"
    assert "3,0,1,1,1,1,true" in lines
    assert "3,1,2,5,5,5,true" in lines
    assert "3,0,3,2,2,2,true" in lines
    assert "3,2,3,18,18,18,true" in lines


def test_markdown_table(capsys):
    code, out = _run(capsys, "table", "--kind", "e_s", "--s-max", "1", "--format", "markdown")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "| s | e_s |"
    assert out.splitlines()[-1] == "| 1 | 4 |"


def test_density_table(capsys):
    code, out = _run(capsys, "density-table", "--max-ab", "2", "--format", "csv")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "p,a,b,polynomial,alpha_prime,normalized,length_formula"


@pytest.mark.parametrize("suite", ["lifting", "display"])
def test_verify_suites(capsys, suite):
    code, doc = _json(capsys, "verify", "--suite", suite)
    assert code == EXIT_OK
    assert doc["summary"]["FAIL"] == 0
    assert doc["summary"]["PASS"] > 0


@pytest.mark.parametrize(
    "argv",
    [
        ("density-table", "--max-ab", "3", "--format", "json"),
        ("density", "--S", "1,1", "--T", "1,1", "--k", "2", "--method", "columns"),
        ("density", "--S", "1,1,1", "--T", "1,1"),
        ("strata", "--exponents", "0,1,1,1"),
    ],
)
def test_output_does_not_depend_on_threads(capsys, argv):
    outputs = []
    for threads in ("1", "4", "8"):
        code, out = _run(capsys, *argv, "--threads", threads)
        assert code == EXIT_OK
        outputs.append(out)
    assert outputs[0] == outputs[1] == outputs[2]


def test_verify_lifting_follows_the_prime(capsys):
    code, doc = _json(capsys, "verify", "--suite", "lifting", "--p", "11")
    assert code == EXIT_OK
    assert "onestep p=11" in [r["name"] for r in doc["results"]]
    code, doc = _json(capsys, "verify", "--suite", "lifting", "--primes", "5")
    assert code == EXIT_OK
    assert [r["name"] for r in doc["results"] if r["name"].startswith("onestep")] == ["onestep p=5"]


def test_verify_rejects_bad_primes(capsys):
    assert main(["verify", "--suite", "lifting", "--primes", "4"]) == EXIT_USAGE


@pytest.mark.slow
def test_verify_everything(capsys):
    code, doc = _json(capsys, "verify", "--suite", "all", "--threads", "4")
    assert code == EXIT_OK
    assert doc["summary"]["FAIL"] == 0
