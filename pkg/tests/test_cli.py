import json
import random
import shutil
import subprocess
import sys

import pytest

from conftest import EXACT
from thinmod import families as fam
from thinmod import graphs
from thinmod.cli import UsageError, main, resolve_tolerance
from thinmod.kernel import DEFAULT_EPS
from thinmod.params import cube_trivial_array


@pytest.fixture
def write_graph(tmp_path):
    def write(g, name="g.txt"):
        path = tmp_path / name
        path.write_text(graphs.format_graph(g))
        return str(path)
    return write


@pytest.fixture
def write_params(tmp_path):
    def write(pa, name="pa.json"):
        path = tmp_path / name
        path.write_text(pa.to_json())
        return str(path)
    return write


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


def test_cube_report(write_graph, capsys):
    code, rep = run(["analyze-graph", "--input", write_graph(graphs.hypercube(3))], capsys)
    assert code == 0
    assert rep["mode"] == "exact" and rep["fallback"] is None
    trivial = [m for m in rep["modules"] if m["r"] == 0 and m["d"] == 3]
    assert len(trivial) == 1
    pa = trivial[0]["parameter_array"]
    assert pa["theta"] == ["3", "1", "-1", "-3"] and pa["varphi"] == ["-6", "-8", "-6"]
    assert pa["phi"] == ["6", "8", "6"]
    assert trivial[0]["matrix"]["nu"] == "8"
    assert rep["verdict"] == {"passed": True, "failures": []}
    assert rep["families"]["qracah"]["fitted"] is False


def test_path_is_not_distance_regular(write_graph, capsys):
    code, rep = run(["analyze-graph", "--input", write_graph(graphs.path_graph(4))], capsys)
    assert code == 3
    assert "not distance-regular" in rep["error"]


def test_dodecahedron_is_outside_the_class(write_graph, capsys):
    code, rep = run(["analyze-graph", "--input", write_graph(graphs.dodecahedron())], capsys)
    assert code == 4
    assert rep["scheme"]["q_polynomial_orderings"] == []
    assert rep["mode"] == "float" and rep["fallback"]


@pytest.mark.parametrize("g", [graphs.complete_graph(5), graphs.cycle_graph(4), graphs.cycle_graph(8)])
def test_small_diameter_or_valency(g, write_graph, capsys):
    code, rep = run(["analyze-graph", "--input", write_graph(g)], capsys)
    assert code == 4
    assert "at least 3" in rep["error"]


def test_unreadable_inputs(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("3 1\n0 7\n")
    assert main(["analyze-graph", "--input", str(bad)]) == 2
    assert main(["analyze-graph", "--input", str(tmp_path / "missing.txt")]) == 2
    (tmp_path / "bad.json").write_text("{")
    assert main(["analyze-params", "--params", str(tmp_path / "bad.json")]) == 2
    assert "drg:" in capsys.readouterr().err


def test_bad_base_vertex(write_graph, capsys):
    assert main(["analyze-graph", "--input", write_graph(graphs.hypercube(3)), "--base-vertex", "8"]) == 2


def test_zero_tolerance_in_float_mode_fails_loudly(write_graph, capsys, monkeypatch):
    monkeypatch.setenv("DRG_TOL", "0")
    code, rep = run(["analyze-graph", "--input", write_graph(graphs.hypercube(3)), "--mode", "float"], capsys)
    assert code == 5
    assert rep["verdict"]["passed"] is False


def test_tolerance_precedence():
    assert resolve_tolerance(None, {}) == DEFAULT_EPS
    assert resolve_tolerance(None, {"DRG_TOL": "1e-6"}) == 1e-6
    assert resolve_tolerance(1e-4, {"DRG_TOL": "1e-6"}) == 1e-4
    with pytest.raises(UsageError):
        resolve_tolerance(None, {"DRG_TOL": "tight"})
    with pytest.raises(UsageError):
        resolve_tolerance(None, {"DRG_TOL": "-1"})


def test_env_tolerance_reaches_the_report(write_graph, capsys, monkeypatch):
    path = write_graph(graphs.hypercube(3))
    monkeypatch.setenv("DRG_TOL", "1e-7")
    _, rep = run(["analyze-graph", "--input", path, "--mode", "float"], capsys)
    assert rep["eps"] == 1e-7
    _, rep = run(["analyze-graph", "--input", path, "--mode", "float", "--tol", "1e-8"], capsys)
    assert rep["eps"] == 1e-8


def test_out_file_matches_stdout(write_graph, tmp_path, capsys):
    path = write_graph(graphs.johnson(6, 3))
    main(["cross-check", "--input", path])
    printed = capsys.readouterr().out
    target = tmp_path / "report.json"
    assert main(["cross-check", "--input", path, "--out", str(target)]) == 0
    assert capsys.readouterr().out == ""
    assert target.read_text() == printed
    assert "families" not in json.loads(printed)


def test_float_mode_report(write_graph, capsys):
    code, rep = run(["analyze-graph", "--input", write_graph(graphs.hamming(4, 2)), "--mode", "float"], capsys)
    assert code == 0 and rep["mode"] == "float"
    assert all(m["cross_check"]["passed"] for m in rep["modules"] if m["status"] == "analyzed")


def test_analyze_params(write_params, capsys):
    code, rep = run(["analyze-params", "--params", write_params(cube_trivial_array(EXACT))], capsys)
    assert code == 0
    assert rep["formula"]["nu"] == "8"
    assert rep["validation"]["ok"] is True


def test_analyze_params_rejects_invalid_array(write_params, capsys):
    pa = cube_trivial_array(EXACT).with_changes(phi=(6, 8, 7))
    code, rep = run(["analyze-params", "--params", write_params(pa)], capsys)
    assert code == 5
    assert rep["validation"]["ok"] is False


def test_fit_family_on_generated_arrays(write_params, capsys):
    _, pa = fam.random_q_racah(random.Random(11), 4, EXACT)
    code, rep = run(["fit-family", "--params", write_params(pa), "--family", "qracah"], capsys)
    assert code == 0
    assert rep["families"]["qracah"]["fitted"] is not False
    _, _, _, pa = fam.random_classical(random.Random(11), 3, EXACT)
    code, rep = run(["fit-family", "--params", write_params(pa), "--family", "classical"], capsys)
    assert code == 0


def test_fit_family_rejects_cube(write_graph, capsys):
    code, rep = run(["fit-family", "--input", write_graph(graphs.hypercube(3)), "--family", "qracah"], capsys)
    assert code == 5
    assert rep["families"]["qracah"]["fitted"] is False


def test_reports_are_deterministic(write_graph, capsys):
    path = write_graph(graphs.hamming(4, 2))
    outs = []
    for _ in range(2):
        main(["analyze-graph", "--input", path, "--seed", "3"])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]


@pytest.mark.skipif(shutil.which("drg") is None, reason="console script not installed")
def test_console_script(write_graph):
    proc = subprocess.run(["drg", "analyze-graph", "--input", write_graph(graphs.hypercube(3))],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["verdict"]["passed"]


def test_module_entry_point(write_graph):
    proc = subprocess.run([sys.executable, "-m", "thinmod.cli", "analyze-graph", "--input",
                           write_graph(graphs.path_graph(4))], capture_output=True, text=True)
    assert proc.returncode == 3
