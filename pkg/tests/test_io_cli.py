import json
import shutil
import subprocess
from fractions import Fraction

import numpy as np
import pytest

from specwass import cli, io
from specwass.core import Distribution, FiniteMetricSpace, Point, build_grid_circle, build_grid_line, build_two_sheet
from specwass.errors import ParameterError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def line_files(tmp_path):
    sp = build_grid_line(3, 0, 2)
    io.save_space(sp, tmp_path / "line.json")
    (tmp_path / "mu.json").write_text(json.dumps({"space": "line.json", "weights": [1, 0, 0]}))
    (tmp_path / "nu.json").write_text(json.dumps({"space": "line.json", "weights": [0, "1/2", "1/2"]}))
    return tmp_path


def test_space_roundtrip(tmp_path):
    for sp in (build_grid_line(5, -1, 1), build_grid_circle(6)):
        io.save_space(sp, tmp_path / "s.json")
        back = io.load_space(tmp_path / "s.json")
        assert back.ids == sp.ids
        assert np.array_equal(back.dist, sp.dist)
    exact = FiniteMetricSpace([Point("a"), Point("b")], np.array([[Fraction(0), Fraction(1, 3)], [Fraction(1, 3), Fraction(0)]], dtype=object))
    io.save_space(exact, tmp_path / "e.json")
    assert io.load_space(tmp_path / "e.json").dist[0, 1] == Fraction(1, 3)


def test_twosheet_roundtrip(tmp_path):
    ts = build_two_sheet(build_grid_line(4, 0, 1), 2.0, 5, higgs=[1, 2, 3, 4])
    io.save_space(ts, tmp_path / "t.json")
    back = io.load_space(tmp_path / "t.json")
    assert back.n == ts.n
    assert back.distance(0, ts.n - 1) == ts.distance(0, ts.n - 1)


def test_euclidean_space_file(tmp_path):
    obj = {"metric": "euclidean", "points": [{"id": "a", "coords": [0, 0]}, {"id": "b", "coords": [3, 4]}]}
    assert io.space_from_dict(obj).dist[0, 1] == 5
    with pytest.raises(ParameterError):
        io.space_from_dict({"metric": "euclidean", "points": [{"id": "a"}]})
    with pytest.raises(ParameterError):
        io.space_from_dict({"metric": "hyperbolic", "points": []})


def test_distribution_roundtrip(line_files):
    nu = io.load_distribution(line_files / "nu.json")
    assert nu.exact and nu.weights[1] == Fraction(1, 2)
    io.save_distribution(nu, line_files / "nu2.json", "line.json")
    again = io.load_distribution(line_files / "nu2.json")
    assert list(again.weights) == list(nu.weights)


def test_higgs_csv_and_bloch(tmp_path):
    base = build_grid_line(3, 0, 1)
    (tmp_path / "h.csv").write_text("point_id,value\nx0,1.0\nx1,1.5\nx2,2\n")
    assert io.load_higgs_csv(tmp_path / "h.csv", base).tolist() == [1.0, 1.5, 2.0]
    (tmp_path / "bad.csv").write_text("x0,1\n")
    with pytest.raises(ParameterError):
        io.load_higgs_csv(tmp_path / "bad.csv", base)
    (tmp_path / "b.json").write_text(json.dumps([[0, 0, 1], {"x": 0.5, "y": 0, "z": 0}]))
    assert io.load_bloch(tmp_path / "b.json")[1].x == 0.5


def test_cli_dist_methods(capsys, line_files):
    sp, mu, nu = (str(line_files / f) for f in ("line.json", "mu.json", "nu.json"))
    code, out, _ = run(capsys, "dist", "primal", "--mu", mu, "--nu", nu)
    assert code == 0 and json.loads(out)["value"] == "3/2"
    code, out, _ = run(capsys, "dist", "both", "--mu", mu, "--nu", nu, "--exact")
    rep = json.loads(out)
    assert rep["value"] == "3/2" and rep["certificate"]["gap"] == 0
    code, out, _ = run(capsys, "dist", "dual", "--space", sp, "--mu", mu, "--nu", nu, "--exact")
    assert json.loads(out)["certificate"]["potential"] == [0, -1, -2]
    code, out, _ = run(capsys, "dist", "closed1d", "--mu", mu, "--nu", nu)
    assert json.loads(out)["value"] == "3/2"
    code, out, _ = run(capsys, "dist", "expect", "--mu", nu, "--x", "x0")
    assert json.loads(out)["value"] == "3/2"
    code, out, _ = run(capsys, "dist", "bounds", "--mu", mu, "--nu", nu)
    rep = json.loads(out)
    assert rep["lower"] <= 1.5 <= float(Fraction(rep["upper"]))
    code, out, _ = run(capsys, "dist", "jump", "--mu", mu, "--nu", mu, "--norm-di", "1")
    assert json.loads(out)["value"] == pytest.approx(1.0)


def test_cli_closed_form_methods(capsys):
    code, out, _ = run(capsys, "dist", "wavepacket", "--x", "0", "--y", "1", "--sigma", "1", "--sigma-p", "1")
    rep = json.loads(out)
    assert code == 0 and rep["value"] == 1.0 and rep["certificate"]["potential"]["kind"] == "affine"
    code, out, _ = run(capsys, "dist", "moyal", "--a=-0.5,0,0", "--b", "0.5,0,0", "--theta", "2")
    assert json.loads(out)["value"] == pytest.approx(1.0)
    code, out, _ = run(capsys, "dist", "equator", "--theta1", "3.141592653589793", "--dD", "2")
    assert json.loads(out)["value"] == pytest.approx(1.0)


def test_cli_space_commands(capsys, tmp_path):
    out_file = tmp_path / "l.json"
    code, out, _ = run(capsys, "space", "gen-line", "--n", "4", "-o", str(out_file))
    assert code == 0 and json.loads(out)["valid"] is True
    code, out, _ = run(capsys, "space", "validate", str(out_file))
    assert code == 0
    code, out, _ = run(capsys, "space", "gen-twosheet", "--base", str(out_file), "--norm-di", "2", "--fiber", "5")
    assert code == 0 and json.loads(out)["jump_distance"] == 0.5
    bad = {"points": [{"id": "a"}, {"id": "b"}], "metric": "explicit", "matrix": [[0, 1], [2, 0]]}
    (tmp_path / "bad.json").write_text(json.dumps(bad))
    code, out, _ = run(capsys, "space", "validate", str(tmp_path / "bad.json"))
    rep = json.loads(out)
    assert code == 1 and rep["valid"] is False
    assert any(v["axiom"] == "symmetry" for v in rep["violations"])


def test_cli_exit_codes(capsys, tmp_path, line_files):
    with pytest.raises(SystemExit) as exc:
        cli.main(["dist", "nonsense"])
    assert exc.value.code == 2
    capsys.readouterr()
    code, _, err = run(capsys, "dist", "primal", "--mu", str(line_files / "mu.json"))
    assert code == 2 and "usage" in err
    code, _, err = run(capsys, "dist", "jump", "--mu", str(line_files / "mu.json"), "--nu", str(line_files / "nu.json"))
    assert code == 2
    (tmp_path / "neg.json").write_text(json.dumps({"space": "line.json", "weights": [-1, 2, 0]}))
    code, _, err = run(capsys, "dist", "primal", "--mu", str(tmp_path / "neg.json"), "--nu", str(line_files / "nu.json"))
    assert code == 1 and err
    code, _, _ = run(capsys, "dist", "primal", "--mu", str(tmp_path / "missing.json"), "--nu", str(tmp_path / "missing.json"))
    assert code == 1


def test_cli_output_is_deterministic(capsys, line_files):
    argv = ["dist", "both", "--mu", str(line_files / "mu.json"), "--nu", str(line_files / "nu.json")]
    first = run(capsys, *argv)[1]
    assert run(capsys, *argv)[1] == first
    v1 = run(capsys, "verify", "duality", "--seed", "3", "--cases", "10")[1]
    assert run(capsys, "verify", "duality", "--seed", "3", "--cases", "10")[1] == v1


def test_cli_csv(capsys, line_files):
    code, out, _ = run(capsys, "--csv", "dist", "primal", "--mu", str(line_files / "mu.json"), "--nu", str(line_files / "nu.json"))
    lines = out.strip().splitlines()
    assert lines[0] == "method,value,certificate" and lines[1].startswith("primal,3/2")
    code, out, _ = run(capsys, "verify", "closed1d", "--cases", "3", "--csv")
    assert out.splitlines()[0].startswith("suite,case,pass")


def test_cli_env_tolerance(capsys, monkeypatch):
    monkeypatch.setenv("SPECWASS_TOL", "1e-3")
    assert cli.build_parser().parse_args(["verify", "duality"]).tol == 1e-3
    monkeypatch.setenv("SPECWASS_TOL", "abc")
    assert cli.main(["verify", "duality"]) == 2


def test_cli_verify(capsys):
    code, out, _ = run(capsys, "verify", "all", "--seed", "1", "--cases", "5", "--quiet", "--refine", "2")
    summary = json.loads(out.strip().splitlines()[-1])
    assert code == 0 and summary["failed"] == 0 and summary["passed"] > 0
    code, out, _ = run(capsys, "verify", "twosheet", "--table", "--refine", "2", "--quiet")
    assert code == 0 and len(out.strip().splitlines()) == 4


def test_cli_verify_reports_counterexample(capsys):
    # tolerance below roundoff makes the float duality suite fail somewhere
    code, out, _ = run(capsys, "verify", "duality", "--cases", "50", "--tol", "-1", "--quiet")
    summary = json.loads(out.strip().splitlines()[-1])
    assert code == 1 and summary["counterexample"]["suite"] == "duality"


def test_console_script(tmp_path):
    exe = shutil.which("specwass")
    if exe is None:
        pytest.skip("console script not installed")
    out = subprocess.run([exe, "dist", "moyal", "--a", "0,0,0", "--b", "0,0,0.5"], capture_output=True, text=True, timeout=120)
    assert out.returncode == 0
    assert json.loads(out.stdout)["method"] == "moyal"
