import json
import subprocess
import sys
from pathlib import Path

import pytest

from lindyn.cli import main
from lindyn.fixtures import all_fixtures, fixture_by_name, fixture_input_dict
from lindyn.report import loads_report


@pytest.fixture(scope="module")
def fixture_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("inputs")
    paths = {}
    for f in all_fixtures():
        p = root / f"{f.name}.json"
        p.write_text(json.dumps(fixture_input_dict(f), indent=2))
        paths[f.name] = str(p)
    return paths


def run_cli(args):
    proc = subprocess.run(
        [sys.executable, "-m", "lindyn.cli", *args], capture_output=True, text=True
    )
    return proc.returncode, proc.stdout, proc.stderr


class TestAnalyze:
    def test_report_contents(self, fixture_files, tmp_path):
        out = tmp_path / "report.json"
        code = main(["analyze", fixture_files["shear3"], "--output", str(out)])
        assert code == 0
        rep = loads_report(out.read_text())
        fam = rep["invariant_family"]
        assert fam["count"] == 1
        sub = fam["subspaces"][0]
        assert sub["dimension"] == 2
        assert [e["exact"] for e in sub["functionals"][0]] == ["1", "0", "0"]
        assert rep["invariant_tree"]["depth"] <= 3
        assert rep["commutativity"]["abelian"] is True
        # membership sections for the declared points
        by_name = {p["name"]: p for p in rep["points"]}
        assert by_name["closed"]["membership"]["in_U"] is True
        assert by_name["hyperplane"]["membership"]["containing"] == [0]

    def test_byte_determinism(self, fixture_files, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["analyze", fixture_files["radical4"], "--output", str(a)]) == 0
        assert main(["analyze", fixture_files["radical4"], "--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_report_round_trip(self, fixture_files, tmp_path):
        out = tmp_path / "r.json"
        main(["analyze", fixture_files["cshear5"], "--output", str(out)])
        text = out.read_text()
        rep = loads_report(text)
        assert json.dumps(rep, indent=2) + "\n" == text

    def test_all_fixture_reports_fast(self, fixture_files, tmp_path):
        import time

        for name, path in fixture_files.items():
            t0 = time.time()
            assert main(["analyze", path, "--output", str(tmp_path / "x.json")]) == 0
            assert time.time() - t0 < 1.0

    def test_not_abelian_exit_code(self, tmp_path):
        doc = {
            "field": "real",
            "dimension": 2,
            "generators": [
                {"name": "A", "rows": [["1", "1"], ["0", "1"]]},
                {"name": "B", "rows": [["1", "0"], ["1", "1"]]},
            ],
        }
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(doc))
        code, _, err = run_cli(["analyze", str(p)])
        assert code == 2
        assert "commute" in err

    def test_n1_report(self, tmp_path):
        doc = {"field": "real", "dimension": 1, "generators": [{"name": "A", "rows": [["2"]]}]}
        p = tmp_path / "one.json"
        p.write_text(json.dumps(doc))
        code, out, _ = run_cli(["analyze", str(p)])
        assert code == 0
        rep = json.loads(out)
        assert rep["invariant_family"]["subspaces"][0]["dimension"] == 0
        assert rep["invariant_tree"]["depth"] == 1


class TestOrbit:
    def test_discrete_point(self, fixture_files, capsys):
        code = main(["orbit", fixture_files["shear3"], "--point", "1,1,0",
                     "--max-exponent", "64"])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["membership"]["in_U"] is True
        assert out["closure"]["kind"] == "DISCRETE"

    def test_dense_point(self, fixture_files, capsys):
        code = main(["orbit", fixture_files["shear3"], "--point", "1,sqrt(2),0",
                     "--max-exponent", "512"])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["closure"]["kind"] == "DENSE_IN_AFFINE"
        assert out["closure"]["hull_dim"] == 1

    def test_hyperplane_point(self, fixture_files, capsys):
        code = main(["orbit", fixture_files["shear3"], "--point", "0,1,0",
                     "--max-exponent", "32"])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["membership"]["in_U"] is False
        assert out["membership"]["containing"] == [0]

    def test_dimension_mismatch(self, fixture_files):
        code, _, err = run_cli(["orbit", fixture_files["shear3"], "--point", "1,2"])
        assert code == 1
        assert "coordinates" in err

    def test_dump_points(self, fixture_files, tmp_path, capsys):
        dump = tmp_path / "cloud.csv"
        code = main(["orbit", fixture_files["shear3"], "--point", "1,1,0",
                     "--max-exponent", "16", "--dump-points", str(dump)])
        assert code == 0
        lines = dump.read_text().strip().splitlines()
        assert lines[0] == "x0,x1,x2"
        out = json.loads(capsys.readouterr().out)
        assert len(lines) - 1 == out["dump"]["points"]


class TestVerifyExamples:
    def test_all_claims_pass_fast_config(self, capsys):
        # lighter exponent bound; the full-strength run lives in acceptance
        code = main(["verify-examples", "--dense-exponent", "256"])
        out = capsys.readouterr().out
        assert code == 0, out
        lines = [l for l in out.strip().splitlines() if l.startswith(("PASS", "FAIL"))]
        assert len(lines) >= 10
        assert all(l.startswith("PASS") for l in lines)

    def test_altered_radical_fixture_detected(self):
        # replacing the radical limit by a rational breaks the independence
        # certificate; the harness must flag it rather than pass silently
        from lindyn.fixtures import radical4
        from lindyn.linalg import as_vector
        from lindyn.verify import _closure_minus_orbit_claim
        import dataclasses

        f = radical4()
        altered = dataclasses.replace(
            f, points={**f.points, "limit": as_vector(["1", "1", "0", "3/2"])}
        )
        res = _closure_minus_orbit_claim(altered, None)
        assert not res.ok
        assert "altered expected verdict" in res.detail

    def test_altered_complex_fixture_detected(self):
        # making the first coordinate real voids the closed-orbit certificate
        from lindyn.fixtures import cshear5
        from lindyn.linalg import as_vector
        from lindyn.verify import _closed_complex_claim
        from lindyn.dynamics import ClosureConfig
        from lindyn.numeric import NumericContext
        import dataclasses

        f = cshear5()
        altered = dataclasses.replace(
            f, points={**f.points, "closed": as_vector(["1", "2+i", "1+2*i", "0", "0"])}
        )
        res = _closed_complex_claim(altered, "closed", NumericContext(), ClosureConfig())
        assert not res.ok
        assert "precondition violated" in res.detail
