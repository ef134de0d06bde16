"""Command-line interface: subcommands, exit codes and output formats."""

import json
import subprocess
import sys
from fractions import Fraction

import pytest

from corona_dist.cli import main
from corona_dist.distribution import delta, distribution_to_json, indicator
from corona_dist.exact import QQi


def write(tmp_path, name, f):
    path = tmp_path / name
    path.write_text(json.dumps(distribution_to_json(f)))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out) if out.strip() else None, err


class TestLiouville:
    def test_refute_unit_params(self, capsys):
        code, data, _ = run_json(capsys, "liouville-refute", "--C", "1", "--N", "1", "--M", "1",
                                 "--cone", "orthant1")
        assert code == 1
        assert data["K"] == 4 and data["seed"] is not None
        assert data["ratioUpper"]["log10"] < -21

    def test_refute_cap_exhausted(self, capsys):
        code, data, _ = run_json(capsys, "liouville-refute", "--C", "1e-6", "--N", "5", "--M", "100")
        assert code == 3 and data["requiredK"] == 12

    def test_refute_uncapped(self, capsys):
        code, data, _ = run_json(capsys, "liouville-refute", "--C", "1e-6", "--N", "5", "--M", "100",
                                 "--uncapped")
        assert code == 1 and data["K"] == 12

    def test_refute_rejects_light_cone(self, capsys):
        code, _, err = run(capsys, "liouville-refute", "--cone", "lightcone")
        assert code == 2 and "error" in err

    def test_report_json(self, capsys):
        code, data, _ = run_json(capsys, "liouville-report", "--kmax", "3")
        assert code == 0 and [r["qK"] for r in data["rows"]] == ["10", "100", "1000000"]

    def test_report_csv(self, capsys, tmp_path):
        out = tmp_path / "rows.csv"
        code, _, _ = run(capsys, "liouville-report", "--kmax", "6", "--format", "csv", "--out", str(out))
        lines = out.read_text().splitlines()
        assert code == 0 and len(lines) == 7 and lines[1].startswith("1,1,10,")


class TestGeometry:
    def test_support_fn_light_cone(self, capsys):
        code, data, _ = run_json(capsys, "support-fn", "--cone", "lightcone", "--speed", "1", "--xi", "1", "0")
        assert code == 0 and data["H"] == pytest.approx(0.70710678118654752)

    def test_support_fn_orthant(self, capsys):
        code, data, _ = run_json(capsys, "support-fn", "--cone", "orthant2", "--xi", "1", "-1")
        assert data["H"] == 1.0 and data["projection"] == [1.0, 0.0]

    def test_support_fn_json_cone(self, capsys):
        cone = json.dumps({"kind": "polyhedral", "dimension": 2, "generators": [[[1, 1], [0, 1]], [[1, 1], [1, 1]]]})
        code, data, _ = run_json(capsys, "support-fn", "--cone", cone, "--xi", "0", "1")
        assert code == 0 and data["H"] == pytest.approx(2 ** -0.5)

    def test_support_fn_dimension_mismatch(self, capsys):
        code, _, _ = run(capsys, "support-fn", "--cone", "orthant3", "--xi", "1", "2")
        assert code == 2

    def test_weight_check(self, capsys):
        code, data, _ = run_json(capsys, "weight-check", "--cone", "lightcone3", "--samples", "200")
        assert code == 0 and data["locality"]["passed"] and data["hessian"]["passed"]


class TestTransformsAndBounds:
    def test_transform(self, capsys, tmp_path):
        f = write(tmp_path, "f.json", delta(deriv=(1,), coeff=QQi(0, -1)))
        code, data, _ = run_json(capsys, "transform", "--f", f, "--points", "[[[2, 3]]]")
        assert code == 0 and data["results"][0]["value"] == pytest.approx([2, 3])

    def test_transform_csv(self, capsys, tmp_path):
        f = write(tmp_path, "f.json", indicator())
        code, out, _ = run(capsys, "transform", "--f", f, "--points", "[[0], [1]]", "--format", "csv")
        assert code == 0 and out.splitlines()[0] == "f,point,value,radius"

    def test_pws(self, capsys, tmp_path):
        f = write(tmp_path, "f.json", delta() - delta(Fraction(11, 100)))
        code, data, _ = run_json(capsys, "pws", "--f", f, "--samples", "30", "--im-max", "10")
        assert code == 0 and data["passed"] and data["bound"]["C"] == 2.0


class TestCorona:
    def test_check_common_zero(self, capsys, tmp_path):
        f = write(tmp_path, "f.json", delta(deriv=(1,), coeff=QQi(0, -1)))
        code, data, _ = run_json(capsys, "corona-check", "--f", f, "--points", "[[0], [1]]")
        assert code == 1 and data["status"] == "violationAt" and data["point"] == [[0.0, 0.0]]

    def test_check_delta(self, capsys, tmp_path):
        f = write(tmp_path, "f.json", delta())
        code, data, _ = run_json(capsys, "corona-check", "--f", f, "--C", "0.5")
        assert code == 0 and data["status"] == "noViolationFoundOnSamples"

    def test_check_inconclusive(self, capsys, tmp_path):
        f = write(tmp_path, "f.json", delta() - delta(Fraction(1, 3)))
        code, data, _ = run_json(capsys, "corona-check", "--f", f, "--precision", "53",
                                 "--points", "[[1e30]]")
        assert code == 3 and data["status"] == "inconclusive"

    def test_search(self, capsys, tmp_path):
        f = write(tmp_path, "f.json", delta() - delta(1))
        code, data, _ = run_json(capsys, "corona-search", "--f", f, "--C", "0.001",
                                 "--box", "4", "8", "-0.2", "0.2", "--budget", "600")
        assert code == 1 and data["point"][0][0] == pytest.approx(6.283185307, abs=1e-4)

    def test_search_is_deterministic(self, capsys, tmp_path):
        f = write(tmp_path, "f.json", indicator())
        a = run(capsys, "corona-search", "--f", f, "--budget", "100", "--seed", "7")
        b = run(capsys, "corona-search", "--f", f, "--budget", "100", "--seed", "7")
        assert a == b and json.loads(a[1])["seed"] == 7

    def test_bezout(self, capsys, tmp_path):
        d = write(tmp_path, "d.json", delta())
        code, data, _ = run_json(capsys, "bezout-verify", "--f", d, "--g", d)
        assert code == 0 and data["holds"] is True

    def test_bezout_failure(self, capsys, tmp_path):
        f = write(tmp_path, "f.json", delta() - delta(1))
        g = write(tmp_path, "g.json", delta() + delta(1))
        code, data, _ = run_json(capsys, "bezout-verify", "--f", f, "--g", g)
        assert code == 1 and data["holds"] is False


class TestInputErrors:
    def test_malformed_json_position(self, capsys):
        code, _, err = run(capsys, "bezout-verify", "--f", '{"dimension": 1, "terms": [}', "--g", "{}")
        assert code == 2 and "line 1, column 28" in err

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "transform", "--f", "/nonexistent.json")
        assert code == 2 and "cannot read" in err

    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_low_precision(self, capsys, tmp_path):
        f = write(tmp_path, "f.json", delta())
        code, _, err = run(capsys, "transform", "--f", f, "--precision", "32")
        assert code == 2 and "precision" in err

    def test_bad_params(self, capsys, tmp_path):
        f = write(tmp_path, "f.json", delta())
        code, _, _ = run(capsys, "corona-check", "--f", f, "--C", "0")
        assert code == 2

    def test_unknown_cone(self, capsys):
        code, _, _ = run(capsys, "support-fn", "--cone", "sphere", "--xi", "1")
        assert code == 2

    def test_support_outside_cone(self, capsys, tmp_path):
        f = write(tmp_path, "f.json", delta(-1))
        code, _, _ = run(capsys, "corona-check", "--f", f)
        assert code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "corona_dist", "liouville-refute"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 1 and json.loads(proc.stdout)["K"] == 4
