"""Tests for the command-line interface, its parser and its exit codes."""

import json
import shutil
import subprocess
import sys

import pytest

from qadhm.adhm import (
    ComplexADHMDatum,
    RealADHMDatum,
    random_complex_datum,
    random_stable_solution,
)
from qadhm.cli import CLIError, ExprParser, RunConfig, parse_expr, run
from qadhm.exactcore import GaussRational, Matrix, QLaurent
from qadhm.monad import chi_twist
from qadhm.qcalculus import derive_table, laplacian, partials
from qadhm.qspacetime import HarmonicIndex, NCPoly, X_NAMES, basis_element, det_x

Z = GaussRational(0)


def invoke(argv, capsys):
    code = run(argv)
    return code, capsys.readouterr().out


def write_json(path, obj):
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


def stable_not_semiregular():
    return ComplexADHMDatum(1, 2, [[0]], [[0]], [[0]], [[0]],
                            [[1, 0]], [[0, 1]], [[0], [0]], [[0], [0]])


def dual_costable_solution(r, c, seed):
    d = random_stable_solution(r, c, seed)
    zero_i = Matrix.zero(c, r, Z)
    return ComplexADHMDatum(c, r,
                            d.B11.transpose(), d.B12.transpose(),
                            d.B21.transpose(), d.B22.transpose(),
                            zero_i, zero_i,
                            d.i1.transpose(), d.i2.transpose())


class TestExprParser:
    def test_words_and_scalars(self):
        assert parse_expr("det") == det_x()
        assert parse_expr("x11") == NCPoly.gen("I", "x11")
        two = NCPoly("I", {(0, 0, 0, 0): QLaurent.from_scalar(2)})
        assert parse_expr("2") == two
        q2 = NCPoly("I", {(0, 0, 0, 0): QLaurent.q_power(2)})
        assert parse_expr("q^2") == q2
        assert parse_expr("q^+2") == q2
        assert parse_expr("q") == NCPoly("I", {(0, 0, 0, 0): QLaurent.q_power(1)})

    def test_products_and_sums(self):
        x11, x22 = NCPoly.gen("I", "x11"), NCPoly.gen("I", "x22")
        assert parse_expr("x11*x22") == x11 * x22
        assert parse_expr("(x11 + x22) * x11") == (x11 + x22) * x11
        assert parse_expr("x11 - x11").is_zero()
        assert parse_expr("-3*x11 + x11") == x11.scale(GaussRational(-2))
        assert parse_expr("--x11") == x11

    def test_normal_ordering_applied(self):
        # the exchange rule turns x21*x12 into q^2 x12 x21
        got = parse_expr("x21*x12")
        want = parse_expr("q^2 * x12 * x21")
        assert got == want
        assert parse_expr("x21*x12 - q^2*x12*x21").is_zero()

    def test_parse_errors(self):
        for bad in ("", "  ", "x13", "q^", "q^x11", "2**3", "(x11",
                    "x11)", "x11 +", "3x11", "x11 @ x22"):
            with pytest.raises(CLIError):
                parse_expr(bad)

    def test_tokenizer(self):
        assert ExprParser("q^-2*x11")._tokenize("q^-2*x11") == \
            ["q", "^", "-", 2, "*", "x11"]


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.p_choice == "q" and cfg.seed == 0
        assert cfg.degree_cap == 4 and cfg.grid_size == 12
        assert cfg.output is None

    def test_validation(self):
        with pytest.raises(CLIError, match="p_choice"):
            RunConfig(p_choice="p")
        with pytest.raises(CLIError, match="64-bit"):
            RunConfig(seed=1 << 63)
        with pytest.raises(CLIError, match="64-bit"):
            RunConfig(seed="5")
        with pytest.raises(CLIError, match="degree_cap"):
            RunConfig(degree_cap=9)
        with pytest.raises(CLIError, match="degree_cap"):
            RunConfig(degree_cap=-1)
        with pytest.raises(CLIError, match="grid_size"):
            RunConfig(grid_size=0)
        RunConfig(seed=-(1 << 63), degree_cap=8, grid_size=1)


class TestAdhmCommands:
    def test_check_classifies_the_stable_not_semiregular_datum(
            self, tmp_path, capsys):
        f = write_json(tmp_path / "d.json", stable_not_semiregular().to_json())
        code, out = invoke(["adhm", "check", f], capsys)
        rep = json.loads(out)
        assert code == 0
        assert rep["solution"]
        assert rep["classification"]["stable_everywhere"] is True
        assert rep["classification"]["regular"] is False
        assert all(all(x == "0/1" for row in m for x in row)
                   for m in rep["residuals"])

    def test_check_non_solution_exits_one(self, tmp_path, capsys):
        f = write_json(tmp_path / "d.json",
                       random_complex_datum(2, 1, 3).to_json())
        code, out = invoke(["adhm", "check", f], capsys)
        assert code == 1
        assert not json.loads(out)["solution"]

    def test_check_rejects_real_datum(self, tmp_path, capsys):
        real = RealADHMDatum(1, 2, [[0]], [[0]], [[1, 0]], [[0], [1]])
        f = write_json(tmp_path / "r.json", real.to_json())
        code, out = invoke(["adhm", "check", f], capsys)
        assert code == 2
        assert "embed" in json.loads(out)["error"]["message"]

    def test_missing_file_is_an_error_object(self, capsys):
        code, out = invoke(["adhm", "check", "/nonexistent/x.json"], capsys)
        assert code == 2
        assert json.loads(out)["error"]["type"] == "CLIError"

    def test_embed_then_verify(self, tmp_path, capsys):
        real = RealADHMDatum(1, 2, [[0]], [[0]], [[1, 0]], [[0], [1]])
        f = write_json(tmp_path / "r.json", real.to_json())
        out_path = tmp_path / "c.json"
        code, _ = invoke(["adhm", "embed", f, "--output", str(out_path)],
                         capsys)
        assert code == 0
        blob = json.loads(out_path.read_text(encoding="utf-8"))
        assert blob["kind"] == "complex"
        code, out = invoke(["inst", "verify", str(out_path)], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["I"]["all_zero"] and rep["J"]["all_zero"]

    def test_embed_rejects_non_solution(self, tmp_path, capsys):
        real = RealADHMDatum(1, 2, [[1]], [[0]], [[1, 0]], [[1], [1]])
        f = write_json(tmp_path / "r.json", real.to_json())
        code, out = invoke(["adhm", "embed", f], capsys)
        assert code == 2
        assert "residual" in json.loads(out)["error"]["message"]

    def test_random_is_seeded_and_checkable(self, tmp_path, capsys):
        out_path = tmp_path / "d.json"
        code, _ = invoke(["adhm", "random", "-r", "2", "-c", "2",
                          "--seed", "7", "--output", str(out_path)], capsys)
        assert code == 0
        blob = json.loads(out_path.read_text(encoding="utf-8"))
        assert blob == random_stable_solution(2, 2, 7).to_json()
        code, out = invoke(["adhm", "check", str(out_path)], capsys)
        assert code == 0
        assert json.loads(out)["classification"]["stable_everywhere"]

    def test_rank_audit(self, tmp_path, capsys):
        f = write_json(tmp_path / "d.json",
                       random_stable_solution(2, 1, 0).to_json())
        code, out = invoke(["adhm", "rank", f], capsys)
        rep = json.loads(out)
        assert code == 0
        assert rep["rank"] == 3 and rep["full_rank"]
        assert rep["moduli_dimension"] == rep["expected_moduli_dimension"] == 8
        assert rep["ambient_parameters"] == 12
        assert rep["gauge_dimension"] == 1
        assert rep["stable_everywhere"]


class TestMonadCommands:
    def test_build(self, tmp_path, capsys):
        f = write_json(tmp_path / "d.json",
                       random_stable_solution(2, 1, 1).to_json())
        code, out = invoke(["monad", "build", f], capsys)
        assert code == 0
        blob = json.loads(out)
        assert "alpha" in blob and "beta" in blob

    def test_build_non_solution_is_an_error(self, tmp_path, capsys):
        f = write_json(tmp_path / "d.json",
                       random_complex_datum(2, 1, 0).to_json())
        code, out = invoke(["monad", "build", f], capsys)
        assert code == 2
        assert "residual" in json.loads(out)["error"]["message"]

    def test_classify(self, tmp_path, capsys):
        f = write_json(tmp_path / "d.json", stable_not_semiregular().to_json())
        code, out = invoke(["monad", "classify", f], capsys)
        assert code == 0
        assert json.loads(out)["kind"] == "torsion_free"

    def test_chern_prints_bare_values(self, capsys):
        code, out = invoke(["monad", "chern", "-r", "2", "-c", "1",
                            "-k", "-1"], capsys)
        assert code == 0
        assert out == "-1\n"
        for r, c, k in [(2, 1, 0), (3, 2, -1), (4, 4, 2)]:
            code, out = invoke(["monad", "chern", "-r", str(r), "-c", str(c),
                                "-k", str(k)], capsys)
            assert code == 0
            assert out.strip() == str(chi_twist(r, c, k))

    def test_chern_validates_sizes(self, capsys):
        code, out = invoke(["monad", "chern", "-r", "0", "-c", "1", "-k", "0"],
                           capsys)
        assert code == 2


class TestQCommands:
    def test_eigen_example(self, capsys):
        code, out = invoke(["q", "eigen", "-k", "1", "-l", "0"], capsys)
        rep = json.loads(out)
        assert code == 0
        assert rep["eigenvalue"] == {"-2": "1/1", "0": "1/1"}
        assert rep["verified_on_witness"]

    def test_eigen_other_convention(self, capsys):
        code, out = invoke(["q", "eigen", "-k", "1", "-l", "0",
                            "--p-choice", "qinv"], capsys)
        rep = json.loads(out)
        assert code == 0
        assert rep["eigenvalue"] == {"0": "1/1", "2": "1/1"}
        assert rep["verified_on_witness"]

    def test_normalize(self, capsys):
        code, out = invoke(["q", "normalize", "x21*x12"], capsys)
        rep = json.loads(out)
        assert code == 0
        assert rep["normal_form"] == str(parse_expr("q^2*x12*x21"))
        assert rep["degree"] == 2

    def test_partial_matches_library(self, capsys):
        code, out = invoke(["q", "partial", "det"], capsys)
        rep = json.loads(out)
        assert code == 0
        table = derive_table("q")
        want = {name: str(f)
                for name, f in zip(X_NAMES, partials(det_x(), table))}
        assert rep["partials"] == want

    def test_laplace(self, capsys):
        code, out = invoke(["q", "laplace", "x11*x22"], capsys)
        rep = json.loads(out)
        assert code == 0
        assert rep["laplacian"] == "1/1" and not rep["harmonic"]
        code, out = invoke(["q", "laplace", "x11"], capsys)
        assert json.loads(out)["harmonic"]

    def test_harmonic(self, capsys):
        code, out = invoke(["q", "harmonic", "-l", "1", "-m", "1", "-n", "-1"],
                           capsys)
        rep = json.loads(out)
        assert code == 0
        assert rep["element"] == str(basis_element(HarmonicIndex(1, 1, -1, 0)))
        assert rep["harmonic_part_is_harmonic"]
        code, out = invoke(["q", "harmonic", "-l", "1", "-m", "3", "-n", "1"],
                           capsys)
        assert code == 2
        code, out = invoke(["q", "harmonic", "-l", "1", "-m", "0", "-n", "1"],
                           capsys)
        assert code == 2

    def test_table_rules(self, capsys):
        code, out = invoke(["q", "table", "--p", "q"], capsys)
        rep = json.loads(out)
        assert code == 0
        assert len(rep["x_rules"]) == 16
        assert len(rep["wedge_rules"]) == 10  # pairs with g >= h
        assert rep["x_rules"]["dx11*x11"] == [
            {"coeff": {"2": "1/1"}, "left": "x11", "right": "dx11"}]
        assert rep["wedge_rules"]["dx11*dx11"] == []
        code, out2 = invoke(["q", "table", "--p", "qinv"], capsys)
        assert code == 0
        assert json.loads(out2)["p_choice"] == "qinv"
        assert out != out2

    def test_penrose(self, tmp_path, capsys):
        f = write_json(tmp_path / "c.json", {"cocycle": [
            {"exponents": [1, 0, -2, -1], "coeff": "1"}]})
        code, out = invoke(["q", "penrose", f], capsys)
        rep = json.loads(out)
        assert code == 0
        assert rep["image"] == "1/1*x11" and rep["harmonic"]

    def test_penrose_schema_errors(self, tmp_path, capsys):
        f = write_json(tmp_path / "c.json", {"cocycle": [
            {"exponents": [1, 0, 0, -3], "coeff": "1"}]})
        code, out = invoke(["q", "penrose", f], capsys)
        assert code == 2
        assert "cocycle" in json.loads(out)["error"]["message"]
        f = write_json(tmp_path / "e.json", {"cocycle": []})
        assert invoke(["q", "penrose", f], capsys)[0] == 2

    def test_expression_error_is_machine_readable(self, capsys):
        code, out = invoke(["q", "normalize", "x13"], capsys)
        assert code == 2
        err = json.loads(out)["error"]
        assert err["type"] == "CLIError" and "x13" in err["message"]


class TestInstCommands:
    def test_verify_exit_codes(self, tmp_path, capsys):
        good = write_json(tmp_path / "g.json",
                          random_stable_solution(2, 2, 0).to_json())
        assert invoke(["inst", "verify", good], capsys)[0] == 0
        bad = write_json(tmp_path / "b.json",
                         random_complex_datum(2, 1, 1).to_json())
        code, out = invoke(["inst", "verify", bad], capsys)
        assert code == 1
        rep = json.loads(out)
        assert not rep["I"]["all_zero"]
        assert any(v["terms"] for v in rep["I"]["identities"].values())

    def test_curvature_report(self, tmp_path, capsys):
        f = write_json(tmp_path / "d.json",
                       random_stable_solution(2, 1, 4).to_json())
        code, out = invoke(["inst", "curvature", f], capsys)
        rep = json.loads(out)
        assert code == 0
        assert not rep["all_asd"]
        assert rep["sign_adjusted_defects"] == [[0, 0]]
        assert rep["entries"][2][2]["verdict"] == "zero"
        code, out2 = invoke(["inst", "curvature", f, "--p-choice", "qinv"],
                            capsys)
        assert code == 0 and json.loads(out2)["p_choice"] == "qinv"

    def test_curvature_requires_solution(self, tmp_path, capsys):
        f = write_json(tmp_path / "d.json",
                       random_complex_datum(2, 1, 2).to_json())
        code, out = invoke(["inst", "curvature", f], capsys)
        assert code == 2
        assert "solution" in json.loads(out)["error"]["message"]

    def test_slices_stable_passes(self, tmp_path, capsys):
        f = write_json(tmp_path / "d.json",
                       random_stable_solution(2, 1, 0).to_json())
        code, out = invoke(["inst", "slices", f, "--dmax", "2"], capsys)
        rep = json.loads(out)
        assert code == 0
        assert rep["all_surjective"] and len(rep["reports"]) == 12
        assert all(r["surjective"] for r in rep["reports"])

    def test_slices_costable_only_fails(self, tmp_path, capsys):
        f = write_json(tmp_path / "d.json",
                       dual_costable_solution(2, 1, 0).to_json())
        code, out = invoke(["inst", "slices", f, "--dmax", "0",
                            "--grid-size", "3"], capsys)
        rep = json.loads(out)
        assert code == 1
        assert not rep["all_surjective"]

    def test_slices_enforces_degree_cap(self, tmp_path, capsys):
        f = write_json(tmp_path / "d.json",
                       random_stable_solution(2, 1, 0).to_json())
        assert invoke(["inst", "slices", f, "--dmax", "9"], capsys)[0] == 2
        assert invoke(["inst", "slices", f, "--degree-cap", "9"], capsys)[0] == 2


class TestDeterminism:
    def test_reports_byte_identical(self, tmp_path, capsys):
        f = write_json(tmp_path / "d.json",
                       random_stable_solution(2, 1, 5).to_json())
        runs = [invoke(["inst", "slices", f, "--dmax", "1"], capsys)[1]
                for _ in range(2)]
        assert runs[0] == runs[1]
        runs = [invoke(["q", "table"], capsys)[1] for _ in range(2)]
        assert runs[0] == runs[1]

    def test_console_entry_point(self):
        exe = shutil.which("qadhm")
        assert exe is not None
        proc = subprocess.run([exe, "q", "eigen", "-k", "1", "-l", "0"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["eigenvalue"] == {"-2": "1/1",
                                                         "0": "1/1"}

    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "qadhm.cli", "monad", "chern",
             "-r", "2", "-c", "1", "-k", "-1"],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout == "-1\n"
