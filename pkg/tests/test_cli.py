from __future__ import annotations

import csv
import io
import json
import math

import pytest

from lempert.cli import EXIT_NUMERIC, EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, run

PSI_V_JSON = {"basis": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]], "weights": [1, 2]}
PSI_0_JSON = {"basis": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]], "weights": [1, 1]}


def poly_disk(*coords):
    return {"coords": [{"num": [[c, 0] for c in coeffs]} for coeffs in coords]}


def invoke(tmp_path, command, config=None, *flags):
    argv = [command]
    if config is not None:
        path = tmp_path / "config.json"
        path.write_text(config if isinstance(config, str) else json.dumps(config))
        argv += ["--config", str(path)]
    argv += list(flags)
    out = io.StringIO()
    code = run(argv, stdout=out)
    return code, out.getvalue()


class TestIndicator:
    def test_mass_and_eval(self, tmp_path):
        code, text = invoke(tmp_path, "indicator", {"psi": PSI_V_JSON})
        assert code == EXIT_OK
        report = json.loads(text)
        assert report["mass"] == 2
        assert report["eval"][0]["value"] == pytest.approx(math.log(0.5), abs=1e-12)

    def test_comparison(self, tmp_path):
        skew = {"basis": [[[1, 0], [0, 0]], [[0.7071067811865476, 0], [0.7071067811865476, 0]]],
                "weights": [1, 1]}
        code, text = invoke(tmp_path, "indicator", {"psi": skew, "psi2": PSI_0_JSON, "samples": 500})
        assert code == EXIT_OK
        report = json.loads(text)
        assert report["offset"]["bounded"] is True
        assert report["bijection"] == {"1": 1}

    def test_unbounded_comparison(self, tmp_path):
        code, text = invoke(tmp_path, "indicator", {"psi": PSI_0_JSON, "psi2": PSI_V_JSON, "samples": 500})
        report = json.loads(text)
        assert code == EXIT_OK and report["offset"]["bounded"] is False
        assert report["weight_violations"] == [{"k": 1, "l": 1, "m_k": 1, "m_prime_l": 2}]

    def test_negative_infinity_is_string(self, tmp_path):
        code, text = invoke(tmp_path, "indicator", {"psi": PSI_V_JSON, "grid": [[0, 0]]})
        assert code == EXIT_OK and json.loads(text)["eval"][0]["value"] == "-inf"

    def test_missing_psi(self, tmp_path):
        assert invoke(tmp_path, "indicator", {})[0] == EXIT_PARSE

    def test_bad_weights(self, tmp_path):
        bad = {"basis": PSI_V_JSON["basis"], "weights": [1, -1]}
        assert invoke(tmp_path, "indicator", {"psi": bad})[0] == EXIT_PRECONDITION


class TestMultiplicity:
    @pytest.mark.parametrize("second, expected", [([0, 1], 1), ([0, 0, 1], 2)])
    def test_example_two(self, tmp_path, second, expected):
        cfg = {"disk": poly_disk([0, 1], second), "pole": [0, 0], "alpha": 0,
               "psi": {"basis": PSI_V_JSON["basis"], "weights": [2, 1]}}
        code, text = invoke(tmp_path, "multiplicity", cfg)
        report = json.loads(text)
        assert code == EXIT_OK and report["multiplicity"] == expected
        assert report["agreement_delta"] < 1e-2

    def test_miss(self, tmp_path):
        cfg = {"disk": poly_disk([0, 1], [0, 1]), "pole": [0.1, 0], "alpha": 0, "psi": PSI_0_JSON,
               "lelong": False}
        code, text = invoke(tmp_path, "multiplicity", cfg)
        report = json.loads(text)
        assert code == EXIT_OK and report["hit"] is False and report["multiplicity"] == 0

    def test_undetermined_valuation(self, tmp_path):
        deep = [0] * 70 + [1]
        cfg = {"disk": poly_disk(deep, deep), "pole": [0, 0], "alpha": 0, "psi": PSI_0_JSON}
        assert invoke(tmp_path, "multiplicity", cfg)[0] == EXIT_NUMERIC

    def test_dimension_mismatch(self, tmp_path):
        cfg = {"disk": poly_disk([0, 1]), "pole": [0, 0], "alpha": 0, "psi": PSI_0_JSON}
        assert invoke(tmp_path, "multiplicity", cfg)[0] == EXIT_PARSE

    def test_pole_in_denominator_zero(self, tmp_path):
        cfg = {"disk": {"coords": [{"num": [[1, 0]], "den": [[0.5, 0], [-1, 0]]}]},
               "pole": [0], "alpha": 0, "psi": {"basis": [[[1, 0]]], "weights": [1]}}
        assert invoke(tmp_path, "multiplicity", cfg)[0] == EXIT_PRECONDITION


class TestReproduceDistinct:
    def test_values(self, tmp_path):
        out = tmp_path / "distinct.csv"
        code, text = invoke(tmp_path, "reproduce-distinct", None, "--a", "0.64", "--gamma", "0.45",
                            "--out", str(out))
        assert code == EXIT_OK
        report = json.loads(text)
        assert report["functional"]["value"] == pytest.approx(2 * math.log(0.64), abs=1e-10)
        assert report["zeta1_zeta4_plus_a"] < 1e-12
        assert report["admissibility"]["passed"] is True
        assert report["lower_bound_ok"] is True
        assert report["old_admissible"]["with_zeta1"]["passed"] is False
        assert report["old_admissible"]["with_zeta4"]["passed"] is False
        rows = dict(csv.reader(out.read_text().splitlines()))
        assert float(rows["functional"]) == pytest.approx(-0.892574205256838, abs=1e-12)

    def test_config_and_flag_override(self, tmp_path):
        code, text = invoke(tmp_path, "reproduce-distinct", {"a": 0.5, "gamma": 0.3}, "--a", "0.64",
                            "--gamma", "0.45")
        assert code == EXIT_OK and json.loads(text)["a"] == 0.64

    def test_out_of_range(self, tmp_path):
        code, _ = invoke(tmp_path, "reproduce-distinct", None, "--a", "0.64", "--gamma", "0.6")
        assert code == EXIT_PRECONDITION

    def test_bad_json(self, tmp_path):
        assert invoke(tmp_path, "reproduce-distinct", "{not json")[0] == EXIT_PARSE

    def test_nonpositive_tolerance(self, tmp_path):
        code, _ = invoke(tmp_path, "reproduce-distinct", {"a": 0.64, "gamma": 0.45}, "--tol-hit", "0")
        assert code == EXIT_PARSE


class TestSweep:
    cfg = {"a": 0.64, "gamma": 0.45, "eps_list": [1e-2, 1e-3]}

    def test_csv_stdout(self, tmp_path):
        code, text = invoke(tmp_path, "sweep", self.cfg, "--seed", "3")
        assert code == EXIT_OK
        rows = list(csv.DictReader(text.splitlines()))
        assert [float(r["eps"]) for r in rows] == [1e-2, 1e-3]
        assert all(r["seed"] == "3" for r in rows)
        assert float(rows[1]["upper_bound"]) < float(rows[0]["upper_bound"])

    def test_csv_file_and_replay(self, tmp_path):
        first, second = tmp_path / "one.csv", tmp_path / "two.csv"
        code, text = invoke(tmp_path, "sweep", self.cfg, "--out", str(first))
        assert code == EXIT_OK and json.loads(text)["rows"] == 2
        invoke(tmp_path, "sweep", self.cfg, "--out", str(second))
        assert first.read_bytes() == second.read_bytes()

    def test_missing_eps(self, tmp_path):
        assert invoke(tmp_path, "sweep", {"a": 0.64, "gamma": 0.45})[0] == EXIT_PARSE

    def test_increasing_eps(self, tmp_path):
        cfg = {**self.cfg, "eps_list": [1e-3, 1e-2]}
        assert invoke(tmp_path, "sweep", cfg)[0] == EXIT_PRECONDITION


def test_unknown_subcommand_exits_with_parse_code():
    with pytest.raises(SystemExit) as exc:
        run(["bogus"])
    assert exc.value.code == EXIT_PARSE
