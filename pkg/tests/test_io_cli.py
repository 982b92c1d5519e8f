import json

import jsonschema
import numpy as np
import pytest

from hciz import io
from hciz.cli import main, render
from hciz.linalg import sample_haar_unitary
from hciz.polytope import RayleighTriangle


def sample_doc_schema(item_schema):
    schema = json.loads(json.dumps(io.SAMPLES_SCHEMA))
    schema["properties"]["samples"]["items"] = item_schema
    return schema


class TestFormats:
    def test_matrix_json_round_trip_is_exact(self):
        M = sample_haar_unitary(3, 0)
        M = M + M.conj().T
        doc = json.loads(io.matrices_to_json([M]))
        jsonschema.validate(doc, sample_doc_schema(io.MATRIX_SCHEMA))
        back = io.matrix_from_dict(doc["samples"][0])
        np.testing.assert_array_equal(back, M)

    def test_real_matrix_without_imaginary_part(self):
        M = io.matrix_from_dict({"n": 2, "re": [[1, 0], [0, 2]]})
        np.testing.assert_array_equal(M, np.diag([1, 2]))

    def test_triangle_json(self):
        P = RayleighTriangle.from_rows([[0.5], [1.0, 0.0]])
        doc = json.loads(io.triangles_to_json([P]))
        jsonschema.validate(doc, sample_doc_schema(io.TRIANGLE_SCHEMA))
        assert doc["samples"][0] == {"n": 2, "rows": [[0.5], [1.0, 0.0]]}
        assert io.triangle_from_dict(doc["samples"][0]).values.tolist() == [0.5, 1.0, 0.0]

    def test_csv_round_trip_is_exact(self):
        Ms = sample_haar_unitary(2, 1, size=4)
        text = io.matrices_to_csv(Ms)
        assert text.splitlines()[0] == "re_1_1,re_1_2,re_2_1,re_2_2,im_1_1,im_1_2,im_2_1,im_2_2"
        np.testing.assert_array_equal(io.matrices_from_csv(text), Ms)

    def test_triangle_csv_header(self):
        text = io.triangles_to_csv([[0.5, 1.0, 0.0]])
        assert text.splitlines() == ["R_1_1,R_1_2,R_2_2", "0.5,1,0"]

    def test_parse_error_reports_location(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"n": 2,\n "re": [[1, 0], [0, 1]],, }')
        with pytest.raises(io.ParseError, match=r"bad\.json:2:"):
            io.load_matrix(bad)

    @pytest.mark.parametrize("doc,match", [
        ({"n": 2, "re": [[1, 0]]}, "expected an 2x2"),
        ({"re": [[1]]}, "missing key 'n'"),
        ({"n": 0, "re": []}, r"\.n"),
        ([1, 2], "expected an object"),
    ])
    def test_malformed_matrix(self, tmp_path, doc, match):
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(io.ParseError, match=match):
            io.load_matrix(path)

    def test_malformed_triangle(self, tmp_path):
        path = tmp_path / "t.json"
        path.write_text(json.dumps({"kind": "triangle", "samples": [{"n": 2, "rows": [[1], [1]]}]}))
        with pytest.raises(io.ParseError, match=r"samples\[0\]\.rows\[1\]"):
            io.load_triangles(path)


def run_cli(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestCLI:
    def test_sample_orbit(self, capsys):
        code, out, _ = run_cli(["sample-orbit", "--lambda", "1,0", "--y", "1,0", "--num", "10",
                                "--seed", "7"], capsys)
        assert code == 0
        doc = json.loads(out)
        jsonschema.validate(doc, sample_doc_schema(io.MATRIX_SCHEMA))
        assert len(doc["samples"]) == 10
        for s in doc["samples"]:
            M = io.matrix_from_dict(s)
            np.testing.assert_allclose(np.linalg.eigvalsh(M), [0, 1], atol=1e-8)

    def test_sample_orbit_deterministic(self):
        argv = ["sample-orbit", "--lambda", "2,1,0", "--y", "1,0.5,0", "--num", "5", "--seed", "3"]
        assert render(argv) == render(argv)
        assert render(argv) != render(argv[:-1] + ["4"])

    def test_partition(self, capsys):
        code, out, _ = run_cli(["partition", "--lambda", "1,0", "--y", "1,0"], capsys)
        doc = json.loads(out)
        assert code == 0
        assert doc["log_partition"] == pytest.approx(np.log(np.e - 1), abs=1e-9)
        assert doc["expected_inner_product"] == pytest.approx(1 / (np.e - 1), abs=1e-6)

    def test_partition_csv(self):
        text = render(["partition", "--lambda", "[1, 0]", "--y", "[1, 0]", "--format", "csv"])
        assert text.splitlines()[0] == "log_partition,expected_inner_product"

    def test_Y_file(self, tmp_path):
        path = tmp_path / "Y.json"
        path.write_text(json.dumps(io.matrix_to_dict(np.array([[0.5, 0.5], [0.5, 0.5]]))))
        text = render(["partition", "--lambda", "1,0", "--Y-file", str(path)])
        assert json.loads(text)["log_partition"] == pytest.approx(np.log(np.e - 1), abs=1e-9)
        out = json.loads(render(["sample-orbit", "--lambda", "1,0", "--Y-file", str(path), "--num", "3"]))
        assert len(out["samples"]) == 3

    def test_sample_gt(self):
        text = render(["sample-gt", "--lambda", "2,1,0", "--y", "1,0,0", "--num", "4", "--format", "csv"])
        lines = text.splitlines()
        assert lines[0] == "R_1_1,R_1_2,R_2_2,R_1_3,R_2_3,R_3_3" and len(lines) == 5
        doc = json.loads(render(["sample-gt", "--lambda", "1,0", "--num", "2"]))
        jsonschema.validate(doc, sample_doc_schema(io.TRIANGLE_SCHEMA))

    def test_sample_fiber(self, tmp_path):
        path = tmp_path / "P.json"
        path.write_text(json.dumps({"n": 2, "rows": [[0.5], [1, 0]]}))
        doc = json.loads(render(["sample-fiber", "--P-file", str(path), "--num", "3"]))
        for s in doc["samples"]:
            M = io.matrix_from_dict(s)
            assert M[0, 0] == 0.5 and abs(M[0, 1]) == pytest.approx(0.5)

    def test_dp_lowrank(self, tmp_path):
        path = tmp_path / "A.json"
        path.write_text(json.dumps(io.matrix_to_dict(np.diag([3.0, 1.0, 0.0]))))
        doc = json.loads(render(["dp-lowrank", "--A-file", str(path), "--k", "2", "--epsilon", "1",
                                 "--num", "2", "--burn-in", "100", "--thin", "5"]))
        assert doc["meta"]["k"] == 2 and doc["meta"]["xi"] == 0.25 and len(doc["meta"]["scores"]) == 2
        for s in doc["samples"]:
            P = io.matrix_from_dict(s)
            np.testing.assert_allclose(P @ P, P, atol=1e-8)
            assert np.trace(P).real == pytest.approx(2.0)

    def test_config_file_and_precedence(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"lambda": [1, 0], "y": [1, 0], "num": 3, "seed": 5}))
        from_file = render(["sample-orbit", "--config", str(cfg)])
        assert len(json.loads(from_file)["samples"]) == 3
        assert from_file == render(["sample-orbit", "--lambda", "1,0", "--y", "1,0", "--num", "3",
                                    "--seed", "5"])
        overridden = json.loads(render(["sample-orbit", "--config", str(cfg), "--num", "2"]))
        assert len(overridden["samples"]) == 2

    def test_out_file(self, tmp_path, capsys):
        out = tmp_path / "x.csv"
        code, stdout, _ = run_cli(["sample-orbit", "--lambda", "1,0", "--y", "0,0", "--num", "2",
                                   "--format", "csv", "--out", str(out)], capsys)
        assert code == 0 and stdout == ""
        assert io.matrices_from_csv(out.read_text()).shape == (2, 2, 2)

    @pytest.mark.parametrize("argv", [
        ["sample-orbit", "--lambda", "0,1", "--y", "1,0"],
        ["sample-orbit", "--lambda", "1,0"],
        ["partition", "--lambda", "1,0", "--y", "1,0,0"],
        ["sample-orbit", "--lambda", "1,0", "--y", "1,0", "--xi", "-1"],
    ])
    def test_domain_errors_exit_2(self, argv, capsys):
        code, _, err = run_cli(argv, capsys)
        assert code == 2 and err.startswith("error:")

    def test_parse_error_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "A.json"
        bad.write_text("{not json")
        code, _, err = run_cli(["dp-lowrank", "--A-file", str(bad)], capsys)
        assert code == 2 and "A.json:1:" in err

    def test_infeasible_triangle_exit_2(self, tmp_path, capsys):
        path = tmp_path / "P.json"
        path.write_text(json.dumps({"n": 2, "rows": [[2], [1, 0]]}))
        code, _, _ = run_cli(["sample-fiber", "--P-file", str(path)], capsys)
        assert code == 2

    def test_validate_writes_report_and_series(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        code, _, err = run_cli(["validate", "dp-sensitivity", "--num", "200", "--out", str(out)], capsys)
        assert code == 1  # below the nominal sample size, so flagged
        assert "[FAIL] sample-size" in err and "[PASS] dp-sensitivity-max" in err
        report = json.loads(out.read_text())
        assert report["suite"] == "dp-sensitivity" and not report["passed"]
        assert list(tmp_path.glob("report_*.csv"))

    def test_validate_passes_at_nominal_size(self, capsys):
        code, out, err = run_cli(["validate", "dp-sensitivity"], capsys)
        assert code == 0 and json.loads(out)["passed"]
        assert "[PASS] dp-sensitivity-max" in err
