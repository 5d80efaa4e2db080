import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from rankindep.cli import EXIT_DEGENERATE, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from rankindep.combined import TestOutcome, univariate_test
from rankindep.montecarlo import ScenarioSpec, generate_batch


def write_csv(path, data, header=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        w.writerows(np.asarray(data).tolist())
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestTestCommand:
    def test_comonotone_kendall(self, tmp_path, capsys):
        x = np.arange(30.0)
        path = write_csv(tmp_path / "d.csv", np.c_[x, x**2], header=["a", "b"])
        code, out, _ = run(capsys, "test", "--input", path, "--columns-x", "a", "--columns-y", "b",
                           "--method", "ck", "--seed", "1")
        assert code == EXIT_OK
        d = json.loads(out)
        assert d["components"]["kendall"] == pytest.approx(1.5)
        assert d["p_value"] < 1e-10
        assert d["seed"] == 1

    def test_roundtrip_equals_library(self, tmp_path, capsys, rng):
        data = rng.normal(size=(40, 3))
        path = write_csv(tmp_path / "d.csv", data)
        code, out, _ = run(capsys, "test", "--input", path, "--columns-x", "0", "--columns-y", "2",
                           "--method", "cq", "--seed", "5")
        assert code == EXIT_OK
        parsed = TestOutcome.from_dict(json.loads(out))
        assert parsed == univariate_test(data[:, 0], data[:, 2], method="cq", tie_seed=5)

    def test_seed_recorded_when_omitted(self, tmp_path, capsys, rng):
        path = write_csv(tmp_path / "d.csv", rng.normal(size=(10, 2)))
        _, out, _ = run(capsys, "test", "--input", path)
        assert isinstance(json.loads(out)["seed"], int)

    def test_csv_output_to_file(self, tmp_path, capsys, rng):
        path = write_csv(tmp_path / "d.csv", rng.normal(size=(10, 2)))
        target = tmp_path / "out.csv"
        code, out, _ = run(capsys, "test", "--input", path, "--format", "csv", "--output", str(target),
                           "--method", "xisym", "--seed", "2")
        assert code == EXIT_OK and out == ""
        rows = list(csv.DictReader(io.StringIO(target.read_text())))
        assert rows[0]["method"] == "xisym" and 0 <= float(rows[0]["p_value"]) <= 1

    def test_asymmetric_example(self, tmp_path, capsys):
        rng = np.random.default_rng(7)
        x = rng.uniform(-1, 1, 100)
        y = np.abs(x) + 0.1 * rng.standard_normal(100)
        path = write_csv(tmp_path / "d.csv", np.c_[x, y], header=["x", "y"])
        p = {}
        for cx, cy in (("x", "y"), ("y", "x")):
            code, out, _ = run(capsys, "test", "--input", path, "--columns-x", cx, "--columns-y", cy,
                               "--method", "cs_asym", "--seed", "0")
            assert code == EXIT_OK
            p[cx] = json.loads(out)["p_value"]
        assert p["x"] < 1e-10 < p["y"]
        assert p["x"] < p["y"] * 1e-6

    def test_non_rejection_is_success(self, tmp_path, capsys, rng):
        path = write_csv(tmp_path / "d.csv", rng.normal(size=(30, 2)))
        code, out, _ = run(capsys, "test", "--input", path, "--seed", "3")
        assert code == EXIT_OK


class TestErrors:
    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(capsys, "test", "--input", str(tmp_path / "none.csv"))
        assert code == EXIT_IO and "cannot read" in err

    def test_non_numeric(self, tmp_path, capsys):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,2\n3,oops\n4,5\n")
        code, _, err = run(capsys, "test", "--input", str(p))
        assert code == EXIT_USAGE and "non-numeric" in err

    def test_too_few_rows(self, tmp_path, capsys):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,2\n")
        code, _, err = run(capsys, "test", "--input", str(p))
        assert code == EXIT_DEGENERATE and "at least 2 rows" in err

    def test_distinct_codes(self):
        assert len({EXIT_USAGE, EXIT_IO, EXIT_DEGENERATE}) == 3

    def test_unknown_column(self, tmp_path, capsys, rng):
        path = write_csv(tmp_path / "d.csv", rng.normal(size=(5, 2)), header=["a", "b"])
        code, _, err = run(capsys, "test", "--input", path, "--columns-x", "zzz")
        assert code == EXIT_USAGE

    def test_bad_flag_exits_with_usage(self):
        with pytest.raises(SystemExit) as exc:
            main(["test", "--method", "nope", "--input", "x.csv"])
        assert exc.value.code == EXIT_USAGE

    def test_unwritable_output(self, tmp_path, capsys, rng):
        path = write_csv(tmp_path / "d.csv", rng.normal(size=(5, 2)))
        code, _, _ = run(capsys, "test", "--input", path, "--output", str(tmp_path / "no" / "dir" / "o.json"))
        assert code == EXIT_IO


class TestMvtest:
    def test_underpowered(self, tmp_path, capsys, rng):
        path = write_csv(tmp_path / "m.csv", rng.normal(size=(20, 4)))
        code, _, err = run(capsys, "mvtest", "--input", path, "--columns-x", "0,1", "--columns-y", "2,3",
                           "--permutations", "50")
        assert code == EXIT_USAGE and "underpowered" in err

    def test_records_plan(self, tmp_path, capsys, rng):
        path = write_csv(tmp_path / "m.csv", rng.normal(size=(25, 4)))
        code, out, _ = run(capsys, "mvtest", "--input", path, "--columns-x", "0,1", "--columns-y", "2,3",
                           "--permutations", "200", "--seed", "9")
        d = json.loads(out)
        assert code == EXIT_OK and d["seed"] == 9 and d["details"]["B"] == 200
        assert d["details"]["sigma_kendall"] > 0 and d["p_source"] == "permutation"

    def test_one_dimensional_reduction(self, tmp_path, capsys, rng):
        path = write_csv(tmp_path / "d.csv", rng.normal(size=(40, 2)))
        _, uni, _ = run(capsys, "test", "--input", path, "--method", "ck", "--seed", "1")
        _, mv, _ = run(capsys, "mvtest", "--input", path, "--method", "ck", "--mode", "borel_analytic",
                       "--seed", "1")
        u, m = json.loads(uni), json.loads(mv)
        assert u["statistic"] == m["statistic"] and u["p_value"] == m["p_value"]

    def test_overlapping_columns(self, tmp_path, capsys, rng):
        path = write_csv(tmp_path / "m.csv", rng.normal(size=(20, 3)))
        code, _, _ = run(capsys, "mvtest", "--input", path, "--columns-x", "0,1", "--columns-y", "1,2")
        assert code == EXIT_USAGE

    def test_degenerate(self, tmp_path, capsys, rng):
        data = np.c_[np.ones((10, 2)), rng.normal(size=(10, 2))]
        path = write_csv(tmp_path / "m.csv", data)
        code, _, err = run(capsys, "mvtest", "--input", path, "--columns-x", "0,1", "--columns-y", "2,3",
                           "--permutations", "100", "--seed", "1")
        assert code == EXIT_DEGENERATE and "degenerate" in err

    @pytest.mark.xfail(strict=True, reason="Grothe-mode power in linear setting 1 is about 0.72 at n = 60")
    def test_setting1_detection_rate(self, tmp_path, capsys):
        X, Y = generate_batch(ScenarioSpec("M1", 60), 100, np.random.default_rng(100))
        hits = 0
        for i in range(100):
            path = write_csv(tmp_path / "m.csv", np.c_[X[i], Y[i]])
            _, out, _ = run(capsys, "mvtest", "--input", path, "--columns-x", "0,1,2", "--columns-y", "3,4,5",
                            "--permutations", "200", "--seed", str(i))
            hits += json.loads(out)["p_value"] < 0.05
        assert hits >= 80


class TestSimulateAndScatter:
    def test_byte_identical(self, tmp_path, capsys):
        outs = []
        for k in range(2):
            target = tmp_path / f"r{k}.json"
            code, _, _ = run(capsys, "simulate", "--scenario", "U2", "--n", "50", "--reps", "1000",
                             "--seed", "17", "--output", str(target))
            assert code == EXIT_OK
            outs.append(target.read_bytes())
        assert outs[0] == outs[1]
        d = json.loads(outs[0])
        assert d["seed"] == 17 and d["scenario"] == "U2"
        assert {"version", "numpy", "scipy", "python"} <= set(d["provenance"])

    def test_csv_and_alpha(self, capsys):
        code, out, _ = run(capsys, "simulate", "--scenario", "null_uni", "--n", "20", "--reps", "1000",
                           "--tests", "ck,xisym", "--alpha", "0.1", "--format", "csv", "--seed", "1")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == EXIT_OK and [r["test"] for r in rows] == ["ck", "xisym"]
        assert all(r["alpha"] == "0.1" for r in rows)

    def test_reps_below_minimum(self, capsys):
        code, _, err = run(capsys, "simulate", "--scenario", "U1", "--n", "20", "--reps", "10")
        assert code == EXIT_USAGE and "reps" in err

    def test_unknown_scenario(self):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--scenario", "U7", "--n", "20"])
        assert exc.value.code == EXIT_USAGE

    def test_scatter(self, capsys):
        code, out, _ = run(capsys, "scatter", "--pair", "quadrant,xi", "--n", "30", "--reps", "150",
                           "--seed", "3", "--format", "csv")
        lines = out.strip().splitlines()
        assert code == EXIT_OK and lines[0] == "quadrant,xi" and len(lines) == 151
        _, js, _ = run(capsys, "scatter", "--pair", "quadrant,xi", "--n", "30", "--reps", "150", "--seed", "3")
        assert np.allclose(json.loads(js)["values"], np.loadtxt(io.StringIO(out), delimiter=",", skiprows=1))


def test_module_entry_point(tmp_path):
    path = write_csv(tmp_path / "d.csv", np.random.default_rng(0).normal(size=(12, 2)))
    res = subprocess.run([sys.executable, "-m", "rankindep", "test", "--input", path, "--seed", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["method"] == "ck"
