import csv
import io
import json

import numpy as np
import pytest

from wsbmtest import validation
from wsbmtest.cli import main
from wsbmtest.graph import WeightedGraph, format_edge_list, read_edge_list
from wsbmtest.statistics import slc_statistic


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def graph_file(tmp_path):
    rng = np.random.default_rng(0)
    w = np.triu(rng.exponential(1.0, (20, 20)), 1)
    path = tmp_path / "g.txt"
    path.write_text(format_edge_list(WeightedGraph(w + w.T)))
    return path


class TestTestCommand:
    def test_all_json(self, capsys, graph_file):
        code, out, _ = run(capsys, "test", str(graph_file), "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert [r["test"] for r in doc["reports"]] == ["slc1", "slc2", "slmc"]
        assert doc["config"]["k"] == 3 and doc["config"]["m"] == 2

    def test_k4(self, capsys, graph_file):
        code, out, _ = run(capsys, "test", str(graph_file), "--stat", "slc", "--k", "4", "--format", "csv")
        assert code == 0
        row = next(csv.DictReader(io.StringIO(out)))
        g = read_edge_list(graph_file)
        assert float(row["statistic"]) == pytest.approx(slc_statistic(g, 1, 4, "bruteforce"), rel=1e-10)

    def test_other_statistics(self, capsys, graph_file):
        for stat in ("spectral", "spectral_combined", "slmc"):
            code, out, _ = run(capsys, "test", str(graph_file), "--stat", stat, "--t0", "1.0")
            assert code == 0 and "dslc" in out
        code, out, _ = run(capsys, "test", str(graph_file), "--stat", "spectral_combined")
        assert "unstable" in out

    def test_zero_variance_exit(self, capsys, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("1 2 1\n2 3 1\n1 3 1\n")
        code, _, err = run(capsys, "test", str(p))
        assert code == 3 and "zero variance" in err

    def test_input_errors(self, capsys, tmp_path):
        assert run(capsys, "test", str(tmp_path / "missing.txt"))[0] == 2
        p = tmp_path / "bad.txt"
        p.write_text("1 2 x\n")
        assert run(capsys, "test", str(p))[0] == 2
        with pytest.raises(SystemExit) as exc:
            main(["test", str(p), "--bogus"])
        assert exc.value.code == 2


class TestSimulate:
    args = ("simulate", "--n", "30", "--reps", "8", "--grid", "30:0:0;30:0.2:0;40:0.2:0", "--format", "csv")

    def test_csv_rows(self, capsys):
        code, out, _ = run(capsys, *self.args)
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and len(rows) == 9
        assert {"n", "eps1", "eps2", "family", "test", "k", "rejection_rate", "se",
                "stat_mean", "stat_var"} <= set(rows[0])

    def test_deterministic(self, capsys, monkeypatch):
        first = run(capsys, *self.args, "--seed", "7")[1]
        assert run(capsys, *self.args, "--seed", "7")[1] == first
        assert run(capsys, *self.args, "--seed", "7", "--threads", "4")[1] == first
        monkeypatch.setenv("WSBM_SEED", "7")
        monkeypatch.setenv("WSBM_THREADS", "3")
        assert run(capsys, *self.args)[1] == first
        assert run(capsys, *self.args, "--seed", "8")[1] != first

    def test_config_files(self, capsys, tmp_path):
        kv = tmp_path / "sim.cfg"
        kv.write_text("# cell\nn = 30\nfamily = gamma\nreps = 4\ntests = slc1,slc2\nseed = 3\n")
        js = tmp_path / "sim.json"
        js.write_text(json.dumps({"n": 30, "family": "gamma", "reps": 4, "tests": ["slc1", "slc2"],
                                  "seed": 3}))
        a = run(capsys, "simulate", "--config", str(kv), "--format", "json")
        b = run(capsys, "simulate", "--config", str(js), "--format", "json")
        assert a[0] == b[0] == 0 and a[1] == b[1]
        doc = json.loads(a[1])
        assert doc["config"]["lam"] == [4.0, 28.0] and len(doc["rows"]) == 2
        # flags override the file
        c = run(capsys, "simulate", "--config", str(kv), "--reps", "5", "--format", "json")
        assert json.loads(c[1])["config"]["reps"] == 5

    def test_bad_config(self, capsys, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("n = 30\ncolour = red\n")
        assert run(capsys, "simulate", "--config", str(p))[0] == 2
        assert run(capsys, "simulate", "--n", "30", "--family", "mixture", "--lam", "1,1")[0] == 2
        assert run(capsys, "simulate", "--grid", "30:0")[0] == 2


class TestLimits:
    def test_regimes(self, capsys):
        code, out, _ = run(capsys, "limits", "--tau", "1", "--d-grid", "0.5,1.0,1.5", "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0
        assert [r["regime_weighted"] for r in rows] == ["undetectable", "boundary", "detectable"]

    def test_ratio(self, capsys):
        code, out, _ = run(capsys, "limits", "--tau", "1", "--d-grid", "0.5,2", "--t0", "1.594",
                           "--format", "json")
        doc = json.loads(out)
        assert all(abs(r["ratio"] - 1.544) < 1e-3 for r in doc["rows"])

    def test_two_parameter(self, capsys):
        code, out, _ = run(capsys, "limits", "--family", "normal", "--tau", "0.5,-0.5",
                           "--d-grid", "0.5,1", "--d2-grid", "0,1", "--format", "csv")
        assert code == 0 and len(list(csv.DictReader(io.StringIO(out)))) == 4

    def test_usage_errors(self, capsys):
        assert run(capsys, "limits", "--tau", "1", "--d-grid", "")[0] == 2
        assert run(capsys, "limits", "--tau", "-1", "--d-grid", "1")[0] == 2
        assert run(capsys, "limits", "--family", "normal", "--tau", "1", "--d-grid", "1")[0] == 2


class TestDichotomize:
    def test_values(self, capsys):
        doc = json.loads(run(capsys, "dichotomize", "--tau", "1", "--format", "json")[1])
        assert abs(doc["t0_star"] - 1.594) < 1e-3 and abs(doc["loss_factor"] - 1.544) < 1e-3
        doc = json.loads(run(capsys, "dichotomize", "--tau", "2", "--format", "json")[1])
        assert abs(doc["t0_star"] - 0.797) < 1e-3

    def test_domain(self, capsys):
        assert run(capsys, "dichotomize", "--tau", "0")[0] == 2
        assert run(capsys, "dichotomize", "--family", "gamma3", "--tau", "1")[0] == 2


class TestValidate:
    @pytest.mark.parametrize("suite", ["cycles", "families", "limits"])
    def test_suites_pass(self, capsys, suite):
        code, out, _ = run(capsys, "validate", "--suite", suite, "--format", "json")
        doc = json.loads(out)
        assert code == 0 and doc["passed"] and doc["checks"]

    def test_null_calibration_deterministic(self, capsys):
        args = ("validate", "--suite", "null-calibration", "--reps", "60", "--seed", "1", "--format", "json")
        a = run(capsys, *args, "--threads", "1")
        b = run(capsys, *args, "--threads", "4")
        assert a == b
        assert json.loads(a[1])["config"]["reps"] == 60

    def test_real_data_policy_report(self, capsys, tmp_path, monkeypatch):
        rng = np.random.default_rng(4)
        lines = [f"{i} {j} {rng.integers(1, 5)}" for i in range(1, 16) for j in range(i + 1, 16)
                 if rng.random() < 0.5]
        lines += [f"{j} {i} 9" for i, j in ((1, 2), (3, 5), (4, 9))]
        p = tmp_path / "net.txt"
        p.write_text("\n".join(lines) + "\n")
        target = validation.real_data_statistics(p, "max")
        monkeypatch.setattr(validation, "REAL_DATA_TARGET", target)
        code, out, _ = run(capsys, "validate", "--suite", "real-data", "--graph", str(p), "--format", "json")
        doc = json.loads(out)
        assert code == 0 and "max" in doc["note"] and "sum" not in doc["note"]
        monkeypatch.setattr(validation, "REAL_DATA_TARGET", {"slc1": 1e6, "slc2": 1e6, "slmc": 1e6})
        code, out, _ = run(capsys, "validate", "--suite", "real-data", "--graph", str(p))
        assert code == 4 and "no documented" in out
        assert run(capsys, "validate", "--suite", "real-data")[0] == 2
