import json

import pytest

from hyperboot.cli import main
from hyperboot.model import Hypergraph, ModelParams, critical_size


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestThreshold:
    def test_prints_value(self, capsys):
        code, out, _ = run_cli(
            capsys, "threshold", "--n", "1000000", "--k", "2", "--r", "2", "--p", "1e-4"
        )
        assert code == 0
        assert float(out.strip()) == 50.0

    def test_json_and_p_exponent(self, capsys):
        code, out, _ = run_cli(
            capsys, "threshold", "--n", "200000", "--r", "2", "--p-exponent", "0.7", "--json"
        )
        assert code == 0
        obj = json.loads(out)
        n = 200000
        expected = critical_size(ModelParams(n=n, k=2, r=2, p=n**-0.7)).value
        assert obj["b"] == pytest.approx(expected)
        assert obj["regime_ok"] is True


class TestSample:
    def test_writes_hypergraph_file(self, tmp_path, capsys):
        out_file = tmp_path / "graph.txt"
        code, _, _ = run_cli(
            capsys, "sample", "--n", "40", "--k", "3", "--p", "0.002",
            "--seed", "5", "--out", str(out_file),
        )
        assert code == 0
        h = Hypergraph.from_text(out_file.read_text())
        h.validate()
        assert h.n == 40 and h.k == 3


class TestRun:
    def test_json_outcome(self, capsys):
        code, out, _ = run_cli(
            capsys, "run", "--n", "500", "--k", "2", "--r", "2", "--p", "0.01",
            "--a", "30", "--seed", "3", "--snapshot",
        )
        assert code == 0
        obj = json.loads(out)
        assert {"final_infected", "T", "rounds", "class_sizes", "config"} <= set(obj)
        assert obj["config"]["a"] == 30
        assert obj["final_infected"] >= 30


class TestTrajectoryAndClassify:
    def test_trajectory_csv(self, capsys):
        code, out, _ = run_cli(
            capsys, "trajectory", "--n", "1000000", "--k", "2", "--r", "2",
            "--p", "1e-4", "--a-over-b", "0.5", "--t-max", "50",
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[1] == "t,a_0,a_1,a_2,delta"

    def test_classify_json(self, capsys):
        code, out, _ = run_cli(
            capsys, "classify", "--n", "1000000", "--k", "2", "--r", "2",
            "--p", "1e-4", "--a", "25",
        )
        assert code == 0
        obj = json.loads(out)
        assert obj["label"] == "subcritical"
        assert obj["a_star"] == pytest.approx(29.2893, abs=1e-3)


class TestGw:
    def test_subcritical_estimate(self, capsys):
        code, out, _ = run_cli(
            capsys, "gw", "--n", "1000000", "--k", "2", "--r", "2", "--p", "1e-4",
            "--a-over-b", "0.5", "--trials", "500", "--seed", "9",
        )
        assert code == 0
        obj = json.loads(out)
        assert obj["mu"] < 1.0
        assert obj["mean_total"] == pytest.approx(obj["wald_mean"], rel=0.5)

    def test_supercritical_is_an_error(self, capsys):
        code, _, err = run_cli(
            capsys, "gw", "--n", "1000000", "--k", "2", "--r", "2", "--p", "1e-4",
            "--a-over-b", "2.0", "--trials", "100", "--seed", "9",
        )
        assert code == 1
        assert "supercritical" in err


class TestSweepAndDecay:
    def test_sweep_csv(self, tmp_path, capsys):
        out_file = tmp_path / "sweep.csv"
        code, _, _ = run_cli(
            capsys, "sweep", "--n", "2000", "--k", "2", "--r", "2", "--p", "0.003",
            "--a-over-b", "0.5,2.0", "--trials", "3", "--seed", "11",
            "--out", str(out_file),
        )
        assert code == 0
        lines = out_file.read_text().strip().split("\n")
        assert lines[0].startswith("# hyperboot sweep")
        assert lines[1] == "point,a_over_b,a,trial,seed,final_infected,T,class"
        assert len(lines) == 2 + 6

    def test_decay_csv(self, capsys):
        code, out, _ = run_cli(
            capsys, "decay", "--n-grid", "600,1200", "--p-exponent", "0.6",
            "--a-over-b", "0.4,2.4", "--trials", "4", "--seed", "13",
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[1].startswith("n,p,b,")
        assert len(lines) == 2 + 4
