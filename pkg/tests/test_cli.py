import json
import subprocess
import sys

import numpy as np
import pytest

from modelt.cli import SWEEP_HEADER, main, parse_graph_spec
from modelt.errors import InvalidInput
from modelt.graph import complete, path, star


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestGraphSpec:
    def test_families(self):
        assert parse_graph_spec("star:5") == star(5)
        assert parse_graph_spec("complete:4") == complete(4)
        assert parse_graph_spec("path:2") == path(2)

    def test_gnp(self):
        assert parse_graph_spec("gnp:10:0.4:7").connected

    def test_file(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("1 2\n2 3\n")
        assert parse_graph_spec(f"file:{f}") == path(3)

    @pytest.mark.parametrize("spec", ["star", "star:x", "wheel:5", "gnp:5:0.5", "gnp:5:2:1", "star:1"])
    def test_bad(self, spec):
        with pytest.raises(Exception):
            parse_graph_spec(spec)


class TestSimulate:
    def test_summary_rows(self, tmp_path, capsys):
        out = tmp_path / "traj.csv"
        code, stdout, _ = _run(capsys, "simulate", "--graph", "star:50", "--eta", "0.2", "--mu", "0.95",
                               "--k", "1", "--steps", "10000", "--seed", "42", "--out", str(out), "--summary")
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,mean,var,min,max,total,debt_count"
        assert len(lines) == 10_002
        assert stdout.startswith("steps=10000 final_total=")
        assert (tmp_path / "traj.csv.manifest.json").is_file()

    def test_full_and_records(self, tmp_path, capsys):
        out, rec = tmp_path / "t.csv", tmp_path / "r.csv"
        code, _, _ = _run(capsys, "simulate", "--graph", "path:3", "--eta", "1", "--mu", "1", "--k", "1",
                          "--steps", "5", "--w0", "list:1,2,3", "--out", str(out), "--records", str(rec))
        assert code == 0
        assert out.read_text().splitlines()[:2] == ["t,w_1,w_2,w_3", "0,1,2,3"]
        assert rec.read_text().splitlines()[0] == "t,i,j,seller,buyer,q"
        assert len(rec.read_text().splitlines()) == 6

    def test_missing_file(self, capsys):
        code, _, err = _run(capsys, "simulate", "--graph", "file:missing.txt", "--eta", "1", "--mu", "1",
                            "--k", "1", "--steps", "1")
        assert code == 2 and "missing.txt" in err

    def test_disconnected(self, tmp_path, capsys):
        f = tmp_path / "g.txt"
        f.write_text("n 4\n1 2\n3 4\n")
        code, _, _ = _run(capsys, "simulate", "--graph", f"file:{f}", "--eta", "1", "--mu", "1",
                          "--k", "1", "--steps", "1")
        assert code == 3

    def test_overflow(self, capsys):
        code, _, err = _run(capsys, "simulate", "--graph", "path:2", "--eta", "1", "--mu", "1e200",
                            "--k", "1", "--steps", "10")
        assert code == 4 and "numeric" in err

    def test_schedule_files(self, tmp_path, capsys):
        mu = tmp_path / "mu.txt"
        mu.write_text("1\n2\n0.5\n")
        out = tmp_path / "t.csv"
        code, _, _ = _run(capsys, "simulate", "--graph", "path:2", "--eta", "0", "--k", "0",
                          "--mu-file", str(mu), "--steps", "3", "--w0", "const:1", "--out", str(out))
        assert code == 0
        totals = [sum(map(float, l.split(",")[1:])) for l in out.read_text().splitlines()[1:]]
        assert totals == [2.0, 2.0, 4.0, 2.0]

    def test_schedule_too_short(self, tmp_path, capsys):
        mu = tmp_path / "mu.txt"
        mu.write_text("1\n")
        code, _, _ = _run(capsys, "simulate", "--graph", "path:2", "--eta", "0", "--k", "0",
                          "--mu-file", str(mu), "--steps", "3")
        assert code == 2

    def test_missing_param(self, capsys):
        code, _, _ = _run(capsys, "simulate", "--graph", "path:2", "--eta", "1", "--k", "1", "--steps", "3")
        assert code == 2

    def test_bad_flag(self, capsys):
        assert _run(capsys, "simulate", "--bogus")[0] == 2


class TestStability:
    def test_asymptotic(self, capsys):
        code, out, _ = _run(capsys, "stability", "--asymptotic", "--mu", "0.9", "--k", "1", "--eta", "0.2")
        assert code == 0
        obj = json.loads(out)
        assert obj["class"] == "StableAllGraphs"
        assert obj["criterion_value"] == pytest.approx(0.99, rel=1e-14)

    def test_single_edge(self, capsys):
        code, out, _ = _run(capsys, "stability", "--graph", "path:2", "--mu", "0.5", "--k", "2", "--eta", "3")
        obj = json.loads(out)
        assert code == 0 and obj["class"] == "Unstable"
        assert obj["dominant_modulus"] == pytest.approx(3.5, rel=1e-12)
        assert list(obj) == ["lambda1", "a", "dominant_modulus", "class"]

    def test_zero_eta(self, capsys):
        assert _run(capsys, "stability", "--graph", "star:3", "--mu", "0.5", "--k", "1", "--eta", "0")[0] == 2

    def test_schedule_flag_rejected(self, capsys):
        assert _run(capsys, "stability", "--graph", "star:3", "--mu-file", "x", "--k", "1", "--eta", "1")[0] == 2

    def test_out_of_scope(self, capsys):
        assert _run(capsys, "stability", "--asymptotic", "--mu", "1.5", "--k", "1", "--eta", "1")[0] == 2

    def test_needs_target(self, capsys):
        assert _run(capsys, "stability", "--mu", "0.5", "--k", "1", "--eta", "1")[0] == 2


class TestSpectrum:
    def test_star(self, capsys):
        code, out, _ = _run(capsys, "spectrum", "--graph", "star:5")
        obj = json.loads(out)
        assert code == 0
        assert obj["lambda1"] == pytest.approx(5, abs=1e-12)
        assert obj["lemma2_bound"] == 5 and obj["bound_holds"] is True

    def test_path(self, capsys):
        obj = json.loads(_run(capsys, "spectrum", "--graph", "path:2")[1])
        assert obj["eigenvalues"] == pytest.approx([0, 2], abs=1e-12)

    def test_gnp(self, capsys):
        assert json.loads(_run(capsys, "spectrum", "--graph", "gnp:10:0.4:7")[1])["bound_holds"] is True

    def test_dense_cap(self, capsys):
        assert _run(capsys, "spectrum", "--graph", "star:2500")[0] == 2

    def test_lambda1_only(self, capsys):
        code, out, _ = _run(capsys, "spectrum", "--graph", "star:2500", "--lambda1-only")
        obj = json.loads(out)
        assert code == 0 and obj["lambda1"] == pytest.approx(2500, rel=1e-9)
        assert obj["eigenvalues"] is None


class TestPhaseDiagram:
    def test_default(self, tmp_path, capsys):
        out = tmp_path / "grid.csv"
        code, _, _ = _run(capsys, "phase-diagram", "--k", "1", "--out", str(out))
        lines = out.read_text().splitlines()
        assert code == 0 and lines[0] == "eta,mu,value,class" and len(lines) == 160_001
        for line in lines[1:]:
            eta, mu, _, cls = line.split(",")
            if cls == "StableAllGraphs":
                assert abs(float(mu) * (1 + float(eta) / 2)) < 1

    def test_graph_mode(self, tmp_path, capsys):
        from modelt.dynamics import Params
        from modelt.stability import classify
        out = tmp_path / "grid.csv"
        code, _, _ = _run(capsys, "phase-diagram", "--mode", "graph", "--graph", "complete:6",
                          "--resolution", "7", "--out", str(out))
        assert code == 0
        g = complete(6)
        for line in out.read_text().splitlines()[1:]:
            eta, mu, value, cls = line.split(",")
            if cls != "Excluded":
                assert cls == classify(g, Params(float(eta), float(mu), 1.0)).cls.value

    def test_low_resolution(self, tmp_path, capsys):
        assert _run(capsys, "phase-diagram", "--resolution", "1", "--out", str(tmp_path / "g"))[0] == 2

    def test_needs_out(self, capsys):
        assert _run(capsys, "phase-diagram")[0] == 2


class TestMeanfield:
    def test_trajectory(self, tmp_path, capsys):
        out = tmp_path / "mf.csv"
        code, _, _ = _run(capsys, "meanfield", "--graph", "star:4", "--eta", "0.2", "--mu", "0.9",
                          "--k", "1", "--steps", "10", "--out", str(out))
        lines = out.read_text().splitlines()
        assert code == 0 and lines[0] == "t,w_1,w_2,w_3,w_4" and len(lines) == 12

    def test_deviation_rate(self, capsys):
        code, out, _ = _run(capsys, "meanfield", "--graph", "star:10", "--eta", "0.2", "--mu", "0.9",
                            "--k", "1", "--deviation-rate")
        obj = json.loads(out)
        assert code == 0 and obj["estimated"] == pytest.approx(1.0, rel=0.01)


class TestSweep:
    def test_rows(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("MODEL_T_THREADS", "2")
        out = tmp_path / "sweep.csv"
        code, _, _ = _run(capsys, "sweep", "--graph", "cycle:5", "--eta", "0.1,0.5", "--mu", "1",
                          "--k", "1", "--steps", "200", "--replicates", "3", "--out", str(out))
        lines = out.read_text().splitlines()
        assert code == 0 and lines[0] == SWEEP_HEADER and len(lines) == 7
        for line in lines[1:]:
            fields = line.split(",")
            assert float(fields[5]) == pytest.approx(float(fields[6]), rel=1e-12)

    def test_thread_count_irrelevant(self, tmp_path, capsys, monkeypatch):
        outs = []
        for threads in ("1", "3"):
            monkeypatch.setenv("MODEL_T_THREADS", threads)
            out = tmp_path / f"s{threads}.csv"
            _run(capsys, "sweep", "--graph", "star:6", "--eta", "0.3", "--mu", "0.99,1.0",
                 "--k", "1", "--steps", "100", "--seeds", "4,9", "--out", str(out))
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_bad_threads(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("MODEL_T_THREADS", "many")
        code, _, _ = _run(capsys, "sweep", "--graph", "star:3", "--eta", "1", "--mu", "1", "--k", "1",
                          "--steps", "1", "--out", str(tmp_path / "s.csv"))
        assert code == 2


class TestReplay:
    def test_byte_identical(self, tmp_path, capsys):
        out, rec = tmp_path / "t.csv", tmp_path / "r.csv"
        _run(capsys, "simulate", "--graph", "gnp:12:0.4:3", "--eta", "0.4", "--mu", "0.999", "--k", "0.5",
             "--steps", "500", "--seed", "7", "--out", str(out), "--records", str(rec))
        before = out.read_bytes(), rec.read_bytes()
        out.unlink()
        rec.unlink()
        code, _, _ = _run(capsys, "replay", str(tmp_path / "t.csv.manifest.json"))
        assert code == 0 and (out.read_bytes(), rec.read_bytes()) == before

    def test_manifest_contents(self, tmp_path, capsys):
        out = tmp_path / "v.json"
        man = tmp_path / "m.json"
        _run(capsys, "stability", "--asymptotic", "--mu", "0.9", "--k", "1", "--eta", "0.2",
             "--out", str(out), "--manifest", str(man))
        data = json.loads(man.read_text())
        assert data["command"] == "stability" and data["resolved"]["mu"] == 0.9
        assert data["outputs"] == [str(out)]
        assert {"tool", "version", "backend", "argv"} <= set(data)

    def test_missing_manifest(self, tmp_path, capsys):
        assert _run(capsys, "replay", str(tmp_path / "nope.json"))[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "modelt", "stability", "--asymptotic", "--mu", "0.9",
                           "--k", "2", "--eta", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["class"] == "UnstableSomeGraph"
