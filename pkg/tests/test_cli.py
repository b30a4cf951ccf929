import json
import subprocess
import sys

import pytest

from besovmhd.cli import ExperimentManifest, calibrate_constants, main, run_manifest
from besovmhd.corpus import DataSpec
from besovmhd.fields import Grid
from besovmhd.io import write_snapshot


def report(path):
    return json.loads(path.read_text())


class TestCommands:
    def test_verify_filters(self, tmp_path):
        out, phi = tmp_path / "r.json", tmp_path / "phi.csv"
        assert main(["--no-timestamp", "verify-filters", "--report-out", str(out), "--dump-phi", str(phi)]) == 0
        r = report(out)
        assert r["all_checks_passed"] and r["band"] == [-1, 3]
        assert r["schema_version"] == "1.0" and "timestamp" not in r
        assert phi.read_text().startswith("j,k,value\n")

    def test_too_coarse_grid_is_module_error(self, tmp_path):
        assert main(["verify-filters", "--grid", "8", "--report-out", str(tmp_path / "r.json")]) == 3
        assert not (tmp_path / "r.json").exists()

    def test_heat_check(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["--no-timestamp", "heat-check", "--grid", "32", "--T", "0.1", "--report-out", str(out)]) == 0
        assert report(out)["smoothing_spread"] < 4

    def test_lifespan_from_snapshot(self, tmp_path):
        g = Grid(2, 32)
        u, b = DataSpec(100, 0.5, 0.1).build(g)
        snap = tmp_path / "d.bin"
        write_snapshot(snap, {"u": u, "b": b})
        out = tmp_path / "r.json"
        assert main(["--no-timestamp", "lifespan", "--snapshot-in", str(snap), "--report-out", str(out)]) == 0
        lf = report(out)["lifespan"]
        assert lf["branch"] == "large_data" and lf["j0"] is not None

    def test_lifespan_seq_manifest(self, tmp_path):
        g = Grid(2, 32)
        u, b = DataSpec(100, 0.5, 0.1).build(g)
        write_snapshot(tmp_path / "lim.bin", {"u": u, "b": b})
        write_snapshot(tmp_path / "a.bin", {"u": u * 0.999, "b": b})
        write_snapshot(tmp_path / "b.bin", {"u": u, "b": b})
        man = tmp_path / "seq.txt"
        man.write_text("a.bin\nb.bin\nlimit: lim.bin\n")
        table = tmp_path / "t.csv"
        code = main(["--no-timestamp", "lifespan-seq", "--manifest", str(man), "--table-out", str(table),
                     "--gap-tol", "0", "--report-out", str(tmp_path / "r.json")])
        assert code == 0
        assert table.read_text().splitlines()[0] == "n,T_n,gap,j0_n"
        assert report(tmp_path / "r.json")["rows"][-1]["gap"] == 0.0

    def test_solve_writes_traces_and_plot(self, tmp_path):
        out, tr, svg = tmp_path / "r.json", tmp_path / "tr.csv", tmp_path / "d.svg"
        code = main(["--no-timestamp", "--plot", "solve", "--grid", "32", "--steps", "16", "--report-out", str(out),
                     "--traces-out", str(tr), "--plot-out", str(svg)])
        assert code == 0
        r = report(out)
        assert r["checks"] == {"converged": True, "H1": True, "H2": True, "divergence": True}
        assert tr.read_text().startswith("iteration,t,norm_name,value\n")
        assert svg.read_text().startswith("<svg")

    def test_osgood_demo_reports_failing_formula(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["--no-timestamp", "osgood-demo", "--count", "5", "--report-out", str(out),
                     "--table-out", str(tmp_path / "t.csv")]) == 0
        r = report(out)
        assert r["log_formula_dominates"] is False
        assert r["inverted_bound_min_slack"] >= -1e-8


class TestConfigHandling:
    def test_dt_larger_than_T_writes_nothing(self, tmp_path):
        out = tmp_path / "r.json"
        code = main(["solve", "--grid", "32", "--T", "0.01", "--dt", "0.02", "--report-out", str(out)])
        assert code == 2
        assert not out.exists()

    def test_missing_input(self, tmp_path):
        code = main(["lifespan", "--snapshot-in", str(tmp_path / "none.bin")])
        assert code == 2

    def test_config_precedence(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("# run settings\ngrid = 32\nseed = 4\n")
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["--config", str(cfg), "--no-timestamp", "verify-filters", "--report-out", str(a)]) == 0
        assert report(a)["params"]["grid"] == 32 and report(a)["params"]["seed"] == 4
        assert main(["--config", str(cfg), "--no-timestamp", "verify-filters", "--grid", "16",
                     "--report-out", str(b)]) == 0
        assert report(b)["params"]["grid"] == 16

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("colour = red\n")
        assert main(["--config", str(cfg), "verify-filters"]) == 2

    def test_deterministic_reports(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for p in (a, b):
            assert main(["--no-timestamp", "lifespan", "--grid", "32", "--seed", "3", "--report-out", str(p)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_manifest_validation(self):
        assert run_manifest(ExperimentManifest(kind="nonsense")) == 2
        assert run_manifest(ExperimentManifest(kind="lifespan", threads=0)) == 2


class TestCalibrate:
    def test_zero_corpus_returns_floor(self):
        with pytest.warns(RuntimeWarning):
            out = calibrate_constants([DataSpec(0, 0.0, 0.0)], Grid(2, 32), steps=8)
        assert (out["C1"], out["C2"]) == (1.0, 1.0)

    def test_empty_corpus(self):
        with pytest.raises(ValueError):
            calibrate_constants([], Grid(2, 32))


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "besovmhd", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify-filters" in res.stdout
