import json
import math

import numpy as np
import pytest

from cstirap.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main
from cstirap.dressed import dressed_frame
from cstirap.export import render, write_outputs
from cstirap.hamiltonian import stirap
from cstirap.presets import PRESETS, RunOptions, UnknownPresetError, list_presets, run_preset
from cstirap.propagator import propagate
from cstirap.sweep import AxisSpec, SweepResult, sweep2d

PRESET_IDS = ["fig2", "fig3ab", "fig3cd", "fig4", "fig6b", "fig6c", "fig7a", "fig7b", "fig8-9", "fig10",
              "fig11", "fig12", "fig13", "fig14", "fig15", "fig16", "fig17b", "fig17c", "fig18a",
              "fig18b", "fig19"]


@pytest.fixture(scope="module")
def trajectory():
    return propagate(stirap("CSTIRAP3", delta=0.14, alpha=1e-3))


class TestFormats:
    def test_trajectory_header(self, trajectory):
        header = render(trajectory).split("\n", 1)[0]
        assert header == ("t,re_a1,im_a1,re_a2,im_a2,re_a3,im_a3,rho11,rho22,rho33,"
                          "abs_rho12,abs_rho13,abs_rho23,norm")

    def test_frame_header(self, trajectory):
        df = dressed_frame(stirap("CSTIRAP3", delta=0.14, alpha=1e-3), trajectory)
        header = render(df).split("\n", 1)[0]
        assert header == "t,lambda1,lambda2,lambda3,pop_d1,pop_d2,pop_d3,V_12,V_13,V_23"

    def test_sweep_row_major(self):
        x = AxisSpec("delta", [1.0, 2.0, 3.0])
        y = AxisSpec("chirp", [10.0, 20.0])
        res = SweepResult(x, y, "rho33", np.arange(6.0).reshape(2, 3))
        lines = render(res).splitlines()
        assert lines[0] == "x,y,value"
        assert lines[1:] == ["1,10,0", "2,10,1", "3,10,2", "1,20,3", "2,20,4", "3,20,5"]

    def test_seventeen_significant_digits(self, trajectory):
        row = render(trajectory).splitlines()[500].split(",")
        parsed = np.array([float(f) for f in row])
        assert parsed[0] == trajectory.times[499]
        assert parsed[1] == trajectory.amplitudes[499, 0].real

    def test_json_mirrors_csv_and_nulls_nan(self):
        x = AxisSpec("delta", [0.0, 1.0])
        y = AxisSpec("chirp", [0.0])
        res = SweepResult(x, y, "rho33", np.array([[0.25, math.nan]]))
        doc = json.loads(render(res, "json"))
        assert doc["columns"] == ["x", "y", "value"]
        assert doc["rows"] == [[0.0, 0.0, 0.25], [1.0, 0.0, None]]

    def test_unknown_format(self, trajectory):
        with pytest.raises(ValueError):
            render(trajectory, "xml")

    def test_lf_line_endings_and_determinism(self, tmp_path, trajectory):
        a = write_outputs(trajectory, "csv", tmp_path / "a.csv").read_bytes()
        again = propagate(stirap("CSTIRAP3", delta=0.14, alpha=1e-3))
        b = write_outputs(again, "csv", tmp_path / "b.csv").read_bytes()
        assert a == b
        assert b"\r" not in a and a.endswith(b"\n")


def write_config(tmp_path, doc):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


class TestCli:
    def test_simulate_to_file(self, tmp_path):
        cfg = write_config(tmp_path, {"scheme": "STIRAP3"})
        out = tmp_path / "traj.csv"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_OK
        last = out.read_text().splitlines()[-1].split(",")
        assert float(last[9]) > 0.99

    def test_simulate_json_stdout(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"scheme": "STIRAP3", "samples": 5})
        assert main(["simulate", "--config", cfg, "--format", "json"]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["rows"]) == 5

    def test_dressed(self, tmp_path):
        cfg = write_config(tmp_path, {"scheme": "CSTIRAP4", "delta": 0.14, "alpha": -1e-3})
        out = tmp_path / "frame.csv"
        assert main(["dressed", "--config", cfg, "--out", str(out), "-v"]) == EXIT_OK
        assert out.read_text().startswith("t,lambda1,lambda2,lambda3,lambda4,pop_d1")

    def test_sweep_byte_identical_across_workers(self, tmp_path):
        doc = {"scheme": "CSTIRAP3", "sweep": {"x": {"name": "delta", "start": -0.2, "stop": 0.2, "num": 3},
                                               "y": {"name": "chirp", "values": [-1e-3, 1e-3]},
                                               "observable": "rho33"}}
        cfg = write_config(tmp_path, doc)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sweep", "--config", cfg, "--out", str(a)]) == EXIT_OK
        assert main(["sweep", "--config", cfg, "--out", str(b), "--workers", "2"]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
        assert len(a.read_text().splitlines()) == 7

    @pytest.mark.parametrize("doc", [{"scheme": "STIRAP3", "tau": -1}, {"scheme": "STIRAP3", "unknown": 1}])
    def test_config_errors_exit_2(self, tmp_path, doc, capsys):
        assert main(["simulate", "--config", write_config(tmp_path, doc)]) == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG

    def test_tol_override_out_of_range(self, tmp_path):
        cfg = write_config(tmp_path, {"scheme": "STIRAP3"})
        assert main(["simulate", "--config", cfg, "--tol", "1e-3"]) == EXIT_CONFIG

    def test_numeric_failure_exit_3(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"scheme": "STIRAP3", "Omega0": 1e15, "t_start": -70})
        assert main(["simulate", "--config", cfg]) == EXIT_NUMERIC
        assert "numerical failure" in capsys.readouterr().err

    def test_unknown_preset_exit_2(self, tmp_path):
        assert main(["preset", "--id", "fig99", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_list_presets(self, capsys):
        assert main(["list-presets"]) == EXIT_OK
        ids = [line.split("\t")[0] for line in capsys.readouterr().out.splitlines()]
        assert ids == PRESET_IDS

    def test_preset_writes_manifest(self, tmp_path):
        assert main(["preset", "--id", "fig11", "--out", str(tmp_path)]) == EXIT_OK
        manifest = json.loads((tmp_path / "fig11_manifest.json").read_text())
        assert manifest["preset"] == "fig11"
        assert {"parameters", "version", "timings", "files", "reconstructed"} <= set(manifest)
        assert 0.48 <= manifest["results"]["fstirap3"]["final"]["abs_rho13"] <= 0.5
        for name in manifest["files"]:
            assert (tmp_path / name).exists()


class TestPresets:
    def test_registry(self):
        assert sorted(PRESETS) == sorted(PRESET_IDS)
        assert [pid for pid, _ in list_presets()] == PRESET_IDS
        with pytest.raises(UnknownPresetError):
            run_preset("fig1", "/tmp")

    @pytest.mark.parametrize("pid", PRESET_IDS)
    def test_every_preset_completes(self, tmp_path, pid):
        manifest = run_preset(pid, tmp_path, "json", RunOptions(resolution=3, scan_points=5))
        assert manifest["preset"] == pid
        assert (tmp_path / f"{pid}_manifest.json").exists()
        for name in manifest["files"]:
            json.loads((tmp_path / name).read_text())

    def test_four_level_preset_result(self, tmp_path):
        manifest = run_preset("fig6b", tmp_path)
        assert manifest["results"]["cstirap4"]["final"]["rho44"] > 0.9

    def test_fractional_scan_ratio(self, tmp_path):
        manifest = run_preset("fig12", tmp_path, opts=RunOptions(scan_points=5))
        assert manifest["results"]["scan"]["ratio_5_to_0"] <= 0.55

    def test_reconstructed_flags(self, tmp_path):
        manifest = run_preset("fig14", tmp_path, opts=RunOptions(resolution=3))
        assert manifest["reconstructed"]
        assert all(v is True for v in manifest["reconstructed"].values())

    def test_preset_output_deterministic(self, tmp_path):
        a = run_preset("fig13", tmp_path / "a")
        b = run_preset("fig13", tmp_path / "b")
        for name in a["files"]:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert a["results"] == b["results"]
