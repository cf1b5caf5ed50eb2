import json
import subprocess
import sys

import numpy as np
import pytest

from dtsim.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from dtsim.scene import read_array, read_raster, read_truth


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_geometry_table(capsys):
    code, out, _ = run(capsys, "geometry")
    assert code == EXIT_OK
    assert "lead_s" in out and "69.59" in out


def test_geometry_json_sweep(capsys):
    code, out, _ = run(capsys, "geometry", "--sweep", "40", "50", "5", "--json")
    rows = [json.loads(line) for line in out.splitlines()]
    assert [r["look_angle_deg"] for r in rows] == [40, 45, 50]
    assert rows[1]["lead_time_s"] == pytest.approx(69.5937, abs=1e-3)


def test_geometry_beyond_horizon_is_usage_error(capsys):
    code, _, err = run(capsys, "geometry", "--angles", "80")
    assert code == EXIT_USAGE and "error" in err


def test_unknown_subcommand(capsys):
    assert run(capsys, "fly")[0] == EXIT_USAGE
    assert run(capsys)[0] == EXIT_USAGE


def test_scene_cloud_and_analyze(tmp_path, capsys):
    out = tmp_path / "s.dtr"
    code, text, _ = run(capsys, "scene", "--kind", "cloud", "--seed", "3", "--out", str(out),
                        "--truth", str(tmp_path / "t.jsonl"), "--opacity-out", str(tmp_path / "o.dtr"))
    assert code == EXIT_OK and "hash" in text
    raster = read_raster(out)
    assert raster.values.shape == (4, 32, 160)
    assert read_raster(tmp_path / "o.dtr").bands == 1
    assert read_truth(tmp_path / "t.jsonl")[0]["kind"] == "raster"

    mask = tmp_path / "mask.dtr"
    code, text, _ = run(capsys, "analyze", "--input", str(out), "--kernel", "cloud_mask", "--output", str(mask))
    assert code == EXIT_OK and text.startswith("cloud_fraction")
    assert read_array(mask).shape == (1, 32, 160)


def test_scene_thermal_detections(tmp_path, capsys):
    out = tmp_path / "t.dtr"
    run(capsys, "scene", "--kind", "thermal", "--hotspots", "3", "--min-separation", "10",
        "--width", "96", "--height", "64", "--seed", "17", "--out", str(out))
    det = tmp_path / "d.jsonl"
    code, text, _ = run(capsys, "analyze", "--input", str(out), "--kernel", "thermal", "--detections", str(det))
    assert code == EXIT_OK and text.strip() == "3 detections"
    assert len(det.read_text().splitlines()) == 3


def test_spectral_scene_and_unmix(tmp_path, capsys):
    lib = tmp_path / "lib.json"
    lib.write_text(json.dumps({"names": ["a", "b"], "spectra": [[0.1, 0.2, 0.3, 0.4], [0.4, 0.3, 0.2, 0.1]]}))
    scene = tmp_path / "sp.dtr"
    assert run(capsys, "scene", "--kind", "spectral", "--library", str(lib), "--width", "8", "--height", "4",
               "--out", str(scene))[0] == EXIT_OK
    out = tmp_path / "ab.dtr"
    code, _, _ = run(capsys, "analyze", "--input", str(scene), "--kernel", "unmix", "--library", str(lib),
                     "--no-stretch", "--output", str(out))
    assert code == EXIT_OK
    ab = read_array(out)
    assert ab.shape == (2, 4, 8) and ab.min() >= 0


@pytest.mark.parametrize("kernel", ["sam", "matched_filter", "stretch"])
def test_score_kernels(tmp_path, capsys, kernel):
    scene = tmp_path / "s.dtr"
    run(capsys, "scene", "--out", str(scene), "--width", "20", "--height", "10", "--correlation", "4")
    out = tmp_path / "o.dtr"
    args = ["analyze", "--input", str(scene), "--kernel", kernel, "--output", str(out)]
    if kernel != "stretch":
        args += ["--target", "0.9,0.9,0.9,0.9"]
    assert run(capsys, *args)[0] == EXIT_OK
    assert np.all(np.isfinite(read_array(out)))


def test_kernel_needs_target(tmp_path, capsys):
    scene = tmp_path / "s.dtr"
    run(capsys, "scene", "--out", str(scene), "--width", "20", "--height", "10")
    assert run(capsys, "analyze", "--input", str(scene), "--kernel", "sam", "--output", "x")[0] == EXIT_USAGE


def test_corrupt_raster_is_runtime_error(tmp_path, capsys):
    bad = tmp_path / "bad.dtr"
    bad.write_bytes(b"NOTARAST" + bytes(20))
    code, _, err = run(capsys, "analyze", "--input", str(bad), "--kernel", "cloud_mask", "--output", "x")
    assert code == EXIT_RUNTIME and "error" in err


def test_missing_raster_is_runtime_error(tmp_path, capsys):
    assert run(capsys, "analyze", "--input", str(tmp_path / "none"), "--kernel", "stretch")[0] == EXIT_RUNTIME


def test_simulate_and_report(tmp_path, capsys):
    conf = tmp_path / "m.ini"
    conf.write_text(f"[mission]\nn_cycles = 6\n[output]\nlog = {tmp_path / 'log.jsonl'}\nmetrics = {tmp_path / 'm.csv'}\n")
    code, out, _ = run(capsys, "simulate", "--config", str(conf))
    assert code == EXIT_OK and "cycles:" in out
    code, out2, _ = run(capsys, "report", "--log", str(tmp_path / "log.jsonl"), "--csv", str(tmp_path / "r.csv"))
    assert code == EXIT_OK and out2 == out
    assert (tmp_path / "r.csv").read_bytes() == (tmp_path / "m.csv").read_bytes()


def test_simulate_bad_config(tmp_path, capsys):
    conf = tmp_path / "m.ini"
    conf.write_text("[analysis]\nt_brigth = 0.5\n")
    code, _, err = run(capsys, "simulate", "--config", str(conf), "--log", "a", "--metrics", "b")
    assert code == EXIT_USAGE and "analysis.t_brigth" in err


def test_simulate_without_outputs(tmp_path, capsys):
    conf = tmp_path / "m.ini"
    conf.write_text("")
    assert run(capsys, "simulate", "--config", str(conf))[0] == EXIT_USAGE


def test_simulate_unwritable_output(tmp_path, capsys):
    conf = tmp_path / "m.ini"
    conf.write_text("[mission]\nn_cycles = 1\n")
    code = run(capsys, "simulate", "--config", str(conf), "--log", str(tmp_path / "no" / "dir" / "l"),
               "--metrics", str(tmp_path / "m"))[0]
    assert code == EXIT_RUNTIME


def test_report_corrupt_log(tmp_path, capsys):
    log = tmp_path / "l.jsonl"
    log.write_text("{oops\n")
    code, _, err = run(capsys, "report", "--log", str(log))
    assert code == EXIT_RUNTIME and ":1:" in err


def test_report_empty_log(tmp_path, capsys):
    log = tmp_path / "l.jsonl"
    log.write_text("")
    code, out, _ = run(capsys, "report", "--log", str(log))
    assert code == EXIT_OK and "cycles:                 0" in out


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dtsim.cli", "geometry", "--json", "--angles", "45"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["look_angle_deg"] == 45
