import json
import subprocess
import sys

import pytest

from rooftune.archive import load_archive, validate_archive
from rooftune.cli import main


def tune(tmp_path, *extra):
    return main(["tune", "--kernel", "synthetic", "--space", "demo5", "--out", str(tmp_path), *extra])


def test_tune_writes_valid_archive(tmp_path, capsys):
    assert tune(tmp_path, "--mode", "cio") == 0
    out = capsys.readouterr().out
    assert "best config:    c4" in out
    path = tmp_path / "synthetic-demo5-cio-seed0.json"
    archive = load_archive(path)
    validate_archive(archive)
    assert archive["summary"]["best_config"]["id"] == "c4"
    assert archive["manifest"]["mode"] == "cio"
    assert len(archive["results"]) == 5


def test_archive_is_reproducible_apart_from_timestamps(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert tune(tmp_path, "--mode", "ci", "--out", str(a)) == 0
    assert tune(tmp_path, "--mode", "ci", "--out", str(b)) == 0
    ja, jb = json.loads(a.read_text()), json.loads(b.read_text())
    for j in (ja, jb):
        j.pop("timestamps")
        j["summary"].pop("total_wall_time")
        j["manifest"].pop("out")
    assert ja == jb


def test_manifest_values_and_flag_overrides(tmp_path, capsys):
    manifest = tmp_path / "run.yaml"
    manifest.write_text("kernel: synthetic\nspace: demo5\nmode: default\nseed: 4\n"
                        "tuner:\n  invocations: 2\n  iterations: 20\n")
    assert main(["tune", "--manifest", str(manifest), "--mode", "c", "--out", str(tmp_path)]) == 0
    archive = load_archive(tmp_path / "synthetic-demo5-c-seed4.json")
    assert archive["manifest"]["tuner"]["invocations"] == 2
    assert archive["summary"]["mode"] == "C"
    assert all(len(r["invocations"]) == 2 for r in archive["results"])
    assert all(inv["count"] <= 20 for r in archive["results"] for inv in r["invocations"])


def test_bad_manifest_is_usage_error(tmp_path, capsys):
    manifest = tmp_path / "run.yaml"
    manifest.write_text("kernel: synthetic\ntuner:\n  bogus: 1\n")
    assert main(["tune", "--manifest", str(manifest)]) == 2
    assert "bogus" in capsys.readouterr().err
    assert tune(tmp_path, "--space", "nope") == 2
    assert tune(tmp_path, "--max-count", "0") == 2


def test_unknown_flag_exits_with_usage_code():
    with pytest.raises(SystemExit) as exc:
        main(["tune", "--frobnicate"])
    assert exc.value.code == 2


def test_dry_run_lists_configs(capsys):
    assert main(["tune", "--kernel", "dgemm", "--space", "reduced", "--dry-run"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("96 configurations")
    assert len(out) == 97
    assert main(["tune", "--kernel", "dgemm", "--space", "initial", "--dry-run", "--reverse"]) == 0
    assert capsys.readouterr().out.startswith("539 configurations")


def test_report_compares_modes(tmp_path, capsys):
    assert tune(tmp_path, "--mode", "default") == 0
    assert tune(tmp_path, "--mode", "cio") == 0
    capsys.readouterr()
    files = sorted(str(p) for p in tmp_path.glob("*.json"))
    assert main(["report", *files, "--out", str(tmp_path / "rep")]) == 0
    text = capsys.readouterr().out
    assert "Default" in text and "C+I+O" in text and "1.00x" in text
    csv = (tmp_path / "rep" / "report.csv").read_text().splitlines()
    assert csv[0].startswith("technique,perf_s1") and len(csv) == 3


def test_report_rejects_missing_or_mixed(tmp_path, capsys):
    assert main(["report", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": 1}')
    assert main(["report", str(bad)]) == 2


def test_roofline_theoretical(tmp_path, capsys):
    assert main(["roofline", "--hardware", "xeon-e5-2650v4", "--theoretical-only", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "422.4 GFLOP/s" in out and "153.6 GB/s" in out
    for name in ("roofline.csv", "points.csv", "roofline.svg", "utilization.txt"):
        assert (tmp_path / name).exists()
    header = (tmp_path / "roofline.csv").read_text().splitlines()[0]
    assert header.startswith("intensity_flop_per_byte,")


def test_roofline_usage_errors(capsys):
    assert main(["roofline", "--theoretical-only"]) == 2
    assert main(["roofline", "--hardware", "xeon-e5-2650v4"]) == 2
    assert main(["roofline", "--hardware", "no-such-cpu", "--theoretical-only"]) == 2


def test_roofline_from_dgemm_archive(tmp_path, capsys):
    from rooftune.archive import DEFAULT_MANIFEST, build_archive, now_iso, save_archive
    from rooftune.budget import Budget
    from rooftune.search import DgemmRunner, OptimizationMode, build_dgemm_space, exhaustive_search

    space = build_dgemm_space("reduced")
    space.axes = {"n": [64, 128], "m": [64], "k": [32]}
    result = exhaustive_search(space, OptimizationMode.from_label("c"), Budget(max_count=3), DgemmRunner(),
                               invocations=2)
    manifest = {**DEFAULT_MANIFEST, "kernel": "dgemm", "space": "reduced", "mode": "c",
                "hardware": "E5-2650 v4", "sockets": 1}
    arch = save_archive(build_archive(manifest, result, now_iso(), now_iso()), tmp_path / "dg.json")
    assert main(["roofline", "--hardware", "xeon-e5-2650v4", "--archive", str(arch), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "compute   DGEMM S1:" in out
    assert "utilization DGEMM S1:" in out and "/ 211.2 GFLOP/s" in out
    points = (tmp_path / "points.csv").read_text().splitlines()
    assert points[1].startswith("DGEMM S1 ")

    manifest["hardware"] = "Gold 6148"
    other = save_archive(build_archive(manifest, result, now_iso(), now_iso()), tmp_path / "other.json")
    assert main(["roofline", "--hardware", "xeon-e5-2650v4", "--archive", str(other)]) == 2


def test_roofline_template_detection(capsys):
    assert main(["roofline", "--detect-template"]) == 0
    assert "sockets:" in capsys.readouterr().out


def test_worker_prints_one_line():
    proc = subprocess.run([sys.executable, "-m", "rooftune", "worker", "--kernel", "synthetic",
                           "--param", "id=c1", "--param", "location=100.0", "--param", "scale=1.0",
                           "--max-count", "30"], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.strip().splitlines()
    assert len(lines) == 1
    rec = json.loads(lines[0])
    assert rec["schema"] == 1 and rec["count"] <= 30 and rec["stop_reason"] in ("CiConverged", "MaxCount")


def test_worker_usage_error(capsys):
    assert main(["worker", "--kernel", "synthetic", "--param", "id=x"]) == 2
