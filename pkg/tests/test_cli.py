import subprocess
import sys

import pytest
import yaml

from minlut import cli
from minlut.specfile import read_spec
from minlut.tanner import generate_regular, write_alist


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def design_cfg(tmp_path):
    path = tmp_path / "design.yaml"
    path.write_text(yaml.safe_dump({
        "dv": 6, "dc": 32, "iterations": 8, "tree": "T1",
        "alphabet_schedule": [8, 8, 8, 8, 4, 4, 4, 4], "reuse": [1, 2, 3, 4, 5, 6],
        "gamma_db": 4.0, "rate": 13 / 16,
    }))
    return path


def test_design_writes_spec_and_reports(design_cfg, tmp_path, capsys):
    out_path = tmp_path / "spec.txt"
    code, out, _ = run(["design", "-c", str(design_cfg), "-o", str(out_path)], capsys)
    assert code == 0
    spec = read_spec(out_path)
    assert spec.iterations == 8
    assert spec.message_sizes() == [8, 8, 8, 8, 4, 4, 4, 4]
    assert "mi_trace" in out and "reproducers 8" in out


def test_design_reuse_two_stages(tmp_path, capsys):
    out_path = tmp_path / "spec.txt"
    code, _, _ = run(["design", "--set", "reuse=[1, 5]", "-o", str(out_path)], capsys)
    assert code == 0
    assert sorted(read_spec(out_path).stages) == [1, 5]


def test_design_single_iteration(tmp_path, capsys):
    out_path = tmp_path / "spec.txt"
    code, _, _ = run(["design", "--set", "iterations=1", "-o", str(out_path)], capsys)
    spec = read_spec(out_path)
    assert code == 0 and list(spec.stages) == [1] and spec.decision.output_size == 2


def test_inspect_reports(tmp_path, capsys):
    out_path = tmp_path / "spec.txt"
    run(["design", "--set", "reuse=[1, 5]", "-o", str(out_path)], capsys)
    code, out, _ = run(["inspect", str(out_path)], capsys)
    assert code == 0
    assert "λ = 10" in out
    assert "{2..4→1, 6..8→5}" in out
    assert "alphabet 8 8 8 8 8 8 8 8" in out


def test_inspect_downsized(tmp_path, capsys):
    out_path = tmp_path / "spec.txt"
    run(["design", "--set", "alphabet_schedule=[8, 8, 8, 4, 4, 4, 2, 2]", "-o", str(out_path)], capsys)
    _, out, _ = run(["inspect", str(out_path)], capsys)
    assert "alphabet 8 8 8 4 4 4 2 2" in out


def test_threshold_single_probe(tmp_path, capsys):
    csv_path = tmp_path / "t.csv"
    code, out, _ = run(["threshold", "--set", "iterations=20", "--set", "sigma_min=0.4",
                        "--set", "sigma_max=0.45", "--set", "delta=0.05",
                        "--set", "check_endpoints=false", "--csv", str(csv_path)], capsys)
    assert code == 0
    assert "sigma* = 0.425000" in out and "probe 1" in out and "probe 2" not in out
    rows = csv_path.read_text().splitlines()
    assert rows[0].startswith("tree,") and len(rows) == 2


def test_threshold_several_trees(capsys):
    code, out, _ = run(["threshold", "--set", "trees=[T1, T6]", "--set", "iterations=10",
                        "--set", "delta=0.05"], capsys)
    assert code == 0
    assert out.count("sigma* =") == 2 and "lambda = 19" in out


def test_simulate_csv_and_worker_env(tmp_path, capsys, monkeypatch):
    g = generate_regular(128, 3, 6, seed=1)
    write_alist(g, tmp_path / "g.alist")
    args = ["simulate", "--set", f"graph={tmp_path / 'g.alist'}", "--set", "dv=3", "--set", "dc=6",
            "--set", "baseline=minsum-fixed", "--set", "ebn0=[1.0, 2.0]", "--set", "max_frames=300",
            "--set", "min_frame_errors=20", "--set", "timing=false", "--set", "ms_step=0.5"]
    code, one, _ = run(args + ["--workers", "1"], capsys)
    assert code == 0
    monkeypatch.setenv("MINLUT_WORKERS", "4")
    code, four, _ = run(args + ["-o", str(tmp_path / "out.csv")], capsys)
    assert code == 0 and one == four
    assert (tmp_path / "out.csv").read_text() == one
    assert one.splitlines()[0] == "ebn0_db,frames,bit_errors,frame_errors,ber,fer,avg_iterations,elapsed_s"


def test_config_errors_exit_1(tmp_path, capsys):
    assert run(["design", "--set", "colour=blue", "-o", "x"], capsys)[0] == 1
    assert run(["design", "--set", "iterations=0", "-o", "x"], capsys)[0] == 1
    assert run(["design"], capsys)[0] == 1  # no output path
    assert run(["simulate", "--set", "ebn0=[]", "--set", "baseline=minsum-float"], capsys)[0] == 1
    assert run(["simulate", "--set", "ebn0=[1]", "--set", "min_frame_errors=0",
                "--set", "baseline=minsum-float"], capsys)[0] == 1
    assert run(["simulate", "--set", "ebn0=[1]"], capsys)[0] == 1  # no decoder
    bad = tmp_path / "bad.yaml"
    bad.write_text("- just\n- a list\n")
    assert run(["design", "-c", str(bad)], capsys)[0] == 1


def test_runtime_errors_exit_2(tmp_path, capsys):
    code, _, err = run(["inspect", str(tmp_path / "missing.txt")], capsys)
    assert code == 2 and "error" in err
    (tmp_path / "junk.txt").write_text("not a spec\n")
    assert run(["inspect", str(tmp_path / "junk.txt")], capsys)[0] == 2
    code, _, _ = run(["threshold", "--set", "iterations=5", "--set", "sigma_min=0.9",
                      "--set", "sigma_max=1.2", "--set", "delta=0.1"], capsys)
    assert code == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "minlut.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("design", "threshold", "simulate", "inspect"):
        assert cmd in proc.stdout
