import csv
import subprocess
import sys

import pytest

from combinatorium import biokit
from combinatorium.cli import main


@pytest.fixture
def primality(tmp_path):
    src = tmp_path / "primality.dfg"
    src.write_text(biokit.program_source("primality"))
    return src


def test_compile_writes_cmb(primality, capsys):
    assert main(["compile", str(primality), "--emit-hash"]) == 0
    cmb = primality.with_suffix(".cmb")
    lines = cmb.read_text().splitlines()
    assert len(lines) == 12 and lines[0] == "x0"
    out = capsys.readouterr().out
    from combinatorium.scalars import primality_program
    assert f"hash {primality_program().hash}" in out


def test_compile_error_exit_status(tmp_path, capsys):
    bad = tmp_path / "bad.dfg"
    bad.write_text("a: input\nb: op nonsense\na -> b\n")
    assert main(["compile", str(bad)]) == 1
    assert "bad.dfg:2:7: unknown op" in capsys.readouterr().err


@pytest.mark.parametrize("value,expect", [("15", {"3", "5"}), ("{4}", {"2"})])
def test_eval_success(primality, capsys, value, expect):
    main(["compile", str(primality)])
    capsys.readouterr()
    for seed in range(5):
        assert main(["eval", str(primality.with_suffix(".cmb")), value, "--seed", str(seed)]) == 0
        out = capsys.readouterr().out
        assert out.startswith("Succeeded({")
        assert out.split("{")[1].split("}")[0] in expect


def test_eval_failure_and_dfg_input(primality, capsys):
    assert main(["eval", str(primality), "13"]) == 0
    assert capsys.readouterr().out.startswith("Failed cost=")


def test_eval_unknown_opcode(tmp_path, capsys):
    p = tmp_path / "x.cmb"
    p.write_text("x0\nwhatever\n")
    assert main(["eval", str(p), "3"]) == 1
    assert "error" in capsys.readouterr().err


def _small_config(tmp_path, horizon=20):
    cfg = tmp_path / "desk.yaml"
    cfg.write_text(f"""
world: {{width: 32, height: 32}}
seed: 3
horizon: {{time: {horizon}}}
sample_dt: 5
experiment:
  ribosomes: 4
  plasmids_per_ribosome_enzyme: 1
  plasmids_per_factory_enzyme: 1
""")
    return cfg


def test_sim_writes_csv_and_snapshot(tmp_path, capsys):
    cfg = _small_config(tmp_path)
    out = tmp_path / "out"
    assert main(["sim", "--config", str(cfg), "--out-dir", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "run_seed3.csv")))
    assert [r["time"] for r in rows] == ["0.000000", "5.000000", "10.000000", "15.000000", "20.000000"]
    assert rows[0]["ribosome_count"] == "5" and rows[0]["factory_count"] == "3"
    for r in rows:
        assert int(r["total_mass"]) - int(r["injected_mass"]) == int(rows[0]["total_mass"]) - int(rows[0]["injected_mass"])
    assert (out / "snapshot_seed3.txt").exists()


def test_zero_horizon_gives_single_row(tmp_path):
    cfg = _small_config(tmp_path, horizon=0)
    out = tmp_path / "out"
    assert main(["sim", "--config", str(cfg), "--out-dir", str(out), "--seed", "8"]) == 0
    rows = list(csv.DictReader(open(out / "run_seed8.csv")))
    assert len(rows) == 1 and rows[0]["time"] == "0.000000"


def test_experiment_summary(tmp_path, capsys):
    cfg = _small_config(tmp_path, horizon=10)
    out = tmp_path / "ens"
    assert main(["experiment", "--config", str(cfg), "--out-dir", str(out),
                 "--runs", "2", "--jobs", "2"]) == 0
    assert (out / "run_seed3.csv").exists() and (out / "run_seed4.csv").exists()
    summary = list(csv.DictReader(open(out / "summary.csv")))
    assert summary[0]["runs"] == "2"
    assert float(summary[0]["ribosome_sd"]) == 0.0
    assert {"ribosome_mean", "factory_mean", "factory_sd"} <= set(summary[0])


def test_rerun_is_byte_identical(tmp_path):
    cfg = _small_config(tmp_path, horizon=15)
    for d in ("a", "b"):
        main(["sim", "--config", str(cfg), "--out-dir", str(tmp_path / d)])
    for name in ("run_seed3.csv", "snapshot_seed3.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_config_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("colour: blue\n")
    assert main(["sim", "--config", str(bad), "--out-dir", str(tmp_path)]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_placement_error_exit(tmp_path, capsys):
    cfg = tmp_path / "tiny.yaml"
    cfg.write_text("world: {width: 8, height: 8}\n")
    assert main(["sim", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 1
    assert "no room" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "combinatorium", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "compile" in res.stdout
