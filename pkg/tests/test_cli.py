import csv
import hashlib
import re
from pathlib import Path

import numpy as np
import pytest

from rydsim.cli import build_parser, main
from rydsim.config import SCHEMAS, parse_config
from rydsim.lattice import from_pgm
from rydsim.runner import read_csv_columns, run_experiment

SIS_SMALL = """
kind = "sis-scan"
seed = 11
[scan]
m = 25
iterations = 40
replicates = 2
f_r_count = 6
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def manifest_hashes(manifest_path: Path) -> dict[str, str]:
    out = {}
    for line in manifest_path.read_text().splitlines():
        m = re.match(r"(\S+) sha256=([0-9a-f]{64}) bytes=(\d+)", line)
        if m:
            out[m.group(1)] = m.group(2)
    return out


# ---------------------------------------------------------------------------
# CLI surface
# ---------------------------------------------------------------------------

def test_help_lists_every_config_key(capsys):
    parser = build_parser()
    for kind, (_, fields) in SCHEMAS.items():
        with pytest.raises(SystemExit):
            parser.parse_args([kind, "--help"])
        text = capsys.readouterr().out
        for f in fields:
            assert f.name in text, f"{kind} --help missing {f.name}"
        assert "default" in text and "--seed" in text and "--out" in text


def test_cli_runs_and_reports_manifest(tmp_path, capsys):
    cfg = write(tmp_path, "sis.toml", SIS_SMALL)
    rc = main([
        "sis-scan", "--config", str(cfg), "--out", str(tmp_path / "o"),
    ])
    assert rc == 0
    printed = capsys.readouterr().out.strip()
    assert printed.endswith("manifest.txt")
    assert (tmp_path / "o" / "scan.csv").exists()


def test_cli_rejects_bad_config(tmp_path, capsys):
    cfg = write(tmp_path, "bad.toml", 'kind = "sis-scan"\n[scan]\nm = -3\n')
    rc = main(["sis-scan", "--config", str(cfg)])
    assert rc == 2
    assert "scan.m" in capsys.readouterr().err


def test_cli_rejects_kind_mismatch(tmp_path, capsys):
    cfg = write(tmp_path, "sis.toml", SIS_SMALL)
    rc = main(["sir-run", "--config", str(cfg)])
    assert rc == 2
    assert "does not match" in capsys.readouterr().err


def test_cli_seed_and_out_overrides(tmp_path, monkeypatch):
    cfg = write(tmp_path, "sis.toml", SIS_SMALL)
    env_out = tmp_path / "env-out"
    monkeypatch.setenv("SIM_SEED", "99")
    monkeypatch.setenv("SIM_OUT", str(env_out))
    assert main(["sis-scan", "--config", str(cfg)]) == 0
    saved = parse_config(env_out / "config.toml")
    assert saved.seed == 99  # env beat the config's seed=11

    flag_out = tmp_path / "flag-out"
    assert main([
        "sis-scan", "--config", str(cfg), "--seed", "123", "--out", str(flag_out),
    ]) == 0
    saved = parse_config(flag_out / "config.toml")
    assert saved.seed == 123  # flag beat the environment


def test_cli_module_error_is_nonzero_exit(tmp_path, capsys):
    cfg = write(
        tmp_path, "fit.toml",
        f'kind = "fit"\n[fit]\ndata = "{tmp_path}/missing.csv"\n',
    )
    rc = main(["fit", "--config", str(cfg), "--out", str(tmp_path / "f")])
    assert rc == 1
    assert "experiment failed" in capsys.readouterr().err
    manifest = (tmp_path / "f" / "manifest.txt").read_text()
    assert "status = error" in manifest


# ---------------------------------------------------------------------------
# manifest completeness and reproducibility
# ---------------------------------------------------------------------------

def test_manifest_lists_every_file_with_correct_hash(tmp_path):
    cfg = parse_config(SIS_SMALL)
    out = tmp_path / "o"
    manifest_path = run_experiment(cfg, out_dir=out)
    hashes = manifest_hashes(manifest_path)
    emitted = {p.name for p in out.iterdir()} - {"manifest.txt"}
    assert set(hashes) == emitted
    for name, digest in hashes.items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest


def test_serial_parallel_outputs_byte_identical(tmp_path):
    cfg = parse_config(SIS_SMALL)
    out1 = tmp_path / "serial"
    out2 = tmp_path / "parallel"
    run_experiment(cfg, out_dir=out1, workers=1)
    run_experiment(cfg, out_dir=out2, workers=3)
    for name in ("scan.csv", "config.toml"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    # manifests differ only in wall time; the recorded hashes must agree
    assert manifest_hashes(out1 / "manifest.txt") == manifest_hashes(out2 / "manifest.txt")


def test_csv_floats_round_trip(tmp_path):
    cfg = parse_config(SIS_SMALL)
    out = tmp_path / "o"
    run_experiment(cfg, out_dir=out)
    cols = read_csv_columns(out / "scan.csv")
    assert set(cols) == {"f_R", "f_S", "f_I", "f_D", "stddev"}
    total = cols["f_S"] + cols["f_I"] + cols["f_D"]
    assert np.all(total == 1.0)  # 17-significant-digit output is lossless


def test_gradient_snapshot_outputs(tmp_path):
    cfg = parse_config(
        'kind = "gradient-snapshot"\nseed = 4\n[snapshot]\nm = 40\niterations = 60\n'
    )
    out = tmp_path / "g"
    manifest = run_experiment(cfg, out_dir=out)
    grid = from_pgm((out / "snapshot.pgm").read_text())
    assert grid.m == 40
    assert grid.iteration == 60
    wall = read_csv_columns(out / "wall.csv")
    assert len(wall["row"]) > 0
    assert "wall_mean_column" in manifest.read_text()


def test_hysteresis_csv_has_both_directions(tmp_path):
    cfg = parse_config(
        'kind = "hysteresis"\n[hysteresis]\ndelta_c_steps = 30\nfractions = [0.33]\n'
    )
    out = tmp_path / "h"
    run_experiment(cfg, out_dir=out)
    with open(out / "hysteresis.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    directions = {r["direction"] for r in rows}
    assert directions == {"positive", "negative"}
    assert len(rows) == 60


def test_map_outputs_matrix_and_axes(tmp_path):
    cfg = parse_config(
        'kind = "multistability-map"\n[map]\nf_r2_count = 2\ndelta_c_steps = 25\n'
    )
    out = tmp_path / "m"
    run_experiment(cfg, out_dir=out)
    matrix = np.loadtxt(out / "map_matrix.txt")
    f2 = np.loadtxt(out / "map_f_r2.txt")
    dc = np.loadtxt(out / "map_delta_c.txt")
    assert matrix.shape == (2, 25)
    assert f2.shape == (2,) and dc.shape == (25,)
    cols = read_csv_columns(out / "map.csv")
    assert len(cols["f_R2"]) == 50


def test_sir_run_outputs_and_summary(tmp_path):
    cfg = parse_config('kind = "sir-run"\nseed = 3\n[run]\nm = 50\niterations = 150\n')
    out = tmp_path / "sir"
    manifest = run_experiment(cfg, out_dir=out).read_text()
    series = read_csv_columns(out / "series.csv")
    assert len(series["iteration"]) == 151
    assert series["f_I"][-1] == 0.0
    for key in ("peak_iteration", "extinction_iteration", "final_f_S",
                "single_dominant_peak", "[fit.f_I_peak]"):
        assert key in manifest


def test_multi_domain_runner_reports_centers(tmp_path):
    cfg = parse_config(
        'kind = "multi-domain-scan"\nseed = 11\n[scan]\n'
        "m = 40\niterations = 60\nreplicates = 3\nf_r_count = 11\n"
        "offsets = [0.2, 0.0]\n"
    )
    out = tmp_path / "mds"
    manifest = run_experiment(cfg, out_dir=out).read_text()
    assert "fit_centers" in manifest
    centers = [float(v) for v in re.search(r"fit_centers = (.*)", manifest).group(1).split()]
    assert len(centers) == 2
    assert centers[0] < centers[1]


def test_fit_experiment_on_scan_output(tmp_path):
    cfg = parse_config(SIS_SMALL)
    scan_out = tmp_path / "scan"
    run_experiment(cfg, out_dir=scan_out)
    fit_cfg = parse_config(
        'kind = "fit"\n[fit]\n'
        f'data = "{scan_out / "scan.csv"}"\n'
        'x_column = "f_R"\ny_column = "f_I"\nmodel = "tanh"\n'
    )
    out = tmp_path / "fit"
    run_experiment(fit_cfg, out_dir=out)
    text = (out / "fit.txt").read_text()
    assert "model = tanh" in text
    assert "converged" in text
