"""Experiment orchestration: dispatch, file emission, manifest.

One entry point, :func:`run_experiment`, maps each config kind onto the
simulation modules and writes its outputs (CSV curves, PGM snapshots,
map matrices, fit blocks) into the output directory.  A plain-text
manifest records the config, seed, package version, wall time, and a
SHA-256 hash of every emitted file.  All floats are printed with 17
significant digits, so outputs for a fixed (config, seed) are
byte-identical across runs, machines, and worker counts.
"""

from __future__ import annotations

import csv
import hashlib
import time
from pathlib import Path

import numpy as np

from . import __version__, epidemic, fitting, lattice, meanfield
from .config import ExperimentConfig, serialize_config

FLOAT_FMT = ".17g"


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, FLOAT_FMT)
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv_columns(path: Path) -> dict[str, np.ndarray]:
    """Read a numeric CSV written by :func:`write_csv` back into columns."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = {name: [] for name in header}
        for row in reader:
            for name, value in zip(header, row):
                cols[name].append(float(value))
    return {name: np.array(vals) for name, vals in cols.items()}


def fit_block(result: fitting.FitResult, label: str) -> str:
    """Structured-text rendering of a fit result."""
    lines = [f"[fit.{label}]", f"model = {result.model_kind}"]
    for name, value in zip(result.param_names, result.params):
        lines.append(f"{name} = {format(float(value), FLOAT_FMT)}")
    lines.append(f"residual_norm = {format(result.residual_norm, FLOAT_FMT)}")
    lines.append(f"rms = {format(result.rms, FLOAT_FMT)}")
    lines.append(f"iterations = {result.iterations}")
    lines.append(f"converged = {str(result.converged).lower()}")
    return "\n".join(lines) + "\n"


class Manifest:
    """Accumulates experiment metadata and emitted-file hashes."""

    def __init__(self, config: ExperimentConfig, out_dir: Path):
        self.config = config
        self.out_dir = out_dir
        self.files: list[tuple[str, str, int]] = []
        self.notes: list[str] = []
        self.fit_blocks: list[str] = []
        self.status = "incomplete"
        self.error = ""
        self._t0 = time.monotonic()

    def add_file(self, path: Path) -> None:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.files.append((path.name, digest, path.stat().st_size))

    def note(self, key: str, value) -> None:
        self.notes.append(f"{key} = {_fmt(value)}")

    def render(self) -> str:
        lines = [
            "# rydsim experiment manifest",
            f"kind = {self.config.kind}",
            f"version = {__version__}",
            f"seed = {self.config.seed}",
            f"status = {self.status}",
            f"wall_time_s = {time.monotonic() - self._t0:.3f}",
        ]
        if self.error:
            lines.append(f"error = {self.error}")
        lines.extend(self.notes)
        lines.append("")
        lines.append("[files]")
        for name, digest, size in self.files:
            lines.append(f"{name} sha256={digest} bytes={size}")
        for block in self.fit_blocks:
            lines.append("")
            lines.append(block.rstrip("\n"))
        return "\n".join(lines) + "\n"


def _seeding(name: str) -> epidemic.SeedPolicy:
    return {"left_edge": epidemic.LeftEdge(), "threshold_excess": epidemic.ThresholdExcess()}[name]


def _f_r_grid(p: dict) -> list[float]:
    if p["f_r_count"] == 1:
        return [p["f_r_start"]]
    return list(np.linspace(p["f_r_start"], p["f_r_stop"], p["f_r_count"]))


def _scan_rows(points: list[epidemic.ScanPoint]):
    return [(pt.f_r, pt.f_s, pt.f_i, pt.f_d, pt.f_i_std) for pt in points]


def _run_sis_scan(cfg: ExperimentConfig, out: Path, manifest: Manifest, workers: int):
    p = cfg.params
    params = epidemic.sis_params(
        m=p["m"], iterations=p["iterations"], beta=p["beta"], mu=p["mu"],
        f_rc=p["f_rc"], seeding=_seeding(p["seeding"]), seed=cfg.seed,
        replicates=p["replicates"],
    )
    points = epidemic.threshold_scan(params, _f_r_grid(p), p["replicates"], workers=workers)
    path = out / "scan.csv"
    write_csv(path, ["f_R", "f_S", "f_I", "f_D", "stddev"], _scan_rows(points))
    manifest.add_file(path)
    if p["fit"]:
        xs, ys = epidemic.scan_observable(points, p["normalization"])
        result = fitting.fit("tanh", xs, ys, fitting.auto_init("tanh", xs, ys))
        manifest.fit_blocks.append(fit_block(result, p["normalization"]))
        manifest.note("fit_center", float(result["C"]))


def _run_multi_domain_scan(cfg: ExperimentConfig, out: Path, manifest: Manifest, workers: int):
    p = cfg.params
    params = epidemic.sis_params(
        m=p["m"], iterations=p["iterations"], beta=p["beta"], mu=p["mu"],
        f_rc=p["f_rc"], seeding=_seeding(p["seeding"]), seed=cfg.seed,
        replicates=p["replicates"],
    )
    layout = epidemic.column_bands(p["m"], p["offsets"], moat=p["moat"])
    points = epidemic.multi_domain_scan(params, layout, _f_r_grid(p), workers=workers)
    path = out / "scan.csv"
    write_csv(path, ["f_R", "f_S", "f_I", "f_D", "stddev"], _scan_rows(points))
    manifest.add_file(path)
    if p["fit"]:
        k = len(p["offsets"])
        xs, ys = epidemic.scan_observable(points, p["normalization"])
        init = fitting.auto_init("multi_tanh", xs, ys, components=k)
        result = fitting.fit("multi_tanh", xs, ys, init)
        manifest.fit_blocks.append(fit_block(result, p["normalization"]))
        centers = result.params[1:].reshape(-1, 3)[:, 1]
        manifest.note("fit_centers", " ".join(format(c, FLOAT_FMT) for c in centers))


def _run_sir(cfg: ExperimentConfig, out: Path, manifest: Manifest, workers: int):
    p = cfg.params
    params = epidemic.sir_params(
        m=p["m"], iterations=p["iterations"], beta=p["beta"], gamma=p["gamma"],
        mu=p["mu"], f_r=p["f_r"], f_rc=p["f_rc"], seeding=_seeding(p["seeding"]),
        seed=cfg.seed,
    )
    grid = epidemic.init_grid(params)
    series, _ = epidemic.run(params, grid)
    path = out / "series.csv"
    write_csv(
        path,
        ["iteration", "f_S", "f_I", "f_D"],
        zip(series.iteration.tolist(), series.f_s, series.f_i, series.f_d),
    )
    manifest.add_file(path)
    peak = int(np.argmax(series.f_i))
    manifest.note("peak_iteration", peak)
    manifest.note("peak_f_I", float(series.f_i[peak]))
    ext = epidemic.extinction_iteration(series)
    manifest.note("extinction_iteration", -1 if ext is None else ext)
    manifest.note("final_f_S", float(series.f_s[-1]))
    manifest.note("single_dominant_peak", str(epidemic.single_dominant_peak(series)).lower())
    if p["fit"] and series.f_i.max() > 0:
        xs = series.iteration.astype(float)
        init = fitting.auto_init("gaussian", xs, series.f_i)
        result = fitting.fit("gaussian", xs, series.f_i, init)
        manifest.fit_blocks.append(fit_block(result, "f_I_peak"))


def _run_gradient_snapshot(cfg: ExperimentConfig, out: Path, manifest: Manifest, workers: int):
    p = cfg.params
    params = epidemic.sis_params(
        m=p["m"], iterations=p["iterations"], beta=p["beta"], mu=p["mu"],
        f_rc=p["f_rc"], seeding=_seeding(p["seeding"]), seed=cfg.seed,
    )
    grid = epidemic.init_grid(params, gradient=(p["f_r_left"], p["f_r_right"]))
    _, final = epidemic.run(params, grid)
    snap = out / "snapshot.pgm"
    snap.write_text(lattice.to_pgm(final))
    manifest.add_file(snap)
    wall = sorted(epidemic.detect_domain_wall(final))
    path = out / "wall.csv"
    write_csv(path, ["row", "col"], wall)
    manifest.add_file(path)
    manifest.note("wall_cells", len(wall))
    mean_col = epidemic.wall_mean_column(set(wall))
    manifest.note("wall_mean_column", mean_col)
    if p["m"] > 1 and wall:
        frac = p["f_r_left"] + (p["f_r_right"] - p["f_r_left"]) * mean_col / (p["m"] - 1)
        manifest.note("wall_local_f_R", frac)


def _mf_params(p: dict, f_r: float) -> meanfield.MeanFieldParams:
    return meanfield.MeanFieldParams(
        omega_p=p["omega_p"], omega_c=p["omega_c"], delta_p=p["delta_p"],
        gamma_e=p["gamma_e"], gamma_r=p["gamma_r"], gamma_deph=p["gamma_deph"],
        v=p["v"], od=p["od"], f_r=f_r,
    )


def _run_hysteresis(cfg: ExperimentConfig, out: Path, manifest: Manifest, workers: int):
    p = cfg.params
    fractions = p["fractions"]
    weights = p["weights"] or [1.0 / len(fractions)] * len(fractions)
    total = sum(weights)
    weights = [w / total for w in weights]
    domains = [(_mf_params(p, f), w) for f, w in zip(fractions, weights)]
    sweep = (p["delta_c_start"], p["delta_c_stop"], p["delta_c_steps"])
    rows = []
    curves = {}
    for direction in ("positive", "negative"):
        curve = meanfield.compose_domains(domains, sweep, direction, p["mode"])
        curves[direction] = curve
        rows.extend(
            (float(d), float(t), direction)
            for d, t in zip(curve.delta_c, curve.transmission)
        )
    path = out / "hysteresis.csv"
    write_csv(path, ["delta_c", "T", "direction"], rows)
    manifest.add_file(path)
    diff = curves["positive"].transmission - curves["negative"].transmission[::-1]
    manifest.note("max_abs_direction_difference", float(np.abs(diff).max()))
    x_at, slope = fitting.susceptibility(
        np.column_stack([curves["positive"].delta_c, curves["positive"].transmission])
    )
    manifest.note("max_susceptibility_delta_c", x_at)
    manifest.note("max_susceptibility", slope)


def _run_multistability_map(cfg: ExperimentConfig, out: Path, manifest: Manifest, workers: int):
    p = cfg.params
    if p["f_r2_count"] == 1:
        f2s = [p["f_r2_start"]]
    else:
        f2s = list(np.linspace(p["f_r2_start"], p["f_r2_stop"], p["f_r2_count"]))
    sweep = (p["delta_c_start"], p["delta_c_stop"], p["delta_c_steps"])
    result = meanfield.multistability_map(
        _mf_params(p, 1.0), f2s, sweep, f_r1=p["f_r1"], mode=p["mode"]
    )
    triplets = out / "map.csv"
    rows = [
        (float(f2), float(dc), float(result.difference[i, j]))
        for i, f2 in enumerate(result.f_r2)
        for j, dc in enumerate(result.delta_c)
    ]
    write_csv(triplets, ["f_R2", "delta_c", "T_diff"], rows)
    manifest.add_file(triplets)
    matrix = out / "map_matrix.txt"
    with open(matrix, "w") as fh:
        for row in result.difference:
            fh.write(" ".join(format(v, FLOAT_FMT) for v in row) + "\n")
    manifest.add_file(matrix)
    for name, axis in (("map_f_r2.txt", result.f_r2), ("map_delta_c.txt", result.delta_c)):
        path = out / name
        path.write_text("\n".join(format(v, FLOAT_FMT) for v in axis) + "\n")
        manifest.add_file(path)
    manifest.note("max_abs_difference", float(np.abs(result.difference).max()))


def _run_fit(cfg: ExperimentConfig, out: Path, manifest: Manifest, workers: int):
    p = cfg.params
    cols = read_csv_columns(Path(p["data"]))
    for key in (p["x_column"], p["y_column"]):
        if key not in cols:
            raise ValueError(f"column {key!r} not in {p['data']}: have {sorted(cols)}")
    xs, ys = cols[p["x_column"]], cols[p["y_column"]]
    init = np.asarray(p["init"], dtype=float) if p["init"] else fitting.auto_init(
        p["model"], xs, ys, components=p["components"]
    )
    result = fitting.fit(p["model"], xs, ys, init)
    block = fit_block(result, p["model"])
    path = out / "fit.txt"
    path.write_text(block)
    manifest.add_file(path)
    manifest.fit_blocks.append(block)


_RUNNERS = {
    "sis-scan": _run_sis_scan,
    "multi-domain-scan": _run_multi_domain_scan,
    "sir-run": _run_sir,
    "gradient-snapshot": _run_gradient_snapshot,
    "hysteresis": _run_hysteresis,
    "multistability-map": _run_multistability_map,
    "fit": _run_fit,
}


def run_experiment(
    config: ExperimentConfig,
    out_dir: str | Path | None = None,
    workers: int | None = None,
) -> Path:
    """Execute one experiment and write its outputs plus a manifest.

    Returns the manifest path.  On a module error the manifest is still
    written with status=error and whatever files were completed, and the
    exception propagates to the caller.
    """
    out = Path(out_dir if out_dir is not None else config.out)
    out.mkdir(parents=True, exist_ok=True)
    n_workers = workers if workers is not None else config.params.get("workers", 1)

    manifest = Manifest(config, out)
    config_path = out / "config.toml"
    config_path.write_text(serialize_config(config))
    manifest.add_file(config_path)

    manifest_path = out / "manifest.txt"
    try:
        _RUNNERS[config.kind](config, out, manifest, n_workers)
        manifest.status = "ok"
    except Exception as e:
        manifest.status = "error"
        manifest.error = f"{type(e).__name__}: {e}"
        manifest_path.write_text(manifest.render())
        raise
    manifest_path.write_text(manifest.render())
    return manifest_path
