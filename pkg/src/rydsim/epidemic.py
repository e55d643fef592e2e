"""SIS/SIR experiments on the lattice: initialization, runs, and scans.

Couples the stepping kernel to experiment-level concepts: Bernoulli
occupancy at a fill fraction f_R (uniform, per-domain, or linear
gradient), seeding policies, replicate-averaged threshold scans, and
domain-wall detection.  Sub-seeding is counter-based, so replicate
results do not depend on execution order and scans parallelize
deterministically.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .lattice import (
    DEPLETED,
    INFECTED,
    SUSCEPTIBLE,
    BoundaryPolicy,
    Grid,
    StepParams,
    _infected_neighbor_count,
    counts,
    step,
)
from .rng import STREAM_OCCUPY, STREAM_SEED, grid_hash_base, stream_uniforms, subseed

# Calibrated default spreading probability for the SIS preset.  The value
# places the fitted threshold of a 200-iteration scan near 0.6; see
# scripts/calibrate_beta.py for the procedure that selected it.
SIS_DEFAULT_BETA = 0.40
SIS_DEFAULT_MU = 0.01

SIR_DEFAULT_BETA = 0.95
SIR_DEFAULT_GAMMA = 0.2


# ---------------------------------------------------------------------------
# seeding policies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeftEdge:
    """Seed every occupied cell of column 0 as infected."""


@dataclass(frozen=True)
class ThresholdExcess:
    """Seed each occupied cell independently with probability
    clamp((f_R - f_Rc) / (1 - f_Rc), 0, 1), using the cell's local f_R."""


@dataclass(frozen=True)
class Explicit:
    """Seed exactly the given (row, col) cells; they must be occupied."""

    coords: tuple[tuple[int, int], ...]

    def __init__(self, coords):
        object.__setattr__(self, "coords", tuple((int(r), int(c)) for r, c in coords))


SeedPolicy = LeftEdge | ThresholdExcess | Explicit


@dataclass(frozen=True)
class Rect:
    """Axis-aligned cell rectangle [row0, row0+n_rows) x [col0, col0+n_cols)."""

    row0: int
    col0: int
    n_rows: int
    n_cols: int

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError("Rect must span at least one cell")
        if self.row0 < 0 or self.col0 < 0:
            raise ValueError("Rect origin must be non-negative")

    @property
    def slices(self) -> tuple[slice, slice]:
        return (
            slice(self.row0, self.row0 + self.n_rows),
            slice(self.col0, self.col0 + self.n_cols),
        )


@dataclass(frozen=True)
class DomainLayout:
    """Disjoint rectangles with additive f_R offsets; uncovered cells keep
    the base fill fraction."""

    regions: tuple[tuple[Rect, float], ...]

    def __init__(self, regions):
        object.__setattr__(
            self, "regions", tuple((rect, float(off)) for rect, off in regions)
        )

    def validate(self, m: int) -> None:
        cover = np.zeros((m, m), dtype=bool)
        for rect, _ in self.regions:
            if rect.row0 + rect.n_rows > m or rect.col0 + rect.n_cols > m:
                raise ValueError(f"{rect} exceeds the {m}x{m} grid")
            patch = cover[rect.slices]
            if patch.any():
                raise ValueError(f"{rect} overlaps another layout region")
            cover[rect.slices] = True


def column_bands(m: int, offsets, moat: int = 0) -> DomainLayout:
    """Vertical bands of equal width, one per offset, left to right.

    With ``moat`` > 0, consecutive bands are separated by strips of that
    many permanently empty columns (offset -1, so the local fill fraction
    clamps to 0).  Contagion cannot cross a moat of width >= 2, which
    keeps the domains epidemically independent, mirroring spatially
    separate excitation regions.
    """
    offsets = list(offsets)
    k = len(offsets)
    if k < 1:
        raise ValueError("need at least one offset")
    gap_total = moat * (k - 1)
    if gap_total >= m:
        raise ValueError(f"moats ({gap_total} cols) leave no room on an m={m} grid")
    usable = m - gap_total
    edges = [round(i * usable / k) for i in range(k + 1)]
    regions = []
    for i, off in enumerate(offsets):
        col0 = edges[i] + moat * i
        width = edges[i + 1] - edges[i]
        regions.append((Rect(0, col0, m, width), off))
        if moat > 0 and i < k - 1:
            regions.append((Rect(0, col0 + width, m, moat), -1.0))
    return DomainLayout(regions)


# ---------------------------------------------------------------------------
# experiment parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpidemicParams:
    """Configuration of one lattice epidemic experiment."""

    m: int = 100
    f_r: float = 0.9
    f_rc: float = 0.6
    beta: float = SIS_DEFAULT_BETA
    mu: float = SIS_DEFAULT_MU
    gamma: float = 0.0
    iterations: int = 200
    seeding: SeedPolicy = LeftEdge()
    replicates: int = 1
    seed: int = 0
    boundary: BoundaryPolicy = BoundaryPolicy.ABSORBING_EDGE

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        for name in ("f_r", "f_rc"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        # range/compatibility checks for the step probabilities
        StepParams(beta=self.beta, mu=self.mu, gamma=self.gamma, boundary=self.boundary)

    @property
    def step_params(self) -> StepParams:
        return StepParams(beta=self.beta, mu=self.mu, gamma=self.gamma, boundary=self.boundary)


def sis_params(**overrides) -> EpidemicParams:
    """SIS preset: no depletion (gamma = 0), weak reversion (mu = 0.01),
    calibrated spreading rate, threshold-excess seeding.

    The endemic state is stationary apart from edge losses.
    """
    base = dict(
        beta=SIS_DEFAULT_BETA,
        mu=SIS_DEFAULT_MU,
        gamma=0.0,
        iterations=200,
        seeding=ThresholdExcess(),
    )
    base.update(overrides)
    params = EpidemicParams(**base)
    if params.gamma != 0.0:
        raise ValueError("SIS preset requires gamma = 0")
    return params


def sir_params(**overrides) -> EpidemicParams:
    """SIR preset: beta/gamma > 1 with mu = 0, so every outbreak burns out
    into herd immunity.

    The default fill fraction and seeding threshold are chosen so that a
    100x100 run keeps a few never-infected clusters (final f_S > 0) while
    still producing a clean epidemic peak.
    """
    base = dict(
        beta=SIR_DEFAULT_BETA,
        gamma=SIR_DEFAULT_GAMMA,
        mu=0.0,
        f_r=0.55,
        f_rc=0.5,
        iterations=500,
        seeding=ThresholdExcess(),
    )
    base.update(overrides)
    params = EpidemicParams(**base)
    if params.mu != 0.0:
        raise ValueError("SIR preset requires mu = 0")
    if params.gamma <= 0.0 or params.beta / params.gamma <= 1.0:
        raise ValueError("SIR preset requires beta/gamma > 1")
    return params


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def _local_fill(
    params: EpidemicParams,
    layout: DomainLayout | None,
    gradient: tuple[float, float] | None,
) -> np.ndarray:
    m = params.m
    if layout is not None and gradient is not None:
        raise ValueError("layout and gradient modes are mutually exclusive")
    if gradient is not None:
        start, stop = gradient
        for v in (start, stop):
            if not 0.0 <= v <= 1.0:
                raise ValueError("gradient fractions must be in [0, 1]")
        if m == 1:
            cols = np.array([start])
        else:
            cols = start + (stop - start) * np.arange(m) / (m - 1)
        return np.tile(cols, (m, 1))
    local = np.full((m, m), params.f_r)
    if layout is not None:
        layout.validate(m)
        for rect, off in layout.regions:
            local[rect.slices] = min(max(params.f_r + off, 0.0), 1.0)
    return local


def init_grid(
    params: EpidemicParams,
    layout: DomainLayout | None = None,
    gradient: tuple[float, float] | None = None,
) -> Grid:
    """Build the initial grid: Bernoulli occupancy at the local fill
    fraction, then the seeding policy turns chosen occupied cells infected.

    Occupancy draws are shared across fill fractions at a fixed seed
    (common random numbers), so raising f_R only ever adds occupied cells.
    """
    m = params.m
    local_fr = _local_fill(params, layout, gradient)

    base = grid_hash_base(params.seed, 0, m)
    u_occ = stream_uniforms(base, STREAM_OCCUPY)
    cells = np.where(u_occ < local_fr, SUSCEPTIBLE, DEPLETED).astype(np.int8)

    policy = params.seeding
    if isinstance(policy, LeftEdge):
        cells[:, 0][cells[:, 0] == SUSCEPTIBLE] = INFECTED
    elif isinstance(policy, ThresholdExcess):
        denom = 1.0 - params.f_rc
        if denom > 0:
            p_seed = np.clip((local_fr - params.f_rc) / denom, 0.0, 1.0)
        else:
            p_seed = (local_fr >= params.f_rc).astype(float)
        u_seed = stream_uniforms(base, STREAM_SEED)
        cells[(cells == SUSCEPTIBLE) & (u_seed < p_seed)] = INFECTED
    elif isinstance(policy, Explicit):
        for r, c in policy.coords:
            if not (0 <= r < m and 0 <= c < m):
                raise ValueError(f"explicit seed {(r, c)} out of range for m={m}")
            if cells[r, c] != SUSCEPTIBLE:
                raise ValueError(f"explicit seed {(r, c)} is not an occupied cell")
            cells[r, c] = INFECTED
    else:
        raise TypeError(f"unknown seeding policy {policy!r}")

    return Grid(m=m, cells=cells, iteration=0, seed=params.seed)


# ---------------------------------------------------------------------------
# runs and time series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeSeries:
    """Per-iteration state fractions of one run (record 0 is the initial
    grid), plus the parameters and seed that produced it."""

    iteration: np.ndarray
    f_s: np.ndarray
    f_i: np.ndarray
    f_d: np.ndarray
    params: EpidemicParams
    seed: int

    def __len__(self) -> int:
        return self.iteration.size


def run(params: EpidemicParams, grid: Grid) -> tuple[TimeSeries, Grid]:
    """Apply ``step`` exactly ``params.iterations`` times, recording the
    state fractions at every iteration (including the initial one)."""
    sp = params.step_params
    n = params.iterations
    f_s = np.empty(n + 1)
    f_i = np.empty(n + 1)
    f_d = np.empty(n + 1)
    f_s[0], f_i[0], f_d[0] = counts(grid)
    for i in range(1, n + 1):
        grid = step(grid, sp)
        f_s[i], f_i[i], f_d[i] = counts(grid)
    ts = TimeSeries(
        iteration=np.arange(n + 1),
        f_s=f_s,
        f_i=f_i,
        f_d=f_d,
        params=params,
        seed=grid.seed,
    )
    return ts, grid


def extinction_iteration(ts: TimeSeries) -> int | None:
    """First iteration with zero infected cells, or None."""
    zeros = np.flatnonzero(ts.f_i == 0.0)
    return int(zeros[0]) if zeros.size else None


def single_dominant_peak(ts: TimeSeries) -> bool:
    """True when the iterations with f_I above half its maximum form one
    contiguous block -- a single dominant epidemic peak."""
    peak = ts.f_i.max()
    if peak <= 0:
        return False
    above = np.flatnonzero(ts.f_i > 0.5 * peak)
    return bool(above[-1] - above[0] + 1 == above.size)


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanPoint:
    """Replicate-averaged outcome at one fill fraction.

    f_s/f_i/f_d are means of the final state fractions; f_i_std is the
    sample standard deviation of final f_I across replicates.  f_i_occ is
    the occupied-normalized infected fraction f_I/(f_S+f_I).
    """

    f_r: float
    f_s: float
    f_i: float
    f_d: float
    f_i_std: float
    f_i_occ: float
    f_i_occ_std: float


def _scan_task(args) -> tuple[int, int, float, float, float]:
    (i_fr, i_rep, params, layout) = args
    grid = init_grid(params, layout=layout)
    _, final = run(params, grid)
    f_s, f_i, f_d = counts(final)
    return (i_fr, i_rep, f_s, f_i, f_d)


def _aggregate(f_r: float, finals: np.ndarray) -> ScanPoint:
    f_s, f_i, f_d = finals.mean(axis=0)
    ddof = 1 if finals.shape[0] > 1 else 0
    per_occ = np.where(
        finals[:, 0] + finals[:, 1] > 0,
        finals[:, 1] / np.maximum(finals[:, 0] + finals[:, 1], 1e-300),
        0.0,
    )
    return ScanPoint(
        f_r=f_r,
        f_s=float(f_s),
        f_i=float(f_i),
        f_d=float(f_d),
        f_i_std=float(finals[:, 1].std(ddof=ddof)),
        f_i_occ=float(per_occ.mean()),
        f_i_occ_std=float(per_occ.std(ddof=ddof)),
    )


def _run_scan(
    params: EpidemicParams,
    f_r_values,
    replicates: int,
    layout: DomainLayout | None,
    workers: int,
) -> list[ScanPoint]:
    f_r_values = [float(v) for v in f_r_values]
    if not f_r_values:
        raise ValueError("f_r_values must not be empty")
    for v in f_r_values:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"f_R value {v} outside [0, 1]")
    if params.gamma != 0.0:
        raise ValueError("threshold scans use the SIS regime (gamma = 0)")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if layout is not None:
        layout.validate(params.m)

    order = np.argsort(f_r_values, kind="stable")
    tasks = []
    for rank, idx in enumerate(order):
        f_r = f_r_values[idx]
        for i_rep in range(replicates):
            rep_params = dataclasses.replace(
                params,
                f_r=f_r,
                replicates=replicates,
                seed=subseed(params.seed, rank, i_rep),
            )
            tasks.append((rank, i_rep, rep_params, layout))

    finals = np.empty((len(order), replicates, 3))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scan_task, tasks, chunksize=4))
    else:
        results = [_scan_task(t) for t in tasks]
    for i_fr, i_rep, f_s, f_i, f_d in results:
        finals[i_fr, i_rep] = (f_s, f_i, f_d)

    return [
        _aggregate(f_r_values[idx], finals[rank])
        for rank, idx in enumerate(order)
    ]


def threshold_scan(
    params: EpidemicParams,
    f_r_values,
    replicates: int,
    workers: int = 1,
) -> list[ScanPoint]:
    """Final infected fraction versus fill fraction, replicate-averaged.

    Each (f_R, replicate) pair is sub-seeded deterministically from
    ``params.seed``, so results are independent of worker scheduling.
    Output is ordered by ascending f_R.
    """
    return _run_scan(params, f_r_values, replicates, None, workers)


def multi_domain_scan(
    params: EpidemicParams,
    layout: DomainLayout,
    f_r_values,
    workers: int = 1,
) -> list[ScanPoint]:
    """Threshold scan where each layout region offsets the local fill
    fraction; with a single zero-offset region it reproduces
    :func:`threshold_scan` run for run."""
    return _run_scan(params, f_r_values, params.replicates, layout, workers)


def scan_observable(points: list[ScanPoint], normalization: str = "occupied"):
    """(x, y) arrays for fitting a scan: y is the mean final infected
    fraction, normalized either by all cells or by occupied cells."""
    xs = np.array([p.f_r for p in points])
    if normalization == "all":
        ys = np.array([p.f_i for p in points])
    elif normalization == "occupied":
        ys = np.array([p.f_i_occ for p in points])
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return xs, ys


# ---------------------------------------------------------------------------
# domain walls
# ---------------------------------------------------------------------------

def detect_domain_wall(grid: Grid) -> set[tuple[int, int]]:
    """Cells on the non-infected side of the contagion interface: every
    susceptible or depleted cell with at least one infected Moore
    neighbor."""
    k = _infected_neighbor_count(grid.cells, periodic=False)
    mask = (grid.cells != INFECTED) & (k > 0)
    rows, cols = np.nonzero(mask)
    return {(int(r), int(c)) for r, c in zip(rows, cols)}


def wall_mean_column(wall: set[tuple[int, int]]) -> float:
    """Mean column index of a detected wall; NaN for an empty wall."""
    if not wall:
        return float("nan")
    return float(np.mean([c for _, c in wall]))
