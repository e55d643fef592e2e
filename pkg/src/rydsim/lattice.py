"""Core 2D lattice: cell states, synchronous stepping, and snapshots.

The world is an m x m grid of three-state cells:

* ``DEPLETED``    -- ground/immune, absorbing (black in snapshots)
* ``SUSCEPTIBLE`` -- occupied, non-interacting (green)
* ``INFECTED``    -- occupied, interacting/spreading (red)

One step updates every cell synchronously from the pre-step state using
its eight Moore neighbors.  All randomness is counter-based
(see :mod:`rydsim.rng`), so a grid's trajectory is a pure function of
(seed, initial cells, params).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .rng import STREAM_EXIT, STREAM_INFECT, grid_hash_base, stream_uniforms

DEPLETED = 0
SUSCEPTIBLE = 1
INFECTED = 2


class BoundaryPolicy(enum.Enum):
    """Edge handling for stepping.

    ABSORBING_EDGE: out-of-grid neighbors do not exist, and infected cells
    sitting on the border are removed (depleted) at the end of each step,
    as if they had left the active volume.  PERIODIC: neighbors wrap.
    """

    ABSORBING_EDGE = "absorbing_edge"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class StepParams:
    """Per-step transition probabilities.

    beta : per-contact S->I infection probability per infected neighbor
    mu   : I->S reversion probability
    gamma: I->D depletion probability

    gamma and mu compete in a single categorical draw per infected cell,
    so gamma + mu must not exceed 1.
    """

    beta: float
    mu: float = 0.0
    gamma: float = 0.0
    boundary: BoundaryPolicy = BoundaryPolicy.ABSORBING_EDGE

    def __post_init__(self):
        for name in ("beta", "mu", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.gamma + self.mu > 1.0:
            raise ValueError(
                f"gamma + mu must be <= 1 (one categorical draw), "
                f"got gamma={self.gamma}, mu={self.mu}"
            )


@dataclass(frozen=True)
class Grid:
    """Immutable snapshot of the lattice.

    ``cells`` is an m x m int8 array of state codes; the array is marked
    read-only so snapshots can be shared across threads safely.
    """

    m: int
    cells: np.ndarray
    iteration: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"side length m must be >= 1, got {self.m}")
        cells = np.asarray(self.cells, dtype=np.int8)
        if cells.shape != (self.m, self.m):
            raise ValueError(f"cells must be {self.m}x{self.m}, got {cells.shape}")
        # state codes are the contiguous range DEPLETED..INFECTED
        if cells.size and (cells.min() < DEPLETED or cells.max() > INFECTED):
            raise ValueError("cells contain an unknown state code")
        if cells.flags.writeable:
            cells = cells.copy()  # do not freeze caller-owned arrays
            cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    def state_counts(self) -> tuple[int, int, int]:
        """Integer (n_S, n_I, n_D); always sums to m*m."""
        n = np.bincount(self.cells.ravel(), minlength=3)
        return int(n[SUSCEPTIBLE]), int(n[INFECTED]), int(n[DEPLETED])


def moore_neighbors(coord: tuple[int, int], m: int) -> list[tuple[int, int]]:
    """All in-grid coordinates at Chebyshev distance 1 from ``coord``.

    Returns 8 neighbors in the interior, 5 on an edge, 3 in a corner.
    """
    row, col = coord
    if not (0 <= row < m and 0 <= col < m):
        raise ValueError(f"coord {coord} out of range for m={m}")
    out = []
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            r, c = row + dr, col + dc
            if 0 <= r < m and 0 <= c < m:
                out.append((r, c))
    return out


def _infected_neighbor_count(cells: np.ndarray, periodic: bool) -> np.ndarray:
    """Number of infected Moore neighbors per cell (int16)."""
    inf = (cells == INFECTED).astype(np.int16)
    if periodic:
        padded = np.pad(inf, 1, mode="wrap")
    else:
        padded = np.pad(inf, 1, mode="constant")
    k = np.zeros_like(inf)
    for dr in (0, 1, 2):
        for dc in (0, 1, 2):
            if dr == 1 and dc == 1:
                continue
            k += padded[dr : dr + inf.shape[0], dc : dc + inf.shape[1]]
    return k


def step(grid: Grid, params: StepParams) -> Grid:
    """Advance the lattice by one synchronous iteration.

    All transitions are computed from the pre-step state:

    1. A susceptible cell with k >= 1 infected Moore neighbors becomes
       infected with probability 1 - (1-beta)**k.
    2. An infected cell makes one categorical draw: depleted with
       probability gamma, susceptible with probability mu, else it stays
       infected.
    3. Depleted cells never change.
    4. Under ABSORBING_EDGE, infected cells on the border become depleted
       after rules 1-3.

    Deterministic in (grid.seed, grid.iteration, coordinates) regardless
    of internal evaluation order.
    """
    cells = grid.cells
    periodic = params.boundary is BoundaryPolicy.PERIODIC
    k = _infected_neighbor_count(cells, periodic)

    new = np.array(cells, dtype=np.int8, copy=True)
    base = grid_hash_base(grid.seed, grid.iteration, grid.m)

    u_infect = stream_uniforms(base, STREAM_INFECT)
    # 1 - (1-beta)^k via table lookup; k is at most the 8 Moore neighbors
    p_infect = 1.0 - (1.0 - params.beta) ** np.arange(9)
    catch = (cells == SUSCEPTIBLE) & (u_infect < p_infect[k])
    new[catch] = INFECTED

    u_exit = stream_uniforms(base, STREAM_EXIT)
    infected = cells == INFECTED
    new[infected & (u_exit < params.gamma)] = DEPLETED
    new[infected & (u_exit >= params.gamma) & (u_exit < params.gamma + params.mu)] = SUSCEPTIBLE

    if not periodic:
        border = np.zeros((grid.m, grid.m), dtype=bool)
        border[0, :] = border[-1, :] = border[:, 0] = border[:, -1] = True
        new[border & (new == INFECTED)] = DEPLETED

    return Grid(m=grid.m, cells=new, iteration=grid.iteration + 1, seed=grid.seed)


def counts(grid: Grid) -> tuple[float, float, float]:
    """State fractions (f_S, f_I, f_D) of the N = m*m cells.

    f_S and f_I are exact integer ratios; f_D is computed as
    1 - (f_S + f_I), which guarantees f_S + f_I + f_D == 1.0 exactly in
    floating point (the naive three-ratio sum does not).
    """
    n_s, n_i, _ = grid.state_counts()
    n = grid.m * grid.m
    f_s = n_s / n
    f_i = n_i / n
    return f_s, f_i, 1.0 - (f_s + f_i)


def to_pgm(grid: Grid) -> str:
    """Serialize as a plain-text P2 PGM image.

    Gray levels are the state codes (0=depleted, 1=susceptible,
    2=infected), row-major; a comment line carries the grid metadata
    (m, iteration, seed).
    """
    lines = [
        "P2",
        f"# m={grid.m} iteration={grid.iteration} seed={grid.seed}",
        f"{grid.m} {grid.m}",
        "2",
    ]
    for row in grid.cells:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def from_pgm(text: str) -> Grid:
    """Parse a snapshot written by :func:`to_pgm`."""
    meta = {}
    tokens: list[str] = []
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#"):
            for part in line[1:].split():
                if "=" in part:
                    key, val = part.split("=", 1)
                    meta[key] = int(val)
            continue
        tokens.extend(line.split())
    if not tokens or tokens[0] != "P2":
        raise ValueError("not a P2 PGM snapshot")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if width != height:
        raise ValueError(f"snapshot must be square, got {width}x{height}")
    if maxval != 2:
        raise ValueError(f"expected maxval 2, got {maxval}")
    values = np.array([int(t) for t in tokens[4:]], dtype=np.int8)
    if values.size != width * height:
        raise ValueError("pixel count does not match header")
    return Grid(
        m=width,
        cells=values.reshape(height, width),
        iteration=meta.get("iteration", 0),
        seed=meta.get("seed", 0),
    )
