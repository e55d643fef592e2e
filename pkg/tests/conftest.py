"""Shared test oracles, independent of the implementation paths they check."""

from __future__ import annotations

import numpy as np

from rydsim.lattice import DEPLETED, INFECTED, SUSCEPTIBLE, Grid, moore_neighbors


def bfs_step_sets(
    susceptible: set, infected: set, depleted: set, m: int, absorbing: bool
) -> tuple[set, set, set]:
    """One deterministic-limit update (beta=1, gamma=mu=0) on coordinate
    sets: BFS layer expansion through susceptible-connected Moore paths,
    then edge absorption."""
    newly = {
        cell
        for cell in susceptible
        if any(n in infected for n in moore_neighbors(cell, m))
    }
    susceptible = susceptible - newly
    infected = infected | newly
    if absorbing:
        border = {
            (r, c) for (r, c) in infected if r in (0, m - 1) or c in (0, m - 1)
        }
        infected -= border
        depleted = depleted | border
    return susceptible, infected, depleted


def bfs_evolve(grid: Grid, steps: int, absorbing: bool = True) -> np.ndarray:
    """Deterministic-limit oracle: evolve a grid ``steps`` iterations by
    set-based BFS and return the resulting cell array."""
    cells = grid.cells
    sus = {tuple(c) for c in np.argwhere(cells == SUSCEPTIBLE)}
    inf = {tuple(c) for c in np.argwhere(cells == INFECTED)}
    dep = {tuple(c) for c in np.argwhere(cells == DEPLETED)}
    for _ in range(steps):
        sus, inf, dep = bfs_step_sets(sus, inf, dep, grid.m, absorbing)
    out = np.full((grid.m, grid.m), DEPLETED, dtype=np.int8)
    for r, c in sus:
        out[r, c] = SUSCEPTIBLE
    for r, c in inf:
        out[r, c] = INFECTED
    return out


def random_grid(rng: np.random.Generator, m: int, p_sus: float, p_inf: float, seed: int) -> Grid:
    """Random three-state grid for property tests."""
    u = rng.random((m, m))
    cells = np.full((m, m), DEPLETED, dtype=np.int8)
    cells[u < p_sus + p_inf] = SUSCEPTIBLE
    cells[u < p_inf] = INFECTED
    return Grid(m=m, cells=cells, seed=seed)
