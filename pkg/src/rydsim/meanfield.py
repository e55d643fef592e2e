"""Mean-field steady states of a driven three-level ladder medium.

A probe couples |g> -> |e> (Rabi frequency omega_p, detuning delta_p) and
a coupling field |e> -> |r> (omega_c, delta_c).  The upper-state
population feeds back on the two-photon detuning through a mean-field
shift,

    delta_c_eff = delta_c - v * f_r * rho_rr,

which closes a self-consistency loop: above a critical interaction
strength the steady state folds into coexisting low- and high-population
branches, producing hysteresis when delta_c is swept in opposite
directions.  Multi-domain media are composed from per-domain responses.

All rates and frequencies share one angular-frequency unit (the bundled
defaults read as 2*pi*MHz).  The shift sign convention lives in the sign
of ``v``: negative v moves the dressed resonance toward more negative
delta_c as rho_rr grows, putting the jumps on the red side.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

FIXED_POINT_DAMPING = 0.5
FIXED_POINT_MAX_ITER = 500
FIXED_POINT_TOL = 1e-10
ROOT_GRID_SIZE = 512

# Experimental perturbing-beam Rabi frequencies quoted for the two- and
# three-domain measurements (2*pi*MHz).  Documentation constants only:
# domains here are parameterized directly by their density fractions.
OMEGA_PERT_1 = 3.7
OMEGA_PERT_2 = 2.2


@dataclass(frozen=True)
class MeanFieldParams:
    """Single-domain medium parameters (angular frequency units).

    v is the mean-field interaction strength: the two-photon line shifts
    by v * f_r * rho_rr.  od is the resonant two-level optical depth used
    to normalize transmission.
    """

    omega_p: float = 3.0
    omega_c: float = 6.0
    delta_p: float = 0.0
    delta_c: float = 0.0
    gamma_e: float = 6.0
    gamma_r: float = 0.1
    gamma_deph: float = 0.2
    v: float = -600.0
    od: float = 1.5
    f_r: float = 1.0

    def __post_init__(self):
        for name in ("omega_p", "omega_c", "gamma_e", "gamma_r", "gamma_deph", "od"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.f_r <= 1.0:
            raise ValueError(f"f_r must be in [0, 1], got {self.f_r}")
        if self.gamma_e == 0 and self.gamma_r == 0 and self.gamma_deph == 0:
            raise ValueError("at least one decay channel is required for a steady state")

    @property
    def shift_strength(self) -> float:
        """Effective interaction of the domain: v scaled by its density."""
        return self.v * self.f_r


@dataclass(frozen=True)
class SteadyState:
    """Self-consistent solution at one working point."""

    rho_rr: float
    rho_ge_imag: float
    converged: bool
    residual: float
    iterations: int
    rho: np.ndarray  # full 3x3 density matrix

    def __post_init__(self):
        rho = np.asarray(self.rho)
        rho.flags.writeable = False
        object.__setattr__(self, "rho", rho)


@dataclass(frozen=True)
class HysteresisCurve:
    """Transmission along one scan direction of delta_c."""

    direction: str  # "positive" or "negative"
    delta_c: np.ndarray
    transmission: np.ndarray
    rho_rr: np.ndarray

    def points(self) -> list[tuple[float, float]]:
        return [(float(d), float(t)) for d, t in zip(self.delta_c, self.transmission)]


# ---------------------------------------------------------------------------
# Liouvillian assembly (basis g=0, e=1, r=2; row-major vectorization)
# ---------------------------------------------------------------------------

def _dissipator(op: np.ndarray) -> np.ndarray:
    eye = np.eye(3)
    opd_op = op.conj().T @ op
    return (
        np.kron(op, op.conj())
        - 0.5 * np.kron(opd_op, eye)
        - 0.5 * np.kron(eye, opd_op.T)
    )


def _hamiltonian_part(h: np.ndarray) -> np.ndarray:
    eye = np.eye(3)
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def _liouvillian_parts(p: MeanFieldParams) -> tuple[np.ndarray, np.ndarray]:
    """(L0, L1) with L(delta_c_eff) = L0 + delta_c_eff * L1."""
    h0 = np.array(
        [
            [0.0, p.omega_p / 2, 0.0],
            [p.omega_p / 2, -p.delta_p, p.omega_c / 2],
            [0.0, p.omega_c / 2, -p.delta_p],
        ],
        dtype=complex,
    )
    h1 = np.zeros((3, 3), dtype=complex)
    h1[2, 2] = -1.0  # the effective coupling detuning acts on |r>

    decay_e = np.zeros((3, 3), dtype=complex)
    decay_e[0, 1] = np.sqrt(p.gamma_e)
    decay_r = np.zeros((3, 3), dtype=complex)
    decay_r[0, 2] = np.sqrt(p.gamma_r)
    deph = np.zeros((3, 3), dtype=complex)
    deph[2, 2] = np.sqrt(2.0 * p.gamma_deph)

    l0 = _hamiltonian_part(h0)
    for op in (decay_e, decay_r, deph):
        l0 += _dissipator(op)
    return l0, _hamiltonian_part(h1)


_TRACE_ROW = np.zeros(9, dtype=complex)
_TRACE_ROW[[0, 4, 8]] = 1.0


def _solve_fixed_detuning(l0: np.ndarray, l1: np.ndarray, delta_eff: float) -> np.ndarray:
    """Density matrix solving L(rho) = 0, tr(rho) = 1 at fixed detuning."""
    a = l0 + delta_eff * l1
    a[0, :] = _TRACE_ROW  # replace one redundant row with the trace constraint
    b = np.zeros(9, dtype=complex)
    b[0] = 1.0
    try:
        vec = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        vec = np.linalg.lstsq(a, b, rcond=None)[0]
    return vec.reshape(3, 3)


def _rho_rr_at(l0: np.ndarray, l1: np.ndarray, delta_eff: float) -> float:
    return float(np.clip(_solve_fixed_detuning(l0, l1, delta_eff)[2, 2].real, 0.0, 1.0))


# ---------------------------------------------------------------------------
# self-consistent steady state
# ---------------------------------------------------------------------------

def steady_state(params: MeanFieldParams, rho_rr_seed: float = 0.0) -> SteadyState:
    """Solve the mean-field self-consistency from a seed population.

    Damped fixed-point iteration on rho_rr (the inner step is an exact
    linear steady-state solve at frozen effective detuning).  Returns the
    stable branch reachable from the seed.

    Strongly folded branches can be dynamically stable yet unstable under
    the damped map (it cycles instead of settling); in that case the
    solver falls back to bracketed bisection on the scalar
    self-consistency residual and takes the dynamically stable root
    nearest the seed, preserving branch identity.  With no root at all,
    the result carries converged=False and the best residual.
    """
    if not 0.0 <= rho_rr_seed <= 1.0:
        raise ValueError(f"rho_rr_seed must be in [0, 1], got {rho_rr_seed}")
    l0, l1 = _liouvillian_parts(params)
    shift = params.shift_strength

    rho_rr = float(rho_rr_seed)
    converged = False
    residual = np.inf
    check_residual = np.inf
    iterations = 0
    for iterations in range(1, FIXED_POINT_MAX_ITER + 1):
        target = _rho_rr_at(l0, l1, params.delta_c - shift * rho_rr)
        residual = abs(target - rho_rr)
        rho_rr = (1.0 - FIXED_POINT_DAMPING) * rho_rr + FIXED_POINT_DAMPING * target
        if residual < FIXED_POINT_TOL:
            converged = True
            break
        # cycle detection: no order-of-magnitude progress over 25 steps
        if iterations % 25 == 0:
            if residual > 0.1 * check_residual:
                break
            check_residual = residual

    if not converged:
        root = _nearest_stable_root(l0, l1, params, float(rho_rr_seed))
        if root is not None:
            rho_rr = root
            residual = abs(_rho_rr_at(l0, l1, params.delta_c - shift * rho_rr) - rho_rr)
            converged = residual < np.sqrt(FIXED_POINT_TOL)

    rho = _solve_fixed_detuning(l0, l1, params.delta_c - shift * rho_rr)
    return SteadyState(
        rho_rr=float(np.clip(rho[2, 2].real, 0.0, 1.0)),
        rho_ge_imag=float(rho[0, 1].imag),
        converged=converged,
        residual=float(residual),
        iterations=iterations,
        rho=rho,
    )


def self_consistency_residual(params: MeanFieldParams, rho_rr: float) -> float:
    """g(rho) = rho_rr_ss(delta_c - v*f_r*rho) - rho; roots are the
    self-consistent populations."""
    l0, l1 = _liouvillian_parts(params)
    return _rho_rr_at(l0, l1, params.delta_c - params.shift_strength * rho_rr) - rho_rr


def _roots_from_parts(l0, l1, params: MeanFieldParams, n_grid: int) -> list[float]:
    shift = params.shift_strength

    def g(r: float) -> float:
        return _rho_rr_at(l0, l1, params.delta_c - shift * r) - r

    grid = np.linspace(0.0, 1.0, n_grid + 1)
    values = np.array([g(r) for r in grid])
    roots = []
    for i in range(n_grid):
        lo, hi = grid[i], grid[i + 1]
        glo, ghi = values[i], values[i + 1]
        if glo == 0.0:
            roots.append(float(lo))
            continue
        if glo * ghi < 0:
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                gm = g(mid)
                if glo * gm <= 0:
                    hi = mid
                else:
                    lo, glo = mid, gm
            roots.append(0.5 * (lo + hi))
    if values[-1] == 0.0:
        roots.append(float(grid[-1]))
    return sorted(roots)


def self_consistent_roots(params: MeanFieldParams, n_grid: int = ROOT_GRID_SIZE) -> list[float]:
    """All self-consistent rho_rr values at the params' delta_c, found by
    dense sign-change bracketing plus bisection.  Independent of the
    fixed-point path, so it doubles as an oracle for steady_state."""
    l0, l1 = _liouvillian_parts(params)
    return _roots_from_parts(l0, l1, params, n_grid)


def _map_slope(l0, l1, params: MeanFieldParams, rho: float, eps: float = 1e-7) -> float:
    """d(rho_rr_ss)/d(rho) of the self-consistency map at a point."""
    shift = params.shift_strength
    hi = _rho_rr_at(l0, l1, params.delta_c - shift * (rho + eps))
    lo = _rho_rr_at(l0, l1, params.delta_c - shift * (rho - eps))
    return (hi - lo) / (2.0 * eps)


def _nearest_stable_root(l0, l1, params: MeanFieldParams, near: float) -> float | None:
    """Dynamically stable root (map slope < 1, i.e. g'(rho) < 0) closest
    to ``near``; middle-branch roots are excluded."""
    roots = _roots_from_parts(l0, l1, params, ROOT_GRID_SIZE)
    stable = [r for r in roots if _map_slope(l0, l1, params, r) < 1.0]
    candidates = stable or roots
    if not candidates:
        return None
    return min(candidates, key=lambda r: abs(r - near))


# ---------------------------------------------------------------------------
# transmission
# ---------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _two_level_reference(omega_p: float, gamma_e: float) -> float:
    """Im(rho_ge) of the bare two-level probe transition on resonance,
    at the same probe power; normalizes od to the two-level optical
    depth."""
    ref = MeanFieldParams(
        omega_p=omega_p,
        omega_c=0.0,
        delta_p=0.0,
        delta_c=0.0,
        gamma_e=gamma_e,
        gamma_r=1.0,  # irrelevant: |r> is dark without coupling light
        gamma_deph=0.0,
        v=0.0,
        od=0.0,
        f_r=0.0,
    )
    l0, l1 = _liouvillian_parts(ref)
    return float(_solve_fixed_detuning(l0, l1, 0.0)[0, 1].imag)


def transmission(state: SteadyState, params: MeanFieldParams) -> float:
    """Probe transmission T = exp(-od * Im(rho_ge) / ref), with ref the
    resonant two-level coherence at identical probe power.

    T = 1 for a zero-power probe by convention.  Raises on
    non-converged states.
    """
    if not state.converged:
        raise ValueError("transmission of a non-converged steady state is undefined")
    if params.omega_p == 0.0:
        return 1.0
    ref = _two_level_reference(params.omega_p, params.gamma_e)
    t = float(np.exp(-params.od * state.rho_ge_imag / ref))
    return min(max(t, 0.0), 1.0)  # guard 1-ulp excursions at perfect EIT


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------

def _sweep_values(delta_c_range: tuple[float, float, int], direction: str) -> np.ndarray:
    start, stop, steps = delta_c_range
    if steps < 2:
        raise ValueError("delta_c sweep needs at least 2 steps")
    values = np.linspace(min(start, stop), max(start, stop), int(steps))
    if direction == "negative":
        return values[::-1]
    if direction == "positive":
        return values
    raise ValueError(f"direction must be 'positive' or 'negative', got {direction!r}")


def _follow_branch(
    params: MeanFieldParams, delta_cs: np.ndarray, rho_seed: float
) -> tuple[np.ndarray, np.ndarray]:
    """Steady states along a sweep, each point seeded with the previous
    solution (adiabatic branch following).  Returns (T, rho_rr) arrays."""
    ts = np.empty(delta_cs.size)
    rhos = np.empty(delta_cs.size)
    seed = rho_seed
    for i, dc in enumerate(delta_cs):
        point = dataclasses.replace(params, delta_c=float(dc))
        state = steady_state(point, rho_rr_seed=seed)
        if not state.converged:
            raise RuntimeError(
                f"steady state failed to converge at sweep point {i} "
                f"(delta_c={dc:.6g}, residual={state.residual:.3g})"
            )
        ts[i] = transmission(state, point)
        rhos[i] = state.rho_rr
        seed = state.rho_rr
    return ts, rhos


def scan_hysteresis(
    params: MeanFieldParams,
    delta_c_range: tuple[float, float, int],
    direction: str = "positive",
) -> HysteresisCurve:
    """Sweep delta_c in one direction with branch following.

    The positive scan enters on the low-population branch (seed 0); the
    negative scan enters on the highest self-consistent branch at its
    starting detuning.
    """
    delta_cs = _sweep_values(delta_c_range, direction)
    if direction == "positive":
        seed = 0.0
    else:
        first = dataclasses.replace(params, delta_c=float(delta_cs[0]))
        roots = self_consistent_roots(first)
        seed = roots[-1] if roots else 0.0
    ts, rhos = _follow_branch(params, delta_cs, seed)
    return HysteresisCurve(
        direction=direction, delta_c=delta_cs.copy(), transmission=ts, rho_rr=rhos
    )


def compose_domains(
    domains: list[tuple[MeanFieldParams, float]],
    delta_c_range: tuple[float, float, int],
    direction: str = "positive",
    mode: str = "multiplicative",
) -> HysteresisCurve:
    """Total transmission of several domains sharing one delta_c sweep.

    ``multiplicative`` treats domains as sequential absorbers, so their
    weighted optical depths add: T = prod T_i^w_i.  ``additive`` is the
    weighted-average alternative T = sum w_i T_i for comparison.  Weights
    must be positive and sum to 1.
    """
    if not domains:
        raise ValueError("need at least one domain")
    weights = np.array([w for _, w in domains], dtype=float)
    if np.any(weights <= 0):
        raise ValueError("domain weights must be positive")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError(f"domain weights must sum to 1, got {weights.sum()}")
    if mode not in ("multiplicative", "additive"):
        raise ValueError(f"unknown composition mode {mode!r}")

    delta_cs = _sweep_values(delta_c_range, direction)
    total = np.ones(delta_cs.size) if mode == "multiplicative" else np.zeros(delta_cs.size)
    rho_w = np.zeros(delta_cs.size)
    for (dom, w) in domains:
        curve = scan_hysteresis(dom, delta_c_range, direction)
        if mode == "multiplicative":
            total *= curve.transmission**w
        else:
            total += w * curve.transmission
        rho_w += w * curve.rho_rr
    return HysteresisCurve(
        direction=direction, delta_c=delta_cs, transmission=total, rho_rr=rho_w
    )


@dataclass(frozen=True)
class MultistabilityMap:
    """Directional transmission difference over (f_R2, delta_c)."""

    f_r2: np.ndarray
    delta_c: np.ndarray  # ascending
    difference: np.ndarray  # shape (len(f_r2), len(delta_c)), T(+) - T(-)
    t_positive: np.ndarray
    t_negative: np.ndarray


def multistability_map(
    base: MeanFieldParams,
    f_r2_values,
    delta_c_range: tuple[float, float, int],
    f_r1: float = 0.33,
    weights: tuple[float, float] = (0.5, 0.5),
    mode: str = "multiplicative",
) -> MultistabilityMap:
    """Two-domain scan-direction asymmetry map.

    Domain 1 is pinned at fraction f_r1; domain 2 sweeps over
    ``f_r2_values``.  Each row runs both scan directions of the composed
    medium and stores the pointwise difference T(+) - T(-) on the
    ascending delta_c axis.
    """
    f_r2_values = [float(v) for v in f_r2_values]
    if not f_r2_values:
        raise ValueError("f_r2_values must not be empty")
    axis = _sweep_values(delta_c_range, "positive")
    diff = np.empty((len(f_r2_values), axis.size))
    t_pos = np.empty_like(diff)
    t_neg = np.empty_like(diff)
    dom1 = dataclasses.replace(base, f_r=f_r1)
    for i, f2 in enumerate(f_r2_values):
        dom2 = dataclasses.replace(base, f_r=f2)
        domains = [(dom1, weights[0]), (dom2, weights[1])]
        pos = compose_domains(domains, delta_c_range, "positive", mode)
        neg = compose_domains(domains, delta_c_range, "negative", mode)
        t_pos[i] = pos.transmission
        t_neg[i] = neg.transmission[::-1]  # align to ascending axis
        diff[i] = t_pos[i] - t_neg[i]
    return MultistabilityMap(
        f_r2=np.array(f_r2_values),
        delta_c=axis,
        difference=diff,
        t_positive=t_pos,
        t_negative=t_neg,
    )


def difference_bands(
    delta_c: np.ndarray, row: np.ndarray, threshold: float = 0.05
) -> list[tuple[float, float]]:
    """Contiguous delta_c intervals where |row| exceeds ``threshold``.

    Utility for reading band structure (bistable windows) off a map row
    or a pair of hysteresis curves.
    """
    mask = np.abs(row) > threshold
    bands = []
    start = None
    for i, on in enumerate(mask):
        if on and start is None:
            start = i
        elif not on and start is not None:
            bands.append((float(delta_c[start]), float(delta_c[i - 1])))
            start = None
    if start is not None:
        bands.append((float(delta_c[start]), float(delta_c[-1])))
    return bands
