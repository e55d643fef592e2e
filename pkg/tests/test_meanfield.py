import dataclasses

import numpy as np
import pytest

from rydsim.meanfield import (
    HysteresisCurve,
    MeanFieldParams,
    compose_domains,
    difference_bands,
    multistability_map,
    scan_hysteresis,
    self_consistency_residual,
    self_consistent_roots,
    steady_state,
    transmission,
    _follow_branch,
)

SWEEP = (-45.0, 5.0, 120)


def no_interaction(**kw) -> MeanFieldParams:
    return MeanFieldParams(**{"v": 0.0, **kw})


# ---------------------------------------------------------------------------
# steady state against closed-form oracles
# ---------------------------------------------------------------------------

def test_weak_probe_matches_analytic_eit_coherence():
    p = no_interaction(omega_p=1e-5, omega_c=6.0, delta_p=0.7, delta_c=2.3,
                       gamma_e=6.0, gamma_r=0.1, gamma_deph=0.5)
    st = steady_state(p)
    g_ge = p.gamma_e / 2
    g_gr = p.gamma_r / 2 + p.gamma_deph
    d2 = p.delta_p + p.delta_c
    oracle = (1j * p.omega_p / 2) / (
        g_ge + 1j * p.delta_p + (p.omega_c**2 / 4) / (g_gr + 1j * d2)
    )
    got = st.rho[0, 1]
    assert abs(got - oracle) / abs(oracle) < 1e-8


def test_no_drive_is_trivial():
    p = no_interaction(omega_p=0.0)
    st = steady_state(p)
    assert st.rho_rr == 0.0
    assert st.rho_ge_imag == 0.0
    assert transmission(st, p) == 1.0


def test_density_matrix_is_physical():
    for dc in (-30.0, -15.0, 0.0, 3.0):
        p = MeanFieldParams(delta_c=dc, f_r=0.6)
        st = steady_state(p, rho_rr_seed=0.5)
        assert st.converged
        assert 0.0 <= st.rho_rr <= 1.0
        assert abs(np.trace(st.rho) - 1.0) < 1e-9
        pops = np.diag(st.rho).real
        assert np.all(pops >= -1e-12) and np.all(pops <= 1.0 + 1e-12)
        assert np.allclose(st.rho, st.rho.conj().T, atol=1e-9)


def test_bistable_point_two_branches_match_root_oracle():
    # inside the bistable window, seeds 0 and 1 land on distinct branches
    # whose populations are roots of the self-consistency equation
    p = MeanFieldParams(f_r=0.33, delta_c=-18.0)
    low = steady_state(p, rho_rr_seed=0.0)
    high = steady_state(p, rho_rr_seed=1.0)
    assert low.converged and high.converged
    assert high.rho_rr - low.rho_rr > 1e-3
    roots = self_consistent_roots(p)
    assert len(roots) >= 3
    assert min(abs(low.rho_rr - r) for r in roots) < 1e-6
    assert min(abs(high.rho_rr - r) for r in roots) < 1e-6
    assert abs(low.rho_rr - roots[0]) < 1e-6
    assert abs(high.rho_rr - roots[-1]) < 1e-6


def test_self_consistency_closure_along_scan():
    # substituting any converged point back into the steady-state map
    # reproduces it (independent of the iteration path that found it)
    curve = scan_hysteresis(MeanFieldParams(f_r=0.33), (-25.0, -5.0, 40), "positive")
    p = MeanFieldParams(f_r=0.33)
    for dc, rho in zip(curve.delta_c[::5], curve.rho_rr[::5]):
        res = self_consistency_residual(dataclasses.replace(p, delta_c=float(dc)), float(rho))
        assert abs(res) < 1e-5


def test_seed_validation():
    with pytest.raises(ValueError):
        steady_state(MeanFieldParams(), rho_rr_seed=1.5)


# ---------------------------------------------------------------------------
# transmission
# ---------------------------------------------------------------------------

def test_transmission_od_zero_is_one():
    p = no_interaction(od=0.0, delta_c=1.0)
    st = steady_state(p)
    assert transmission(st, p) == 1.0


def test_transmission_ideal_eit_is_one():
    p = no_interaction(omega_p=2.0, omega_c=6.0, delta_p=0.0, delta_c=0.0,
                       gamma_e=6.0, gamma_r=0.0, gamma_deph=0.0, od=3.0)
    st = steady_state(p)
    assert transmission(st, p) == pytest.approx(1.0, abs=1e-12)


def test_transmission_two_level_resonant_reference():
    # with the coupling off and od=1, resonant transmission is exactly 1/e
    p = no_interaction(omega_c=0.0, delta_p=0.0, delta_c=0.0, od=1.0)
    st = steady_state(p)
    assert transmission(st, p) == pytest.approx(np.exp(-1.0), rel=1e-12)


def test_transmission_rejects_non_converged():
    p = MeanFieldParams()
    st = steady_state(p)
    bad = dataclasses.replace(st, converged=False)
    with pytest.raises(ValueError):
        transmission(bad, p)


def test_transmission_bounds_along_scan():
    for direction in ("positive", "negative"):
        c = scan_hysteresis(MeanFieldParams(f_r=0.8), SWEEP, direction)
        assert np.all(c.transmission >= 0.0)
        assert np.all(c.transmission <= 1.0)
        assert np.all((c.rho_rr >= 0.0) & (c.rho_rr <= 1.0))


# ---------------------------------------------------------------------------
# hysteresis scans
# ---------------------------------------------------------------------------

def test_scan_directions_monotone_axes():
    pos = scan_hysteresis(MeanFieldParams(f_r=0.33), (-20.0, -10.0, 30), "positive")
    neg = scan_hysteresis(MeanFieldParams(f_r=0.33), (-20.0, -10.0, 30), "negative")
    assert np.all(np.diff(pos.delta_c) > 0)
    assert np.all(np.diff(neg.delta_c) < 0)
    assert pos.points()[0][0] == -20.0
    assert neg.points()[0][0] == -10.0


def test_no_interaction_scan_direction_degenerate():
    p = no_interaction(f_r=0.9)
    pos = scan_hysteresis(p, SWEEP, "positive")
    neg = scan_hysteresis(p, SWEEP, "negative")
    assert np.max(np.abs(pos.transmission - neg.transmission[::-1])) < 1e-8


def test_bistable_window_and_single_jump_per_direction():
    pos = scan_hysteresis(MeanFieldParams(f_r=0.33), SWEEP, "positive")
    neg = scan_hysteresis(MeanFieldParams(f_r=0.33), SWEEP, "negative")
    diff = pos.transmission - neg.transmission[::-1]
    bands = difference_bands(pos.delta_c, diff, 0.05)
    assert len(bands) == 1
    step = (SWEEP[1] - SWEEP[0]) / (SWEEP[2] - 1)
    for curve in (pos, neg):
        jumps = np.abs(np.diff(curve.transmission))
        assert (jumps > 0.1).sum() == 1  # one discontinuous jump per direction


def test_jump_sharpness_dominates_median_slope():
    pos = scan_hysteresis(MeanFieldParams(f_r=0.33), (-45.0, 5.0, 300), "positive")
    slopes = np.abs(np.gradient(pos.transmission, pos.delta_c))
    assert slopes.max() > 10 * np.median(slopes)


def test_branch_consistency_backwards_rescan():
    # re-running the sweep backwards from its endpoint reproduces the
    # negative-direction curve (same branch until the fold)
    p = MeanFieldParams(f_r=0.33)
    pos = scan_hysteresis(p, SWEEP, "positive")
    back_ts, back_rho = _follow_branch(p, pos.delta_c[::-1], float(pos.rho_rr[-1]))
    neg = scan_hysteresis(p, SWEEP, "negative")
    assert np.max(np.abs(back_ts - neg.transmission)) < 1e-6


def test_monotone_window_growth_reported():
    # window width should not shrink as the interaction scales up;
    # violations are reported, not asserted (finite sweep resolution)
    widths = []
    for f_r in (0.3, 0.5, 0.8):
        pos = scan_hysteresis(MeanFieldParams(f_r=f_r), SWEEP, "positive")
        neg = scan_hysteresis(MeanFieldParams(f_r=f_r), SWEEP, "negative")
        diff = pos.transmission - neg.transmission[::-1]
        bands = difference_bands(pos.delta_c, diff, 0.02)
        widths.append(sum(b - a for a, b in bands))
    for a, b in zip(widths, widths[1:]):
        if b < a:
            print(f"window-width decrease finding: {widths}")
    assert widths[-1] > 0


def test_scan_validates():
    with pytest.raises(ValueError):
        scan_hysteresis(MeanFieldParams(), (-1.0, 1.0, 1), "positive")
    with pytest.raises(ValueError):
        scan_hysteresis(MeanFieldParams(), (-1.0, 1.0, 10), "sideways")


# ---------------------------------------------------------------------------
# domain composition
# ---------------------------------------------------------------------------

def test_compose_single_domain_reduces_to_scan():
    p = MeanFieldParams(f_r=0.33)
    solo = scan_hysteresis(p, SWEEP, "positive")
    comp = compose_domains([(p, 1.0)], SWEEP, "positive")
    assert np.array_equal(comp.transmission, solo.transmission)


def _log_jumps(curve: HysteresisCurve, threshold: float = 0.04) -> int:
    # weighted multiplicative composition is additive in log-transmission,
    # so per-domain jumps stay crisp there regardless of their weight
    return int((np.abs(np.diff(np.log(curve.transmission))) > threshold).sum())


def test_compose_two_domains_two_jumps():
    doms = [(MeanFieldParams(f_r=0.33), 0.5), (MeanFieldParams(f_r=0.9), 0.5)]
    pos = compose_domains(doms, (-45.0, 5.0, 250), "positive")
    assert _log_jumps(pos) == 2


def test_compose_three_domains_three_jumps():
    doms = [
        (MeanFieldParams(f_r=0.33), 1 / 3),
        (MeanFieldParams(f_r=0.62), 1 / 3),
        (MeanFieldParams(f_r=1.0), 1 / 3),
    ]
    pos = compose_domains(doms, (-45.0, 5.0, 250), "positive")
    assert _log_jumps(pos) == 3


def test_compose_additive_mode_differs():
    doms = [(MeanFieldParams(f_r=0.33), 0.5), (MeanFieldParams(f_r=0.9), 0.5)]
    mult = compose_domains(doms, (-20.0, -10.0, 20), "positive", "multiplicative")
    add = compose_domains(doms, (-20.0, -10.0, 20), "positive", "additive")
    assert not np.allclose(mult.transmission, add.transmission)
    assert np.all(add.transmission >= mult.transmission - 1e-12)  # AM-GM


def test_compose_validates_weights():
    p = MeanFieldParams()
    with pytest.raises(ValueError):
        compose_domains([(p, 0.4), (p, 0.4)], SWEEP, "positive")
    with pytest.raises(ValueError):
        compose_domains([(p, 1.5), (p, -0.5)], SWEEP, "positive")
    with pytest.raises(ValueError):
        compose_domains([], SWEEP, "positive")


# ---------------------------------------------------------------------------
# multistability map
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_map():
    return multistability_map(
        MeanFieldParams(), [0.0, 0.1, 0.9], (-45.0, 5.0, 110), f_r1=0.33
    )


def test_map_shape_row_major(small_map):
    assert small_map.difference.shape == (3, 110)
    assert np.all(np.diff(small_map.delta_c) > 0)


def test_map_zero_f_r2_single_band(small_map):
    bands = difference_bands(small_map.delta_c, small_map.difference[0], 0.05)
    assert len(bands) == 1


def test_map_intermediate_two_disjoint_bands(small_map):
    bands = difference_bands(small_map.delta_c, small_map.difference[1], 0.05)
    assert len(bands) == 2


def test_map_overlap_regime_exists():
    # both domains simultaneously bistable at matched densities: their
    # individual windows intersect
    def window(f_r):
        pos = scan_hysteresis(MeanFieldParams(f_r=f_r), SWEEP, "positive")
        neg = scan_hysteresis(MeanFieldParams(f_r=f_r), SWEEP, "negative")
        bands = difference_bands(
            pos.delta_c, pos.transmission - neg.transmission[::-1], 0.05
        )
        return bands[0] if bands else None

    w1 = window(0.33)
    w2 = window(0.4)
    assert w1 and w2
    lo = max(w1[0], w2[0])
    hi = min(w1[1], w2[1])
    assert lo < hi  # overlapping bistable windows
