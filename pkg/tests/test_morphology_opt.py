"""Morphology objectives and the projected gradient-ascent optimizer."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from morphquad.geometry import (
    AirframeParams,
    GRAVITY,
    MassProperties,
    Morphology,
    PayloadSpec,
    compose_mass_properties,
    rotor_positions,
    x_config,
)
from morphquad.morphology_opt import (
    OptimizationError,
    OptimizerSettings,
    controllability_factor,
    efficiency_factor,
    efficiency_grid,
    morph_objectives,
    objective_gradient,
    optimize_morphology,
    project_out,
    sweep_cog_table,
    thrust_sensitivity_rows,
)
from morphquad.rotor import allocation_matrix


@pytest.fixture
def params():
    return AirframeParams()


def props_with_payload(params, x, y, m_load=1.0):
    pay = PayloadSpec(m_load=m_load, r_load=[x, y, 0.0])
    return compose_mass_properties(x_config(), params, pay)


def hover_split(morph, mass_props, params):
    A = allocation_matrix(rotor_positions(morph, params), mass_props.r_cog, params)
    return np.linalg.solve(A, [mass_props.m * GRAVITY, 0, 0, 0])


# ---------------------------------------------------------------------------
# efficiency factor
# ---------------------------------------------------------------------------

def test_efficiency_symmetric_hover(params):
    mp = compose_mass_properties(x_config(), params)
    eta = efficiency_factor(x_config(), mp, params)
    # equal thrusts of mg/4 each; 2 kg craft
    assert eta == pytest.approx(19.62 / 386.7, abs=2e-5)
    assert eta == pytest.approx(0.0507, abs=1e-4)


def test_efficiency_analytic_maximum(params):
    # at the equal-thrust optimum eta = 1/(gamma * sqrt(mg/4)) exactly
    mp = compose_mass_properties(x_config(), params)
    eta = efficiency_factor(x_config(), mp, params)
    assert eta == pytest.approx(1.0 / (params.gamma_p * np.sqrt(2.0 * GRAVITY / 4.0)), rel=1e-12)


def test_efficiency_drops_with_cog_offset(params):
    centered = compose_mass_properties(x_config(), params)
    offset = MassProperties(m=2.0, r_cog=np.array([0.0, 0.05, 0.0]), J=centered.J)
    eta_c = efficiency_factor(x_config(), centered, params)
    eta_o = efficiency_factor(x_config(), offset, params)
    # oracle: brute-force allocation plus the power map
    f = hover_split(x_config(), offset, params)
    P = (params.gamma_p * f**1.5).sum()
    assert eta_o == pytest.approx(f.sum() / P, rel=1e-12)
    assert eta_o < eta_c


def test_infeasible_morphology_flagged(params):
    # CoG far outside anything reachable makes hover thrusts change sign
    mp = MassProperties(m=3.0, r_cog=np.array([0.18, 0.0, 0.0]),
                        J=compose_mass_properties(x_config(), params).J)
    obj = morph_objectives(x_config(), mp, params)
    assert not obj.feasible
    assert np.isnan(obj.eta)


# ---------------------------------------------------------------------------
# controllability factor
# ---------------------------------------------------------------------------

def test_controllability_symmetric_ties(params):
    mp = compose_mass_properties(x_config(), params)
    rows = thrust_sensitivity_rows(x_config(), mp, params)
    norms = np.linalg.norm(rows, axis=1)
    assert np.ptp(norms) < 1e-12 * norms[0]    # all four attain the max


def test_controllability_finite_difference_oracle(params):
    # oracle: perturb the desired angular acceleration through the moment map
    # M = J @ alpha and the allocation solve, then difference the thrusts
    mp = props_with_payload(params, 0.03, 0.08)
    morph = Morphology(np.deg2rad([60, 30, 40, 55]))
    A = allocation_matrix(rotor_positions(morph, params), mp.r_cog, params)
    rows = thrust_sensitivity_rows(morph, mp, params)

    def thrusts_for_alpha(alpha_xy):
        M = mp.J @ np.array([alpha_xy[0], alpha_xy[1], 0.0])
        return np.linalg.solve(A, [mp.m * GRAVITY, M[0], M[1], M[2]])

    h = 1e-6
    for k in range(2):
        dp = np.zeros(2); dp[k] = h
        fd = (thrusts_for_alpha(dp) - thrusts_for_alpha(-dp)) / (2 * h)
        assert_allclose(rows[:, k], fd, rtol=1e-6, atol=1e-12)

    C = controllability_factor(morph, mp, params)
    assert C == pytest.approx(1.0 / np.linalg.norm(rows, axis=1).max(), rel=1e-12)


def test_controllability_halves_with_arm_scale(params):
    # shrinking every moment arm by 2 doubles the worst sensitivity
    mp = compose_mass_properties(x_config(), params)
    pos = rotor_positions(x_config(), params)
    A_full = allocation_matrix(pos, np.zeros(3), params)
    A_half = allocation_matrix(pos * 0.5, np.zeros(3), params)
    from morphquad.morphology_opt import _controllability
    C_full = _controllability(A_full, mp.J)
    C_half = _controllability(A_half, mp.J)
    assert C_half == pytest.approx(C_full / 2.0, rel=1e-9)


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------

def test_gradient_zero_at_equal_thrust_optimum(params):
    mp = compose_mass_properties(x_config(), params)
    g = objective_gradient("eta", x_config(), mp, params)
    assert np.linalg.norm(g) < 1e-6


def test_gradient_points_toward_offset_cog(params):
    # CoG nudged toward +y: arms 1 and 2 (the +y pair) should open toward it
    mp = props_with_payload(params, 0.0, 0.05)
    g = objective_gradient("eta", x_config(), mp, params)
    # oracle: direct evaluation confirms ascent
    step = 1e-3 * g / np.linalg.norm(g)
    e0 = efficiency_factor(x_config(), mp, params)
    e1 = efficiency_factor(Morphology(x_config().theta + step), mp, params)
    assert e1 > e0
    assert g[0] > 0 and g[1] < 0    # arm 1 opens (+theta), arm 2 closes


def test_gradient_step_second_order(params):
    mp = props_with_payload(params, 0.02, 0.04)
    morph = Morphology(np.deg2rad([50, 40, 45, 45]))
    s1 = OptimizerSettings(grad_step=2e-4)
    s2 = OptimizerSettings(grad_step=1e-4)
    g1 = objective_gradient("eta", morph, mp, params, s1)
    g2 = objective_gradient("eta", morph, mp, params, s2)
    # halving the step changes a central difference by O(step^2)
    assert np.linalg.norm(g1 - g2) < 1e-5 * max(1.0, np.linalg.norm(g2))


def test_gradient_one_sided_at_box_edge(params):
    mp = compose_mass_properties(x_config(), params)
    edge = Morphology(np.array([params.theta_max, *np.deg2rad([45, 45, 45])]))
    g = objective_gradient("eta", edge, mp, params)
    assert np.all(np.isfinite(g))


def test_projection_identity():
    rng = np.random.default_rng(0)
    for _ in range(50):
        u = rng.normal(size=4)
        v = rng.normal(size=4)
        w = project_out(v, u)
        assert abs(np.dot(w, u)) <= 1e-9 * np.linalg.norm(v) * np.linalg.norm(u)
    # parallel gradients: the tie-break term vanishes entirely
    u = rng.normal(size=4)
    assert np.linalg.norm(project_out(3.0 * u, u)) < 1e-12


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

def test_centered_cog_is_fixed_point(params):
    mp = compose_mass_properties(x_config(), params)
    res = optimize_morphology(x_config(), mp, params)
    assert res.converged
    assert_allclose(res.morphology.theta, x_config().theta, atol=1e-4)


def test_offset_payload_matches_thrust_center(params):
    mp = props_with_payload(params, 0.0, 0.15)
    res = optimize_morphology(x_config(), mp, params)
    assert res.converged
    f = hover_split(res.morphology, mp, params)
    mg = mp.m * GRAVITY
    assert (f.max() - f.min()) <= 0.01 * mg
    # thrust center equals the CoG when thrusts are equal
    pos = rotor_positions(res.morphology, params)
    center = (pos * f[:, None]).sum(axis=0) / f.sum()
    assert_allclose(center, mp.r_cog[:2], atol=2e-3)
    # arms have visibly rotated toward the +y payload
    assert pos[:, 1].mean() > 0.02


def test_converged_eta_not_below_x_config(params):
    rng = np.random.default_rng(9)
    for _ in range(5):
        mp = props_with_payload(params, *rng.uniform(-0.08, 0.08, 2))
        eta_x = efficiency_factor(x_config(), mp, params)
        res = optimize_morphology(x_config(), mp, params)
        assert res.eta >= eta_x - 1e-9


def test_thrust_spread_invariant_within_envelope(params):
    for xy in [(0.0, 0.05), (0.05, 0.0), (0.08, 0.08), (0.0, 0.15), (-0.1, 0.04)]:
        mp = props_with_payload(params, *xy)
        res = optimize_morphology(x_config(), mp, params)
        f = hover_split(res.morphology, mp, params)
        assert (f.max() - f.min()) <= 0.01 * mp.m * GRAVITY


def test_tie_break_mirror_symmetry(params):
    # CoG on the +x axis: converged arms mirror across the x axis
    mp = props_with_payload(params, 0.12, 0.0)
    res = optimize_morphology(x_config(), mp, params)
    th = res.morphology.theta
    assert th[0] + th[3] == pytest.approx(np.pi / 2, abs=2e-3)
    assert th[1] + th[2] == pytest.approx(np.pi / 2, abs=2e-3)


def test_diagonal_payload_symmetry(params):
    # payload on the xy diagonal: arms 1 and 3 match, arms 2 and 4 mirror
    off = 0.15 / np.sqrt(2.0)
    mp = props_with_payload(params, off, off)
    res = optimize_morphology(x_config(), mp, params)
    th = res.morphology.theta
    assert th[0] == pytest.approx(th[2], abs=2e-3)
    assert th[1] + th[3] == pytest.approx(np.pi / 2, abs=2e-3)


def test_grid_search_oracle(params):
    mp = props_with_payload(params, 0.0, 0.15)
    res = optimize_morphology(x_config(), mp, params)
    axis = np.deg2rad(np.arange(-15.0, 105.1, 15.0))
    grid = np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"), -1).reshape(-1, 4)
    etas = efficiency_grid(grid, mp, params)
    assert res.eta >= np.nanmax(etas) - 1e-4


def test_optimizer_failure_reported(params):
    mp = MassProperties(m=3.0, r_cog=np.array([0.2, 0.2, 0.0]),
                        J=compose_mass_properties(x_config(), params).J)
    with pytest.raises(OptimizationError):
        optimize_morphology(x_config(), mp, params)


def test_optimizer_deterministic(params):
    mp = props_with_payload(params, 0.02, 0.09)
    r1 = optimize_morphology(x_config(), mp, params)
    r2 = optimize_morphology(x_config(), mp, params)
    assert_allclose(r1.morphology.theta, r2.morphology.theta, atol=0)
    assert r1.iterations == r2.iterations


def test_warm_start_stays_converged(params):
    mp = props_with_payload(params, 0.0, 0.15)
    cold = optimize_morphology(x_config(), mp, params)
    warm = optimize_morphology(cold.morphology, mp, params)
    assert warm.converged
    assert warm.iterations < cold.iterations
    assert_allclose(warm.morphology.theta, cold.morphology.theta, atol=5e-3)
    assert warm.eta >= cold.eta - 1e-9


def test_sweep_table(params):
    pts = [(0.0, 0.0), (0.0, 0.05), (0.3, 0.3)]
    rows = sweep_cog_table(pts, 3.0, params)
    assert len(rows) == 3
    assert rows[0]["converged"] and rows[1]["converged"]
    assert not rows[2]["converged"]            # unreachable CoG recorded, not raised
    assert np.isnan(rows[2]["eta"])
