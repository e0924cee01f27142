import numpy as np
import pytest

from sqswap.fock import ProtocolConfig, build_basis, prepare_initial, evolve_squeezing
from sqswap.protocol import (
    DegenerateWorkingPoint,
    InvalidSplit,
    average_gain,
    bandwidth,
    fringe_kernel,
    midfringe_sensitivity,
    prepare_input_state,
    run_mepe,
    run_separable,
    sensitivity_linear_combination,
    spin_squeezing_xi2,
)


@pytest.fixture(scope="module")
def basis60():
    return build_basis(60)


@pytest.fixture(scope="module")
def basis100():
    return build_basis(100)


def test_sql_baseline(basis100):
    cfg = ProtocolConfig(N=100, tau_E=0.0)
    _, _, rep = run_mepe(cfg, basis100)
    assert rep.var_diff == pytest.approx(0.04, abs=1e-12)
    assert rep.gain == pytest.approx(1.0, abs=1e-10)


def test_single_squeezed_no_swap_gain_capped(basis100):
    # best single-interferometer squeezing buys at most about a factor 2
    best = 0.0
    for ratio in np.linspace(0.2, 1.2, 6):
        tau = ratio * 1.2 * 50 ** (-2 / 3)
        cfg = ProtocolConfig(N=100, tau_S_A=tau, tau_S_B=0.0)
        best = max(best, run_separable(cfg).gain)
    assert 1.0 < best < 2.0


def test_gamma_ab_zero_without_swap(basis60):
    from sqswap.fock import moments

    for tau, nu, gen in ((0.0, 0.0, "oat"), (0.01, 0.9, "oat"), (0.002, 2.0, "tat")):
        cfg = ProtocolConfig(N=60, tau_E=tau, nu_E=nu, theta_MS=0.0, generator=gen)
        _, state_out, rep = run_mepe(cfg, basis60)
        assert abs(rep.cov_AB) < 1e-12
        table = moments(state_out, [basis60.operator("ab", "z"), basis60.operator("cd", "z")])
        assert abs(table.cov("z_ab", "z_cd")) < 1e-12


def test_swap_builds_positive_covariance_and_reduces_var(basis60):
    cfg = ProtocolConfig(N=60, tau_E=0.01, nu_E=11 * np.pi / 4,
                         theta_MS=np.pi / 2, phi_MS=-np.pi / 8)
    _, _, rep = run_mepe(cfg, basis60)
    # estimator-level correlation (B's fringe slope is positive: mean spin -z)
    assert rep.cov_AB / (rep.slope_A * rep.slope_B) > 0
    assert rep.var_diff < rep.var_theta_A + rep.var_theta_B
    assert rep.gain * rep.var_diff == pytest.approx(rep.sql, rel=1e-12)


def test_separable_matches_mepe_without_swap(basis60):
    tau, nu = 0.01, 0.8
    _, _, rep_m = run_mepe(ProtocolConfig(N=60, tau_E=tau, nu_E=nu, theta_MS=0.0), basis60)
    rep_s = run_separable(ProtocolConfig(N=60, tau_S_A=tau, nu_S_A=nu, tau_S_B=0.0))
    assert rep_s.var_diff == pytest.approx(rep_m.var_diff, abs=1e-9)


def test_separable_coherent_uncertainties():
    rep = run_separable(ProtocolConfig(N=100))
    assert rep.var_theta_A == pytest.approx(0.02, abs=1e-9)
    assert rep.var_theta_B == pytest.approx(0.02, abs=1e-9)
    assert rep.var_diff == pytest.approx(0.04, abs=1e-9)


def test_separable_two_squeezed_beats_sql():
    tau = 1.2 * 50 ** (-2 / 3)
    rep = run_separable(ProtocolConfig(N=100, tau_S_A=tau, tau_S_B=tau))
    assert rep.var_diff < 0.04


def test_separable_rejects_odd_n():
    with pytest.raises(InvalidSplit):
        run_separable(ProtocolConfig(N=51, tau_S_A=0.01))


def test_linear_combination_reductions(basis60):
    cfg = ProtocolConfig(N=60, tau_E=0.008, nu_E=1.3, theta_MS=np.pi / 2, phi_MS=0.4)
    state_inp, _, rep = run_mepe(cfg, basis60)
    v11 = sensitivity_linear_combination(state_inp, np.pi / 2, np.pi / 2, 1.0, -1.0)
    assert v11 == pytest.approx(rep.var_diff, rel=1e-10)
    v10 = sensitivity_linear_combination(state_inp, np.pi / 2, np.pi / 2, 1.0, 0.0)
    assert v10 == pytest.approx(rep.var_theta_A, rel=1e-10)


def test_linear_combination_sum_coherent(basis100):
    state_inp = prepare_input_state(ProtocolConfig(N=100), basis100)
    v = sensitivity_linear_combination(state_inp, np.pi / 2, np.pi / 2, 1.0, 1.0)
    assert v == pytest.approx(0.04, abs=1e-10)


def test_midfringe_identity(basis60):
    for cfg in (
        ProtocolConfig(N=60),
        ProtocolConfig(N=60, tau_E=0.012, nu_E=2.2, theta_MS=np.pi / 2, phi_MS=0.7),
        ProtocolConfig(N=60, tau_E=0.005, nu_E=0.4, theta_MS=1.1, phi_MS=-0.9),
    ):
        state = prepare_input_state(cfg, basis60)
        lhs = midfringe_sensitivity(state)
        rhs = sensitivity_linear_combination(state, np.pi / 2, np.pi / 2, 1.0, -1.0)
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_midfringe_coherent_sql(basis100):
    state = prepare_input_state(ProtocolConfig(N=100), basis100)
    assert midfringe_sensitivity(state) == pytest.approx(0.04, abs=1e-10)


def test_no_ms_midfringe_matches_analytic_limit(basis100):
    # small squeezing, no swap: 2 e^{-2r}/N + 2/N within 10%
    tau = 0.1 * 1.2 * 50 ** (-2 / 3)
    cfg = ProtocolConfig(N=100, tau_E=tau, nu_E=0.0, theta_MS=0.0)
    state = prepare_input_state(cfg, basis100)
    r = 100 * tau / 4
    # orientation that aligns the squeezed quadrature with the fringe
    best = min(
        midfringe_sensitivity(prepare_input_state(
            ProtocolConfig(N=100, tau_E=tau, nu_E=nu, theta_MS=0.0), basis100))
        for nu in np.linspace(0, 4 * np.pi, 64, endpoint=False)
    )
    analytic = 2 * np.exp(-2 * r) / 100 + 2 / 100
    assert best == pytest.approx(analytic, rel=0.1)


def test_kernel_matches_direct_output_moments(basis60):
    cfg = ProtocolConfig(N=60, tau_E=0.01, nu_E=0.9, theta_MS=np.pi / 2,
                         phi_MS=-0.3, theta_A=1.2, theta_B=1.9)
    state_inp, _, rep = run_mepe(cfg, basis60)
    k = fringe_kernel(state_inp)
    assert k.var_diff(1.2, 1.9) == pytest.approx(rep.var_diff, rel=1e-10)


def test_general_formula_equals_midfringe_form(basis60):
    cfg = ProtocolConfig(N=60, tau_E=0.01, nu_E=2.0, theta_MS=np.pi / 2, phi_MS=0.2)
    state = prepare_input_state(cfg, basis60)
    assert fringe_kernel(state).var_diff(np.pi / 2, np.pi / 2) == pytest.approx(
        midfringe_sensitivity(state), abs=1e-9
    )


def test_degenerate_working_point(basis60):
    state = prepare_input_state(ProtocolConfig(N=60), basis60)
    with pytest.raises(DegenerateWorkingPoint):
        sensitivity_linear_combination(state, 1e-15, np.pi / 2, 1.0, -1.0)


def test_bandwidth_zero_without_squeezing(basis100):
    assert bandwidth(ProtocolConfig(N=100), grid_resolution=40, basis=basis100) == 0.0


def test_bandwidth_positive_at_strong_squeezing(basis100):
    tau = 0.95 * 1.2 * 50 ** (-2 / 3)
    cfg = ProtocolConfig(N=100, tau_E=tau, nu_E=12.2578, theta_MS=np.pi / 2, phi_MS=np.pi / 2)
    r = bandwidth(cfg, grid_resolution=48, basis=basis100)
    assert 0.0 < r <= 1.0


def test_bandwidth_grid_refinement_stable(basis100):
    tau = 0.5 * 1.2 * 50 ** (-2 / 3)
    cfg = ProtocolConfig(N=100, tau_E=tau, nu_E=12.1, theta_MS=np.pi / 2, phi_MS=np.pi / 2)
    k = fringe_kernel(prepare_input_state(cfg, basis100))
    r1 = bandwidth(cfg, grid_resolution=48, kernel=k)
    r2 = bandwidth(cfg, grid_resolution=96, kernel=k)
    assert abs(r1 - r2) < 4.0 / 48


def test_bandwidth_rejects_coarse_grid(basis60):
    with pytest.raises(ValueError):
        bandwidth(ProtocolConfig(N=60), grid_resolution=16, basis=basis60)


def test_average_gain_small_window_is_midfringe(basis60):
    cfg = ProtocolConfig(N=60, tau_E=0.01, nu_E=11.9, theta_MS=np.pi / 2, phi_MS=np.pi / 2)
    k = fringe_kernel(prepare_input_state(cfg, basis60))
    avg = average_gain(cfg, 1e-4, kernel=k)
    assert avg == pytest.approx(k.gain(np.pi / 2, np.pi / 2), rel=1e-6)


def test_average_gain_coherent_below_one(basis60):
    cfg = ProtocolConfig(N=60)
    k = fringe_kernel(prepare_input_state(cfg, basis60))
    for lam in (0.05, 0.3, 1.0, np.pi / 2):
        assert average_gain(cfg, lam, kernel=k) <= 1.0 + 1e-12


def test_average_gain_decreasing_in_lambda(basis100):
    tau = 0.25 * 1.2 * 50 ** (-2 / 3)
    cfg = ProtocolConfig(N=100, tau_E=tau, nu_E=11.72, theta_MS=np.pi / 2, phi_MS=np.pi / 2)
    k = fringe_kernel(prepare_input_state(cfg, basis100))
    vals = [average_gain(cfg, lam, kernel=k) for lam in (0.05, 0.2, 0.5, 1.0)]
    assert all(a >= b - 1e-9 for a, b in zip(vals, vals[1:]))
    assert vals[0] > 1.0


def test_spin_squeezing_xi2_coherent_is_one(basis100):
    psi = prepare_initial(basis100)
    assert spin_squeezing_xi2(psi, "ab") == pytest.approx(1.0, abs=1e-9)


def test_spin_squeezing_xi2_drops_under_twisting(basis100):
    psi = prepare_initial(basis100)
    st = evolve_squeezing(psi, "oat", 0.005, 0.0)
    assert spin_squeezing_xi2(st, "ab") < 1.0
