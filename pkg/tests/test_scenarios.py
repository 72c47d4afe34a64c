"""Built-in coefficient families and their analytic moment oracles."""
import numpy as np
import pytest

import mvlab as M

from conftest import rng_for

# closed forms at theta=1, kappa=0.5, sigma=0.4, m0=1, v0=0.25, t=1
OU_MEAN_1 = float(np.exp(-0.5))
OU_VAR_1 = 0.25 * float(np.exp(-2.0)) + 0.08 * (1.0 - float(np.exp(-2.0)))


def test_ou_oracle_frozen_values(ou):
    assert abs(OU_MEAN_1 - 0.6065306597126334) < 1e-15
    assert abs(OU_VAR_1 - 0.10300699815022416) < 1e-15
    assert abs(ou.oracle.mean(1.0)[0] - OU_MEAN_1) <= 1e-15
    assert abs(ou.oracle.cov(1.0)[0, 0] - OU_VAR_1) <= 1e-15
    m, v = ou.oracle(1.0)
    assert m.shape == (1,) and v.shape == (1, 1)


def test_ou_parameter_validation():
    with pytest.raises(ValueError):
        M.mean_field_ou(-1.0, 0.0, 0.4, 0.0, 1.0)
    with pytest.raises(ValueError):
        M.mean_field_ou(1.0, 0.0, -0.4, 0.0, 1.0)
    with pytest.raises(ValueError):
        M.mean_field_ou(1.0, 0.0, 0.4, 0.0, -1.0)


def test_ou_kappa_equals_theta_constant_mean():
    scen = M.mean_field_ou(0.7, 0.7, 0.2, 1.3, 0.1)
    for t in (0.0, 0.4, 1.0, 2.5):
        assert abs(scen.oracle.mean(t)[0] - 1.3) <= 1e-12


def test_ou_zero_sigma_pure_contraction():
    scen = M.mean_field_ou(0.9, 0.3, 0.0, 0.5, 0.36)
    for t in (0.0, 0.5, 1.0):
        assert abs(scen.oracle.cov(t)[0, 0] - 0.36 * np.exp(-1.8 * t)) <= 1e-12


def test_ou_theta_zero_limit_form():
    scen = M.mean_field_ou(0.0, 0.0, 0.5, 0.0, 0.04)
    assert abs(scen.oracle.cov(2.0)[0, 0] - (0.04 + 0.25 * 2.0)) <= 1e-12


def test_ou_certificate():
    scen = M.mean_field_ou(1.0, 0.5, 0.4, 1.0, 0.25)
    assert scen.certificate == 1.5
    assert scen.coefficients.lipschitz == 1.5


def test_lipschitz_certificate_holds_sampled(ou):
    rng = rng_for("lip-sample")
    L = ou.coefficients.lipschitz
    mu = M.EmpiricalMeasure.from_points(rng.normal(size=4))
    for _ in range(200):
        x, y = rng.normal(size=(2, 1, 1)) * 3.0
        gap = abs(ou.coefficients.drift(0.3, x, mu)[0, 0]
                  - ou.coefficients.drift(0.3, y, mu)[0, 0])
        assert gap <= 1.01 * L * abs(x[0, 0] - y[0, 0]) + 1e-12


def test_zero_diffusion_flow_linear_case():
    # b(x) = -x: the flow is plain exponential decay
    scen = M.zero_diffusion_transport(1.0, 0.0, 0.0, 1.0)
    for x0 in (-2.0, 0.0, 1.5):
        for t in (0.0, 0.3, 1.0):
            assert abs(scen.flow(t, x0) - x0 * np.exp(-t)) <= 1e-12


def test_zero_diffusion_symmetric_mean_frozen():
    # b = -x + mean(mu) with mean 0 initially: mean ODE is frozen at 0
    scen = M.zero_diffusion_transport(1.0, 1.0, 0.0, 1.0)
    for t in (0.2, 0.9, 2.0):
        assert abs(scen.oracle.mean(t)[0]) <= 1e-12
        # pairwise contraction of characteristics
        gap = scen.flow(t, 1.0) - scen.flow(t, -1.0)
        assert abs(gap - 2.0 * np.exp(-t)) <= 1e-12


def test_zero_diffusion_simulation_matches_flow():
    scen = M.zero_diffusion_transport(0.6, 0.4, 0.8, 0.09)
    grid = M.TimeGrid.uniform(1.0, 4000)
    cfg = M.SimConfig(30, grid, seed=17)
    lam = M.simulate_mckv(scen.coefficients, scen.initial, cfg)
    x0 = lam.states[:, 0, 0]
    # empirical mean drifts from the oracle mean by O(1/sqrt(N)); recenter
    # the drive on the realized initial mean so only the Euler error remains
    want = scen.flow(1.0, x0) + (x0.mean() - 0.8) * (
        np.exp((0.4 - 0.6) * 1.0) - np.exp(-0.6 * 1.0))
    got = lam.states[:, -1, 0]
    assert np.max(np.abs(got - want)) <= 5e-4


def test_nonsmooth_probe_has_no_certificate():
    scen = M.nonsmooth_probe()
    assert scen.certificate is None
    assert scen.coefficients.lipschitz is None
    assert scen.oracle is None


def test_nonsmooth_origin_is_scheme_fixed_point():
    scen = M.nonsmooth_probe()
    grid = M.TimeGrid.uniform(1.0, 50)
    lam = M.simulate_mckv(scen.coefficients, scen.initial,
                          M.SimConfig(1, grid, seed=2))
    assert np.all(lam.states == 0.0)


def test_nonsmooth_perturbed_start_escapes():
    # delta_eps grows along sqrt drift; documented behavior, no oracle
    scen = M.nonsmooth_probe()
    init = M.InitialLawSampler.fixed(M.EmpiricalMeasure.from_points([1e-6]))
    grid = M.TimeGrid.uniform(1.0, 200)
    lam = M.simulate_mckv(scen.coefficients, init, M.SimConfig(1, grid, seed=2))
    assert lam.states[0, -1, 0] > 0.2  # continuum envelope (t/2 + eps^(1/2))^2


def test_gaussian_quantile_measure_moments():
    mu = M.gaussian_quantile_measure(0.7, 0.36, 400)
    assert abs(mu.mean()[0] - 0.7) <= 1e-9
    var = float(np.sum(mu.weights * (mu.points[:, 0] - 0.7) ** 2))
    assert abs(var - 0.36) <= 0.36 * 5e-3  # midpoint rule clips the tails
    with pytest.raises(ValueError):
        M.gaussian_quantile_measure(0.0, 1.0, 0)


def test_gaussian_family_deterministic():
    fam1 = M.gaussian_family(4, seed=5)
    fam2 = M.gaussian_family(4, seed=5)
    for a, b in zip(fam1, fam2):
        assert np.array_equal(a.mean, b.mean)
        assert np.array_equal(a.cov, b.cov)
    assert len(M.gaussian_family(7, seed=1)) == 7


def test_oracle_curve_quantile_mode(ou):
    grid = M.TimeGrid.uniform(1.0, 10)
    curve = M.oracle_curve(ou.oracle, grid, 300)
    for t in (0.0, 0.5, 1.0):
        mu = curve.at(t)
        assert abs(mu.mean()[0] - ou.oracle.mean(t)[0]) <= 1e-9


def test_oracle_curve_sampled_mode_deterministic(ou):
    grid = M.TimeGrid.uniform(1.0, 5)
    c1 = M.oracle_curve(ou.oracle, grid, 50, seed=9)
    c2 = M.oracle_curve(ou.oracle, grid, 50, seed=9)
    for a, b in zip(c1.measures, c2.measures):
        assert np.array_equal(a.points, b.points)


def test_scenario_registry():
    assert set(M.SCENARIOS) == {"mean_field_ou", "zero_diffusion_transport",
                                "nonsmooth_probe"}
