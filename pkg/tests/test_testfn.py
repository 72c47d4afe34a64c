"""Test-function dictionaries, time test functions, and the generators."""
import numpy as np
import pytest

import mvlab as M

from conftest import rng_for


class LinearPhi:
    """phi(x) = x in d=1; enough surface for apply_L."""

    d = 1

    def eval(self, x):
        return np.asarray(x)[..., 0]

    def grad(self, x):
        return np.ones_like(np.asarray(x))

    def hess(self, x):
        x = np.asarray(x)
        return np.zeros(x.shape[:-1] + (1, 1))


class CurvedPhi:
    """phi(x) = x^2 in d=1: hess is identically 2."""

    d = 1

    def eval(self, x):
        return np.asarray(x)[..., 0] ** 2

    def grad(self, x):
        return 2.0 * np.asarray(x)

    def hess(self, x):
        x = np.asarray(x)
        return np.full(x.shape[:-1] + (1, 1), 2.0)


def const_coeffs(bval, sval, d=1):
    return M.Coefficients(
        b=lambda t, X, mu: np.full_like(X, bval),
        sigma=lambda t, X, mu: sval * np.eye(d),
        d=d, m=d, lipschitz=0.0, label="const")


# ---------------------------------------------------------------------------
# dictionaries


def test_dictionary_deterministic_in_seed(dict1):
    again = M.build_dictionary(1, False, 1, 16, seed=31)
    for e, f in zip(dict1, again):
        assert np.array_equal(e.center, f.center)
        assert np.array_equal(e.shape, f.shape)
        assert e.amplitude == f.amplitude
        assert e.certificates == f.certificates
    other = M.build_dictionary(1, False, 1, 16, seed=99)
    assert not np.array_equal(dict1[0].center, other[0].center)


def test_dictionary_validation_errors():
    with pytest.raises(ValueError):
        M.build_dictionary(1, False, 1, 0, seed=1)
    with pytest.raises(ValueError):
        M.build_dictionary(3, False, 1, 4, seed=1)
    with pytest.raises(ValueError):
        M.build_dictionary(1, True, 1, 4, seed=1)  # weighted needs ell=2


def test_governing_certificates_normalized(dict1, dict2w):
    for d in (dict1, dict2w):
        for e in d:
            assert e.certificates[d.norm_kind] <= 1.0 + 1e-12
    assert dict1.norm_kind == "C1"
    assert dict2w.norm_kind == "C2w"


def test_certificate_ordering(dict1, dict2w):
    # C1 takes a max over fewer terms than C2; C2w adds weights >= 1
    for d in (dict1, dict2w):
        for e in d:
            c = e.certificates
            assert c["C1"] <= c["C2"] + 1e-15
            assert c["C2"] <= c["C2w"] + 1e-15


def test_certificates_hold_on_fresh_probes(dict1, dict2w):
    rng = rng_for("cert-probes")
    for d in (dict1, dict2w):
        for e in d:
            x = rng.uniform(-e.support_radius, e.support_radius,
                            size=(10_000, 1))
            vals = np.abs(e.eval(x))
            grads = np.linalg.norm(e.grad(x), axis=-1)
            hesss = np.linalg.norm(e.hess(x), axis=(-2, -1))
            r = np.linalg.norm(x, axis=-1)
            assert vals.max() <= e.certificates["C1"]
            assert grads.max() <= e.certificates["C1"]
            assert max(vals.max(), grads.max(), hesss.max()) <= e.certificates["C2"]
            weighted = vals.max() + ((1 + r) * grads).max() + ((1 + r**2) * hesss).max()
            assert weighted <= e.certificates["C2w"]


def test_gradient_matches_finite_differences(dict1):
    rng = rng_for("fd-grad")
    h = 1e-5
    for e in dict1:
        x = rng.uniform(-e.support_radius, e.support_radius, size=(100, 1))
        fd = (e.eval(x + h) - e.eval(x - h)) / (2 * h)
        an = e.grad(x)[:, 0]
        assert np.max(np.abs(fd - an)) <= 1e-6 * max(1.0, np.max(np.abs(an)))


def test_hessian_matches_finite_differences(dict1):
    rng = rng_for("fd-hess")
    h = 1e-5
    for e in dict1:
        x = rng.uniform(-e.support_radius, e.support_radius, size=(100, 1))
        fd = (e.grad(x + h) - e.grad(x - h))[:, 0] / (2 * h)
        an = e.hess(x)[:, 0, 0]
        assert np.max(np.abs(fd - an)) <= 1e-6 * max(1.0, np.max(np.abs(an)))


def test_hessian_symmetric_in_2d():
    dct = M.build_dictionary(2, False, 2, 6, seed=11)
    rng = rng_for("hess-sym")
    for e in dct:
        x = rng.uniform(-e.support_radius, e.support_radius, size=(100, 2))
        H = e.hess(x)
        assert np.max(np.abs(H - np.swapaxes(H, -1, -2))) <= 1e-10


def test_compact_support(dict1):
    rng = rng_for("support")
    for e in dict1:
        x = np.sign(rng.normal(size=(50, 1))) * \
            rng.uniform(e.support_radius, 3 * e.support_radius, size=(50, 1))
        assert np.all(e.eval(x) == 0.0)
        assert np.all(e.grad(x) == 0.0)
        assert np.all(e.hess(x) == 0.0)


def test_admissible_subsets(dict1, dict2w):
    assert dict1.admissible("C1") == list(range(len(dict1)))
    assert dict2w.admissible("C2w") == list(range(len(dict2w)))
    # looser norms admit at least the governing set
    assert set(dict2w.admissible("C2w")) <= set(dict2w.admissible("C2"))
    assert set(dict2w.admissible("C2")) <= set(dict2w.admissible("C1"))


def test_dictionary_roundtrip(dict2w):
    back = M.Dictionary.from_doc(dict2w.to_doc())
    assert back.dict_id == dict2w.dict_id
    x = np.linspace(-3, 3, 17)[:, None]
    for e, f in zip(dict2w, back):
        assert np.array_equal(e.eval(x), f.eval(x))
        assert np.array_equal(e.hess(x), f.hess(x))


# ---------------------------------------------------------------------------
# time test functions


def test_time_test_functions_vanish_at_endpoints():
    xis = M.time_test_functions(1.0, 6, seed=7)
    assert len(xis) == 6
    for xi in xis:
        assert xi.eval(0.0) == 0.0
        assert xi.eval(1.0) == 0.0


def test_time_test_function_deriv_matches_fd():
    xis = M.time_test_functions(2.0, 4, seed=7)
    t = np.linspace(0.05, 1.95, 101)
    h = 1e-6
    for xi in xis:
        fd = (xi.eval(t + h) - xi.eval(t - h)) / (2 * h)
        an = xi.deriv(t)
        assert np.max(np.abs(fd - an)) <= 1e-6 * max(1.0, np.max(np.abs(an)))


def test_time_test_functions_normalized():
    fine = np.linspace(0.0, 1.0, 2001)
    for xi in M.time_test_functions(1.0, 5, seed=3):
        m = max(np.abs(xi.eval(fine)).max(), np.abs(xi.deriv(fine)).max())
        assert abs(m - 1.0) <= 1e-12


def test_time_deriv_trapezoid_sums_cancel():
    # int_0^T xi' dt = 0, and the discrete node sum inherits the cancellation
    # because xi' is antisymmetric about T/2 on a uniform grid
    grid = M.TimeGrid.uniform(1.0, 250)
    w = np.full(grid.n_nodes, grid.nodes[1])
    w[0] *= 0.5
    w[-1] *= 0.5
    for xi in M.time_test_functions(1.0, 5, seed=3):
        assert abs(w @ xi.deriv(grid.nodes)) <= 1e-14


# ---------------------------------------------------------------------------
# generators


def test_apply_L_zero_coefficients(dict1):
    coeffs = const_coeffs(0.0, 0.0)
    mu = M.EmpiricalMeasure.from_points([0.3])
    for e in dict1:
        assert M.apply_L(e, coeffs, 0.0, np.array([0.4]), mu) == 0.0


def test_apply_L_pure_drift_on_linear():
    coeffs = const_coeffs(1.0, 0.0)
    mu = M.EmpiricalMeasure.from_points([0.0])
    got = M.apply_L(LinearPhi(), coeffs, 0.0, np.array([0.2]), mu)
    assert got == 1.0


def test_apply_L_pure_diffusion_second_derivative():
    # a = 2, phi'' = 2 everywhere, so L phi = 0.5 * 2 * 2
    coeffs = const_coeffs(0.0, np.sqrt(2.0))
    mu = M.EmpiricalMeasure.from_points([0.0])
    got = M.apply_L(CurvedPhi(), coeffs, 0.0, np.array([1.7]), mu)
    assert abs(got - 2.0) < 1e-15


def test_apply_L_batched_matches_pointwise(dict1):
    coeffs = const_coeffs(0.5, 0.3)
    mu = M.EmpiricalMeasure.from_points([0.1, -0.4])
    rng = rng_for("apply-L-batch")
    X = rng.normal(size=(20, 1))
    batch = M.apply_L(dict1[0], coeffs, 0.1, X, mu)
    single = np.array([M.apply_L(dict1[0], coeffs, 0.1, x, mu) for x in X])
    assert np.array_equal(batch, single)


def test_apply_K_identity_outer_equals_apply_L(dict1):
    coeffs = const_coeffs(0.7, 0.4)
    mu = M.EmpiricalMeasure.from_points([0.1, 0.5, -0.2])
    F = M.CylinderFunction((dict1[2],), M.identity_outer(), label="idF")
    rng = rng_for("K-identity")
    for x in rng.normal(size=(25, 1)):
        assert M.apply_K(F, coeffs, 0.0, x, mu) == \
            M.apply_L(dict1[2], coeffs, 0.0, x, mu)


def test_apply_K_constant_outer_is_zero(dict1):
    coeffs = const_coeffs(0.7, 0.4)
    mu = M.EmpiricalMeasure.from_points([0.1, 0.5])
    F = M.CylinderFunction((dict1[0],), M.constant_outer(3.0))
    assert M.apply_K(F, coeffs, 0.0, np.array([0.3]), mu) == 0.0


def test_apply_K_product_outer_hand_expansion(dict1):
    # Psi(y1,y2) = y1 y2: K F = (int phi2 dmu) L phi1 + (int phi1 dmu) L phi2
    coeffs = const_coeffs(0.4, 0.8)
    mu = M.EmpiricalMeasure.from_points([0.05, 0.6, -0.3])
    phi1, phi2 = dict1[1], dict1[4]
    F = M.product_cylinder(
        M.CylinderFunction((phi1,), M.identity_outer()),
        M.CylinderFunction((phi2,), M.identity_outer()))
    x = np.array([0.25])
    want = (M.integrate(mu, phi2) * M.apply_L(phi1, coeffs, 0.0, x, mu)
            + M.integrate(mu, phi1) * M.apply_L(phi2, coeffs, 0.0, x, mu))
    got = M.apply_K(F, coeffs, 0.0, x, mu)
    assert abs(got - want) <= 1e-14 * max(1.0, abs(want))


def test_leibniz_constant_factor_exact(dict1):
    coeffs = const_coeffs(0.4, 0.8)
    mu = M.EmpiricalMeasure.from_points([0.05, 0.6])
    F = M.CylinderFunction((dict1[0],), M.identity_outer())
    G = M.CylinderFunction((dict1[3],), M.constant_outer(1.0))
    assert M.leibniz_gap(F, G, coeffs, 0.0, np.array([0.2]), mu) == 0.0


def test_leibniz_square_of_identity_exact(dict1):
    coeffs = const_coeffs(0.4, 0.8)
    mu = M.EmpiricalMeasure.from_points([0.05, 0.6])
    F = M.CylinderFunction((dict1[5],), M.identity_outer())
    assert M.leibniz_gap(F, F, coeffs, 0.0, np.array([0.2]), mu) == 0.0


def test_leibniz_thousand_random_tuples(dict1, ou):
    outers = M.build_outer_family(12, seed=21)
    rng = rng_for("leibniz-tuples")
    worst = 0.0
    for _ in range(1000):
        fo = outers[int(rng.integers(len(outers)))]
        go = outers[int(rng.integers(len(outers)))]
        F = M.CylinderFunction(
            tuple(dict1[int(j)] for j in rng.integers(len(dict1), size=fo.k)), fo)
        G = M.CylinderFunction(
            tuple(dict1[int(j)] for j in rng.integers(len(dict1), size=go.k)), go)
        t = float(rng.uniform(0.0, 1.0))
        x = rng.normal(size=1)
        mu = M.EmpiricalMeasure.from_points(rng.normal(size=int(rng.integers(1, 6))))
        gap = M.leibniz_gap(F, G, ou.coefficients, t, x, mu)
        denom = (1.0
                 + abs(F.value(mu) * M.apply_K(G, ou.coefficients, t, x, mu))
                 + abs(G.value(mu) * M.apply_K(F, ou.coefficients, t, x, mu)))
        worst = max(worst, gap / denom)
    assert worst <= 1e-10


# ---------------------------------------------------------------------------
# outer functions and coefficients


def test_outer_family_admissibility():
    outers = M.build_outer_family(9, seed=21, k_max=3)
    assert [o.k for o in outers] == [1, 2, 3, 1, 2, 3, 1, 2, 3]
    assert all(o.admissible(1) for o in outers)
    assert any(o.admissible(2) for o in outers)
    assert not M.identity_outer().admissible(1)  # uncertified


def test_outer_grad_matches_fd():
    rng = rng_for("outer-fd")
    h = 1e-5
    for o in M.build_outer_family(6, seed=21):
        y = rng.uniform(-1.5, 1.5, size=(50, o.k))
        an = o.grad(y)
        for j in range(o.k):
            e = np.zeros(o.k)
            e[j] = h
            fd = (o.eval(y + e) - o.eval(y - e)) / (2 * h)
            assert np.max(np.abs(fd - an[:, j])) <= 1e-6 * max(1.0, np.abs(an).max())


def test_cylinder_arity_mismatch(dict1):
    with pytest.raises(ValueError, match="arity"):
        M.CylinderFunction((dict1[0], dict1[1]), M.identity_outer())


def test_coefficients_psd_and_finiteness():
    coeffs = M.Coefficients(
        b=lambda t, X, mu: -X,
        sigma=lambda t, X, mu: np.array([[1.0, 0.5], [0.0, 0.3]]),
        d=2, m=2)
    mu = M.EmpiricalMeasure.from_points([[0.0, 0.0]])
    a = coeffs.a(0.0, np.zeros(2), mu)
    assert np.array_equal(a, a.T)
    assert np.all(np.linalg.eigvalsh(a) >= -1e-15)
    bad = M.Coefficients(b=lambda t, X, mu: np.full_like(X, np.inf),
                         sigma=lambda t, X, mu: np.eye(1), d=1, m=1)
    with pytest.raises(ValueError, match="non-finite"):
        bad.drift(0.0, np.ones(1), mu)
    wrong = M.Coefficients(b=lambda t, X, mu: X,
                           sigma=lambda t, X, mu: np.eye(3), d=1, m=1)
    with pytest.raises(ValueError, match="diffusion"):
        wrong.a(0.0, np.ones(1), mu)
