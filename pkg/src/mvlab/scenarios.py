"""Built-in coefficient families with analytic moment oracles.

Every oracle is validated at build time: a fine-step RK4 integration of the
defining moment ODEs must match the closed forms to 1e-8, and Lipschitz
certificates are checked by sampled finite differences. A scenario that
constructs without raising therefore carries trustworthy targets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .dynamics import InitialLawSampler
from .measures import EmpiricalMeasure, MeasurePath, TimeGrid, uniform_weights
from .seeds import stream
from .testfn import Coefficients

__all__ = [
    "MomentOracle",
    "ScenarioSpec",
    "mean_field_ou",
    "zero_diffusion_transport",
    "nonsmooth_probe",
    "gaussian_family",
    "gaussian_quantile_measure",
    "oracle_curve",
    "SCENARIOS",
]

_ORACLE_TOL = 1e-8
_LIP_SLACK = 1.01
_LIP_SAMPLES = 10_000


@dataclass(frozen=True, eq=False)
class MomentOracle:
    """Closed-form mean and covariance as functions of time."""

    mean_fn: object
    cov_fn: object

    def mean(self, t: float) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.mean_fn(t), dtype=float))

    def cov(self, t: float) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.cov_fn(t), dtype=float))

    def __call__(self, t: float):
        return self.mean(t), self.cov(t)


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    name: str
    params: dict
    coefficients: Coefficients
    initial: InitialLawSampler
    oracle: MomentOracle | None = None
    flow: object | None = None  # (t, x0) -> x_t, zero-diffusion scenarios only

    @property
    def certificate(self) -> float | None:
        return self.coefficients.lipschitz


def _rk4(f, y0: np.ndarray, t0: float, t1: float, n_steps: int) -> np.ndarray:
    y = np.asarray(y0, dtype=float)
    h = (t1 - t0) / n_steps
    t = t0
    for _ in range(n_steps):
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return y


def _check_moment_oracle(oracle: MomentOracle, theta: float, kappa: float,
                         sigma: float, horizon: float = 1.0):
    """Integrate dm = (kappa-theta) m, dv = -2 theta v + sigma^2 and compare."""
    def rhs(t, y):
        return np.array([(kappa - theta) * y[0], -2.0 * theta * y[1] + sigma ** 2])

    y0 = np.array([oracle.mean(0.0)[0], oracle.cov(0.0)[0, 0]])
    worst = 0.0
    for t in np.linspace(0.0, horizon, 9)[1:]:
        y = _rk4(rhs, y0, 0.0, float(t), 2000)
        worst = max(worst,
                    abs(y[0] - oracle.mean(float(t))[0]),
                    abs(y[1] - oracle.cov(float(t))[0, 0]))
    if worst > _ORACLE_TOL:
        raise RuntimeError(f"moment oracle fails its ODE check: residual {worst:.3e}")


def _check_lipschitz(coeffs: Coefficients, seed: int = 20260815):
    """Sampled finite-difference check of |b(t,x,mu)-b(t,y,mu)| <= 1.01 L |x-y|."""
    lip = coeffs.lipschitz
    if lip is None:
        return
    rng = stream(seed, "lip-check", coeffs.label)
    d = coeffs.d
    n_mu = 16
    per = _LIP_SAMPLES // n_mu
    for _ in range(n_mu):
        mu = EmpiricalMeasure(rng.uniform(-3.0, 3.0, size=(32, d)), uniform_weights(32))
        t = float(rng.uniform(0.0, 1.0))
        x = rng.uniform(-5.0, 5.0, size=(per, d))
        y = x + rng.uniform(-2.0, 2.0, size=(per, d))
        gap = np.linalg.norm(coeffs.drift(t, x, mu) - coeffs.drift(t, y, mu), axis=-1)
        bound = _LIP_SLACK * lip * np.linalg.norm(x - y, axis=-1)
        if np.any(gap > bound + 1e-12):
            i = int(np.argmax(gap - bound))
            raise RuntimeError(
                f"Lipschitz certificate {lip:g} violated: gap {gap[i]:.6g} > "
                f"{bound[i]:.6g} for scenario {coeffs.label!r}")


def mean_field_ou(theta: float, kappa: float, sigma: float,
                  init_mean: float, init_var: float) -> ScenarioSpec:
    """Mean-reverting drift -theta x + kappa mean(mu) with constant noise.

    The moment closure is exact: the mean solves dm = (kappa - theta) m and
    the variance solves dv = -2 theta v + sigma^2, so the oracle is sharp.
    """
    if theta < 0 or sigma < 0:
        raise ValueError("theta and sigma must be >= 0")
    if init_var < 0:
        raise ValueError("init_var must be >= 0")
    theta, kappa, sigma = float(theta), float(kappa), float(sigma)
    m0, v0 = float(init_mean), float(init_var)
    sig_mat = np.array([[sigma]])

    def b(t, x, mu):
        return -theta * x + kappa * mu.mean()

    def sig(t, x, mu):
        return sig_mat

    coeffs = Coefficients(b, sig, d=1, m=1, lipschitz=theta + abs(kappa),
                          bounded=False, label="mean_field_ou")

    def mean_fn(t):
        return np.array([m0 * np.exp((kappa - theta) * t)])

    def cov_fn(t):
        if theta > 0:
            v = v0 * np.exp(-2 * theta * t) + sigma ** 2 / (2 * theta) * (
                1.0 - np.exp(-2 * theta * t))
        else:
            v = v0 + sigma ** 2 * t  # theta = 0 limit of the closed form
        return np.array([[v]])

    oracle = MomentOracle(mean_fn, cov_fn)
    _check_moment_oracle(oracle, theta, kappa, sigma)
    _check_lipschitz(coeffs)
    return ScenarioSpec(
        name="mean_field_ou",
        params={"theta": theta, "kappa": kappa, "sigma": sigma,
                "init_mean": m0, "init_var": v0},
        coefficients=coeffs,
        initial=InitialLawSampler.gaussian([m0], [[v0]]),
        oracle=oracle,
    )


def zero_diffusion_transport(theta: float = 1.0, kappa: float = 0.0,
                             init_mean: float = 0.0,
                             init_var: float = 1.0) -> ScenarioSpec:
    """Pure transport: the OU drift with sigma = 0 and its characteristic flow."""
    if theta < 0:
        raise ValueError("theta must be >= 0")
    theta, kappa = float(theta), float(kappa)
    m0, v0 = float(init_mean), float(init_var)
    zero_mat = np.zeros((1, 1))

    def b(t, x, mu):
        return -theta * x + kappa * mu.mean()

    def sig(t, x, mu):
        return zero_mat

    coeffs = Coefficients(b, sig, d=1, m=1, lipschitz=theta + abs(kappa),
                          bounded=False, label="zero_diffusion_transport")

    def mean_fn(t):
        return np.array([m0 * np.exp((kappa - theta) * t)])

    def cov_fn(t):
        # the mean-field drive is deterministic, so spread contracts at e^{-theta t}
        return np.array([[v0 * np.exp(-2 * theta * t)]])

    def flow(t, x0):
        # characteristic ODE dx = -theta x + kappa m(t), m(t) from the mean ODE
        x0 = np.asarray(x0, dtype=float)
        drive = m0 * (np.exp((kappa - theta) * t) - np.exp(-theta * t))
        return np.exp(-theta * t) * x0 + drive

    oracle = MomentOracle(mean_fn, cov_fn)
    _check_flow(flow, mean_fn, theta, kappa)
    _check_lipschitz(coeffs)
    return ScenarioSpec(
        name="zero_diffusion_transport",
        params={"theta": theta, "kappa": kappa, "init_mean": m0, "init_var": v0},
        coefficients=coeffs,
        initial=InitialLawSampler.gaussian([m0], [[v0]]),
        oracle=oracle,
        flow=flow,
    )


def _check_flow(flow, mean_fn, theta: float, kappa: float, horizon: float = 1.0):
    """RK4 the coupled characteristic system and compare against the flow map."""
    for x0 in (-2.0, -0.3, 0.0, 1.7):
        def rhs(t, y):
            # y = (x, m); dm = (kappa - theta) m closes the system
            return np.array([-theta * y[0] + kappa * y[1],
                             (kappa - theta) * y[1]])

        y0 = np.array([x0, mean_fn(0.0)[0]])
        worst = 0.0
        for t in np.linspace(0.0, horizon, 5)[1:]:
            y = _rk4(rhs, y0, 0.0, float(t), 2000)
            worst = max(worst, abs(y[0] - float(flow(float(t), x0))))
        if worst > _ORACLE_TOL:
            raise RuntimeError(f"flow oracle fails its ODE check: residual {worst:.3e}")


def nonsmooth_probe() -> ScenarioSpec:
    """Square-root drift with no Lipschitz certificate, used as negative control.

    b(x) = sign(x) sqrt(|x|) is continuous but not Lipschitz at 0; note the
    Euler scheme started exactly at 0 stays at 0 (a fixed point of the
    discretization, not of the continuum problem).
    """
    zero_mat = np.zeros((1, 1))

    def b(t, x, mu):
        return np.sign(x) * np.sqrt(np.abs(x))

    def sig(t, x, mu):
        return zero_mat

    coeffs = Coefficients(b, sig, d=1, m=1, lipschitz=None, bounded=False,
                          label="nonsmooth_probe")
    return ScenarioSpec(
        name="nonsmooth_probe",
        params={},
        coefficients=coeffs,
        initial=InitialLawSampler.fixed(
            EmpiricalMeasure(np.zeros((1, 1)), np.ones(1))),
    )


def gaussian_quantile_measure(mean: float, var: float, n: int) -> EmpiricalMeasure:
    """Deterministic n-point stand-in for N(mean, var) at midpoint quantiles."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if var < 0:
        raise ValueError("var must be >= 0")
    q = (np.arange(n) + 0.5) / n
    pts = mean + np.sqrt(var) * norm.ppf(q)
    return EmpiricalMeasure(pts[:, None], uniform_weights(n))


def gaussian_family(n_members: int, mean_range=(-1.0, 1.0),
                    var_range=(0.1, 0.5), seed: int = 0) -> list[InitialLawSampler]:
    """Seeded family of Gaussian initial laws for ensemble runs."""
    if n_members < 1:
        raise ValueError("n_members must be >= 1")
    lo_m, hi_m = mean_range
    lo_v, hi_v = var_range
    if lo_v < 0:
        raise ValueError("variances must be >= 0")
    out = []
    for i in range(n_members):
        rng = stream(seed, "gaussian-family", i)
        m = float(rng.uniform(lo_m, hi_m))
        v = float(rng.uniform(lo_v, hi_v))
        out.append(InitialLawSampler.gaussian([m], [[v]]))
    return out


def oracle_curve(oracle: MomentOracle, grid: TimeGrid, n: int,
                 seed: int | None = None) -> MeasurePath:
    """Curve of empirical stand-ins for the oracle's Gaussian marginals.

    With seed=None each node uses deterministic midpoint quantiles (exact
    moments up to quadrature); otherwise each node is an iid Gaussian sample.
    """
    measures = []
    for k, t in enumerate(grid.nodes):
        m = float(oracle.mean(float(t))[0])
        v = float(oracle.cov(float(t))[0, 0])
        if seed is None:
            measures.append(gaussian_quantile_measure(m, v, n))
        else:
            rng = stream(seed, "oracle-curve", k)
            pts = m + np.sqrt(v) * rng.standard_normal((n, 1))
            measures.append(EmpiricalMeasure(pts, uniform_weights(n)))
    return MeasurePath(grid, tuple(measures))


SCENARIOS = {
    "mean_field_ou": mean_field_ou,
    "zero_diffusion_transport": zero_diffusion_transport,
    "nonsmooth_probe": nonsmooth_probe,
}
