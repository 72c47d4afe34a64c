"""Interacting-particle simulation of measure-dependent diffusions.

Euler-Maruyama with empirical self-coupling: each step evaluates the drift
and diffusion at the current empirical measure of the particle cloud. All
randomness flows through counter-based streams keyed by (seed, role), so a
run is a pure function of its configuration and ensemble member streams are
disjoint by construction.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .measures import (EmpiricalMeasure, PathMeasure, PathMeasureEnsemble,
                       RandomMeasure, RandomMeasureCurve, MeasurePathEnsemble,
                       TimeGrid, ensemble_project, uniform_weights)
from .seeds import derive_seed, stream
from .testfn import Coefficients

__all__ = [
    "BLOWUP_THRESHOLD",
    "BlowUpError",
    "SimConfig",
    "InitialLawSampler",
    "simulate_mckv",
    "simulate_ensemble",
    "integrability_functional",
]

BLOWUP_THRESHOLD = 1e8


class BlowUpError(RuntimeError):
    def __init__(self, particle: int, step: int, t: float, value: float):
        self.particle = particle
        self.step = step
        self.t = t
        self.value = value
        super().__init__(
            f"particle {particle} blew up at step {step} (t={t:g}): |x|={value:.3e} "
            f"exceeds {BLOWUP_THRESHOLD:g}")


@dataclass(frozen=True, eq=False)
class SimConfig:
    n_particles: int
    grid: TimeGrid
    seed: int
    brownian_dim: int = 1

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.brownian_dim < 1:
            raise ValueError("brownian_dim must be >= 1")
        steps = np.diff(self.grid.nodes)
        # uniform step required: adaptive grids would break the fixed noise layout
        if steps.size == 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("simulation grid must have uniform steps")

    @property
    def dt(self) -> float:
        return float(self.grid.nodes[1] - self.grid.nodes[0])


@dataclass(frozen=True, eq=False)
class InitialLawSampler:
    """Initial law: either a fixed empirical measure or a Gaussian."""

    kind: str
    measure: EmpiricalMeasure | None = None
    mean: np.ndarray | None = None
    cov: np.ndarray | None = None

    @staticmethod
    def fixed(measure: EmpiricalMeasure) -> "InitialLawSampler":
        return InitialLawSampler("fixed", measure=measure)

    @staticmethod
    def gaussian(mean, cov) -> "InitialLawSampler":
        mean = np.asarray(mean, dtype=float).reshape(-1)
        cov = np.asarray(cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ValueError("cov must be (d, d) matching mean")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("cov must be symmetric")
        return InitialLawSampler("gaussian", mean=mean, cov=cov)

    def __post_init__(self):
        if self.kind not in ("fixed", "gaussian"):
            raise ValueError(f"unknown initial law kind {self.kind!r}")
        if self.kind == "fixed" and self.measure is None:
            raise ValueError("fixed initial law needs a measure")
        if self.kind == "gaussian" and (self.mean is None or self.cov is None):
            raise ValueError("gaussian initial law needs mean and cov")

    @property
    def d(self) -> int:
        return self.measure.d if self.kind == "fixed" else int(self.mean.size)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "fixed":
            mu = self.measure
            if mu.n_atoms == n and np.allclose(mu.weights, 1.0 / n, rtol=0.0,
                                               atol=1e-15):
                return np.array(mu.points)  # atom-per-particle, no resampling
            idx = rng.choice(mu.n_atoms, size=n, p=mu.weights)
            return np.array(mu.points[idx])
        evals, evecs = np.linalg.eigh(self.cov)
        root = evecs @ np.diag(np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T
        return self.mean + rng.standard_normal((n, self.d)) @ root.T


def _check_cloud(x: np.ndarray, step: int, t: float):
    r = np.linalg.norm(x, axis=-1)
    bad = ~np.isfinite(r) | (r > BLOWUP_THRESHOLD)
    if bad.any():
        i = int(np.argmax(bad))
        val = float(r[i]) if np.isfinite(r[i]) else float("inf")
        raise BlowUpError(i, step, t, val)


def simulate_mckv(coeffs: Coefficients, init: InitialLawSampler,
                  cfg: SimConfig) -> PathMeasure:
    """Simulate the particle system and return the path-space empirical measure."""
    if init.d != coeffs.d:
        raise ValueError(f"initial law lives in R^{init.d}, coefficients in R^{coeffs.d}")
    if cfg.brownian_dim != coeffs.m:
        raise ValueError(f"brownian_dim {cfg.brownian_dim} != coefficient noise dim {coeffs.m}")
    n, d, m = cfg.n_particles, coeffs.d, coeffs.m
    nodes = cfg.grid.nodes
    n_steps = nodes.size - 1

    x = init.sample(n, stream(cfg.seed, "init"))
    if x.shape != (n, d):
        raise ValueError(f"initial sample has shape {x.shape}, expected {(n, d)}")
    _check_cloud(x, 0, float(nodes[0]))

    weights = uniform_weights(n)
    states = np.empty((n, n_steps + 1, d))
    states[:, 0, :] = x
    rng = stream(cfg.seed, "noise")
    for k in range(n_steps):
        t = float(nodes[k])
        dt = float(nodes[k + 1] - nodes[k])
        mu = EmpiricalMeasure(x.copy(), weights)
        bv = coeffs.drift(t, x, mu)
        sv = coeffs.diffusion(t, x, mu)
        dw = rng.standard_normal((n, m)) * np.sqrt(dt)
        if sv.ndim == 2:
            noise = dw @ sv.T
        else:
            noise = np.einsum("ndm,nm->nd", sv, dw)
        x = x + bv * dt + noise
        _check_cloud(x, k + 1, float(nodes[k + 1]))
        states[:, k + 1, :] = x
    return PathMeasure(cfg.grid, states, uniform_weights(n))


def simulate_ensemble(coeffs: Coefficients, initial_laws, cfg: SimConfig,
                      *, seed: int | None = None, weights=None,
                      threads: int = 1) -> PathMeasureEnsemble:
    """Simulate one particle system per initial law.

    initial_laws is a RandomMeasure (one fixed law per atom, atom weights
    become member weights) or a sequence of InitialLawSampler. Member seeds
    are derived from the base seed so streams never overlap and the result
    is independent of thread scheduling.
    """
    base_seed = cfg.seed if seed is None else seed
    if isinstance(initial_laws, RandomMeasure):
        samplers = [InitialLawSampler.fixed(a) for a in initial_laws.atoms]
        weights = initial_laws.weights if weights is None else weights
    else:
        samplers = list(initial_laws)
    if not samplers:
        raise ValueError("need at least one initial law")
    if weights is None:
        weights = uniform_weights(len(samplers))

    def run(i: int) -> PathMeasure:
        member_cfg = SimConfig(cfg.n_particles, cfg.grid,
                               derive_seed(base_seed, "member", i), cfg.brownian_dim)
        return simulate_mckv(coeffs, samplers[i], member_cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            members = list(pool.map(run, range(len(samplers))))
    else:
        members = [run(i) for i in range(len(samplers))]
    return PathMeasureEnsemble(cfg.grid, tuple(members), weights)


def _mean_integrand(t: float, mu: EmpiricalMeasure, coeffs: Coefficients) -> float:
    """Mean of |b|/(1+|x|) + |a|_F/(1+|x|^2) under mu."""
    x = mu.points
    bv = coeffs.drift(t, x, mu)
    av = np.broadcast_to(coeffs.a(t, x, mu), x.shape + (coeffs.d,))
    r = np.linalg.norm(x, axis=-1)
    vals = (np.linalg.norm(bv, axis=-1) / (1.0 + r)
            + np.linalg.norm(av, axis=(-2, -1)) / (1.0 + r ** 2))
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"integrability integrand not finite at t={t:g}")
    return float(mu.weights @ vals)


def integrability_functional(obj, coeffs: Coefficients) -> float:
    """Time integral of the mean coefficient growth along the object.

    Accepts a RandomMeasureCurve, a MeasurePathEnsemble, or a
    PathMeasureEnsemble; ensembles average the integrand over members with
    their weights. Finiteness of the result is the standing integrability
    hypothesis behind every weak formulation here.
    """
    if isinstance(obj, PathMeasureEnsemble):
        obj = ensemble_project(obj)
    nodes = obj.grid.nodes
    g = np.empty(nodes.size)
    if isinstance(obj, RandomMeasureCurve):
        for k, t in enumerate(nodes):
            rm = obj.entries[k]
            g[k] = rm.weights @ [_mean_integrand(float(t), a, coeffs) for a in rm.atoms]
    elif isinstance(obj, MeasurePathEnsemble):
        for k, t in enumerate(nodes):
            g[k] = obj.weights @ [_mean_integrand(float(t), mem.measures[k], coeffs)
                                  for mem in obj.members]
    else:
        raise TypeError(f"cannot integrate over {type(obj).__name__}")
    return float(np.trapezoid(g, nodes))
