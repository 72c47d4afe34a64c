"""Particle data model for the measure hierarchy and the maps connecting its levels.

Five levels, bottom to top:

- ``EmpiricalMeasure``        weighted atoms in R^d
- ``PathMeasure``             weighted sample paths (a path law on grid nodes)
- ``MeasurePath``             one empirical measure per grid node (a curve of laws)
- ``RandomMeasure``           weighted atoms that are themselves empirical measures
- ``MeasurePathEnsemble`` /   weighted collections of curves / path laws standing in
  ``PathMeasureEnsemble``     for measures on curve space and on path-law space

The pushforward maps between levels (marginal at a node, path law to curve,
member-wise projection, node evaluation of an ensemble) are exact atom-for-atom
operations here, never approximations.

All arrays are adopted by the constructors and frozen (write flag cleared);
callers that want to keep mutating a buffer must pass a copy. Every type is
immutable after construction and all operations are pure functions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "WEIGHT_TOL",
    "TimeGrid",
    "EmpiricalMeasure",
    "SamplePath",
    "PathMeasure",
    "MeasurePath",
    "RandomMeasure",
    "RandomMeasureCurve",
    "MeasurePathEnsemble",
    "PathMeasureEnsemble",
    "integrate",
    "path_marginal",
    "path_to_curve",
    "ensemble_project",
    "curve_eval",
    "curve_from_ensemble",
    "to_doc",
    "from_doc",
]

# weight vectors must sum to 1 within this tolerance
WEIGHT_TOL = 1e-12


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _as_array(x, name: str, ndim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimensions, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return _freeze(arr)


def _check_weights(weights, n: int) -> np.ndarray:
    w = _as_array(weights, "weights", 1)
    if w.shape[0] != n:
        raise ValueError(f"expected {n} weights, got {w.shape[0]}")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = float(w.sum())
    if abs(total - 1.0) > WEIGHT_TOL:
        raise ValueError(f"weights sum to {total!r}, not 1 within {WEIGHT_TOL}")
    return w


def uniform_weights(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing time nodes starting at 0."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = _as_array(self.nodes, "nodes", 1)
        if nodes.shape[0] < 2:
            raise ValueError("grid needs at least 2 nodes")
        if nodes[0] != 0.0:
            raise ValueError(f"grid must start at 0, got {nodes[0]!r}")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @staticmethod
    def uniform(horizon: float, n_steps: int) -> "TimeGrid":
        if n_steps < 1 or horizon <= 0:
            raise ValueError("need n_steps >= 1 and horizon > 0")
        return TimeGrid(np.linspace(0.0, float(horizon), n_steps + 1))

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def index_of(self, t: float) -> int:
        """Node index of t. Off-grid times raise; there is no interpolation."""
        tol = 1e-9 * max(1.0, self.horizon)
        i = int(np.searchsorted(self.nodes, t))
        for j in (i - 1, i):
            if 0 <= j < self.n_nodes and abs(self.nodes[j] - t) <= tol:
                return j
        raise ValueError(f"t={t!r} is not a grid node (grid has no interpolation)")

    def same_as(self, other: "TimeGrid") -> bool:
        return self is other or np.array_equal(self.nodes, other.nodes)


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Finitely supported probability measure on R^d."""

    points: np.ndarray   # (n, d)
    weights: np.ndarray  # (n,)

    def __post_init__(self):
        points = _as_array(self.points, "points", 2)
        if points.shape[0] < 1:
            raise ValueError("support must be nonempty")
        weights = _check_weights(self.weights, points.shape[0])
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @staticmethod
    def from_points(points, weights=None) -> "EmpiricalMeasure":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.ndim == 2 and np.asarray(points).ndim == 1:
            pts = pts.T  # a flat list of scalars is a d=1 support
        if weights is None:
            weights = uniform_weights(pts.shape[0])
        return EmpiricalMeasure(pts, np.asarray(weights, dtype=float))

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def n_atoms(self) -> int:
        return self.points.shape[0]

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def to_doc(self) -> dict:
        return {
            "type": "empirical_measure",
            "d": self.d,
            "support": self.points.tolist(),
            "weights": self.weights.tolist(),
        }

    @staticmethod
    def from_doc(doc: dict) -> "EmpiricalMeasure":
        _expect_type(doc, "empirical_measure")
        return EmpiricalMeasure(np.asarray(doc["support"], dtype=float),
                                np.asarray(doc["weights"], dtype=float))


@dataclass(frozen=True, eq=False)
class SamplePath:
    """One trajectory: a state per grid node."""

    grid: TimeGrid
    states: np.ndarray  # (n_nodes, d)

    def __post_init__(self):
        states = _as_array(self.states, "states", 2)
        if states.shape[0] != self.grid.n_nodes:
            raise ValueError("states length must equal grid length")
        object.__setattr__(self, "states", states)

    @property
    def d(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True, eq=False)
class PathMeasure:
    """Weighted empirical measure on path space, all paths on one grid.

    Paths are stored stacked as one (n_paths, n_nodes, d) array; ``path(i)``
    exposes the i-th trajectory as a SamplePath.
    """

    grid: TimeGrid
    states: np.ndarray   # (n_paths, n_nodes, d)
    weights: np.ndarray  # (n_paths,)

    def __post_init__(self):
        states = _as_array(self.states, "states", 3)
        if states.shape[1] != self.grid.n_nodes:
            raise ValueError("path states must have one entry per grid node")
        weights = _check_weights(self.weights, states.shape[0])
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights)

    @property
    def d(self) -> int:
        return self.states.shape[2]

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    def path(self, i: int) -> SamplePath:
        return SamplePath(self.grid, self.states[i])

    @property
    def paths(self) -> tuple:
        return tuple(self.path(i) for i in range(self.n_paths))

    def to_doc(self) -> dict:
        return {
            "type": "path_measure",
            "d": self.d,
            "grid": self.grid.nodes.tolist(),
            "paths": self.states.tolist(),
            "weights": self.weights.tolist(),
        }

    @staticmethod
    def from_doc(doc: dict) -> "PathMeasure":
        _expect_type(doc, "path_measure")
        return PathMeasure(TimeGrid(np.asarray(doc["grid"], dtype=float)),
                           np.asarray(doc["paths"], dtype=float),
                           np.asarray(doc["weights"], dtype=float))


def _check_same_d(items, what: str) -> int:
    ds = {item.d for item in items}
    if len(ds) != 1:
        raise ValueError(f"all {what} must share one dimension, got {sorted(ds)}")
    return ds.pop()


@dataclass(frozen=True, eq=False)
class MeasurePath:
    """A curve of empirical measures, one per grid node."""

    grid: TimeGrid
    measures: tuple

    def __post_init__(self):
        measures = tuple(self.measures)
        if len(measures) != self.grid.n_nodes:
            raise ValueError("need one measure per grid node")
        _check_same_d(measures, "measures")
        object.__setattr__(self, "measures", measures)

    @property
    def d(self) -> int:
        return self.measures[0].d

    def at(self, t: float) -> EmpiricalMeasure:
        return self.measures[self.grid.index_of(t)]

    def to_doc(self) -> dict:
        return {
            "type": "measure_path",
            "grid": self.grid.nodes.tolist(),
            "measures": [m.to_doc() for m in self.measures],
        }

    @staticmethod
    def from_doc(doc: dict) -> "MeasurePath":
        _expect_type(doc, "measure_path")
        return MeasurePath(TimeGrid(np.asarray(doc["grid"], dtype=float)),
                           tuple(EmpiricalMeasure.from_doc(m) for m in doc["measures"]))


@dataclass(frozen=True, eq=False)
class RandomMeasure:
    """Weighted atoms that are empirical measures: a measure on measure space."""

    atoms: tuple
    weights: np.ndarray

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if not atoms:
            raise ValueError("need at least one atom")
        _check_same_d(atoms, "atoms")
        weights = _check_weights(self.weights, len(atoms))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def d(self) -> int:
        return self.atoms[0].d

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def to_doc(self) -> dict:
        return {
            "type": "random_measure",
            "atoms": [a.to_doc() for a in self.atoms],
            "weights": self.weights.tolist(),
        }

    @staticmethod
    def from_doc(doc: dict) -> "RandomMeasure":
        _expect_type(doc, "random_measure")
        return RandomMeasure(tuple(EmpiricalMeasure.from_doc(a) for a in doc["atoms"]),
                             np.asarray(doc["weights"], dtype=float))


@dataclass(frozen=True, eq=False)
class RandomMeasureCurve:
    """A curve of random measures, one per grid node."""

    grid: TimeGrid
    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        if len(entries) != self.grid.n_nodes:
            raise ValueError("need one random measure per grid node")
        _check_same_d(entries, "entries")
        object.__setattr__(self, "entries", entries)

    @property
    def d(self) -> int:
        return self.entries[0].d

    def at(self, t: float) -> RandomMeasure:
        return self.entries[self.grid.index_of(t)]

    def to_doc(self) -> dict:
        return {
            "type": "random_measure_curve",
            "grid": self.grid.nodes.tolist(),
            "entries": [e.to_doc() for e in self.entries],
        }

    @staticmethod
    def from_doc(doc: dict) -> "RandomMeasureCurve":
        _expect_type(doc, "random_measure_curve")
        return RandomMeasureCurve(TimeGrid(np.asarray(doc["grid"], dtype=float)),
                                  tuple(RandomMeasure.from_doc(e) for e in doc["entries"]))


def _check_members(members, grid: TimeGrid, what: str):
    members = tuple(members)
    if not members:
        raise ValueError(f"need at least one {what}")
    for m in members:
        if not grid.same_as(m.grid):
            raise ValueError(f"all {what}s must share the ensemble grid")
    _check_same_d(members, what + "s")
    return members


@dataclass(frozen=True, eq=False)
class MeasurePathEnsemble:
    """Weighted collection of measure curves on one grid."""

    grid: TimeGrid
    members: tuple
    weights: np.ndarray

    def __post_init__(self):
        members = _check_members(self.members, self.grid, "member curve")
        weights = _check_weights(self.weights, len(members))
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "weights", weights)

    @property
    def d(self) -> int:
        return self.members[0].d

    @property
    def n_members(self) -> int:
        return len(self.members)

    def to_doc(self) -> dict:
        return {
            "type": "measure_path_ensemble",
            "grid": self.grid.nodes.tolist(),
            "members": [m.to_doc() for m in self.members],
            "weights": self.weights.tolist(),
        }

    @staticmethod
    def from_doc(doc: dict) -> "MeasurePathEnsemble":
        _expect_type(doc, "measure_path_ensemble")
        return MeasurePathEnsemble(TimeGrid(np.asarray(doc["grid"], dtype=float)),
                                   tuple(MeasurePath.from_doc(m) for m in doc["members"]),
                                   np.asarray(doc["weights"], dtype=float))


@dataclass(frozen=True, eq=False)
class PathMeasureEnsemble:
    """Weighted collection of path measures on one grid."""

    grid: TimeGrid
    members: tuple
    weights: np.ndarray

    def __post_init__(self):
        members = _check_members(self.members, self.grid, "member path measure")
        weights = _check_weights(self.weights, len(members))
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "weights", weights)

    @property
    def d(self) -> int:
        return self.members[0].d

    @property
    def n_members(self) -> int:
        return len(self.members)

    def to_doc(self) -> dict:
        return {
            "type": "path_measure_ensemble",
            "grid": self.grid.nodes.tolist(),
            "members": [m.to_doc() for m in self.members],
            "weights": self.weights.tolist(),
        }

    @staticmethod
    def from_doc(doc: dict) -> "PathMeasureEnsemble":
        _expect_type(doc, "path_measure_ensemble")
        return PathMeasureEnsemble(TimeGrid(np.asarray(doc["grid"], dtype=float)),
                                   tuple(PathMeasure.from_doc(m) for m in doc["members"]),
                                   np.asarray(doc["weights"], dtype=float))


# ---------------------------------------------------------------------------
# operations


def integrate(mu: EmpiricalMeasure, f) -> float:
    """Integral of f against mu: the finite sum over weighted support points.

    f may be vectorized over the support (preferred) or a plain scalar map.
    """
    d = getattr(f, "d", None)
    if d is not None and d != mu.d:
        raise ValueError(f"function acts on R^{d}, measure lives in R^{mu.d}")
    try:
        vals = np.asarray(f(mu.points), dtype=float)
        if vals.shape != (mu.n_atoms,):
            raise ValueError
    except Exception:
        vals = np.array([float(f(x)) for x in mu.points])
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise ValueError(f"f is non-finite at support point {bad}: {mu.points[bad]!r}")
    return float(mu.weights @ vals)


def path_marginal(lam: PathMeasure, t: float) -> EmpiricalMeasure:
    """Time-t marginal of a path measure. t must be a grid node."""
    idx = lam.grid.index_of(t)
    return EmpiricalMeasure(lam.states[:, idx, :], lam.weights)


def path_to_curve(lam: PathMeasure) -> MeasurePath:
    """The curve of marginals of a path measure."""
    measures = tuple(EmpiricalMeasure(lam.states[:, k, :], lam.weights)
                     for k in range(lam.grid.n_nodes))
    return MeasurePath(lam.grid, measures)


def ensemble_project(frak_l: PathMeasureEnsemble) -> MeasurePathEnsemble:
    """Member-wise projection of path measures to their marginal curves."""
    return MeasurePathEnsemble(frak_l.grid,
                               tuple(path_to_curve(m) for m in frak_l.members),
                               frak_l.weights)


def curve_eval(ensemble: MeasurePathEnsemble, t: float) -> RandomMeasure:
    """Evaluate an ensemble of curves at a node: one atom per member."""
    idx = ensemble.grid.index_of(t)
    return RandomMeasure(tuple(m.measures[idx] for m in ensemble.members),
                         ensemble.weights)


def curve_from_ensemble(ensemble: MeasurePathEnsemble) -> RandomMeasureCurve:
    """Collect node evaluations of an ensemble into a random-measure curve."""
    entries = tuple(RandomMeasure(tuple(m.measures[k] for m in ensemble.members),
                                  ensemble.weights)
                    for k in range(ensemble.grid.n_nodes))
    return RandomMeasureCurve(ensemble.grid, entries)


# ---------------------------------------------------------------------------
# serialization dispatch

_DOC_TYPES = {
    "empirical_measure": EmpiricalMeasure,
    "path_measure": PathMeasure,
    "measure_path": MeasurePath,
    "random_measure": RandomMeasure,
    "random_measure_curve": RandomMeasureCurve,
    "measure_path_ensemble": MeasurePathEnsemble,
    "path_measure_ensemble": PathMeasureEnsemble,
}


def _expect_type(doc: dict, expected: str):
    got = doc.get("type")
    if got != expected:
        raise ValueError(f"document type {got!r}, expected {expected!r}")


def to_doc(obj) -> dict:
    return obj.to_doc()


def from_doc(doc: dict):
    kind = doc.get("type")
    if kind not in _DOC_TYPES:
        raise ValueError(f"unknown document type {kind!r}")
    return _DOC_TYPES[kind].from_doc(doc)
