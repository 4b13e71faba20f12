"""Empirical measure hierarchy over the network and exact Wasserstein distances.

All distances are exact optimal-transport costs solved with POT's network simplex
(``ot.emd2``). Nested distances recurse through node indices of the provenance
graph and memoize pairwise sub-distances per call.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import ot
from scipy.spatial.distance import cdist

from ..errors import CapExceededError

logger = logging.getLogger(__name__)

OT_SIZE_CAP = 512
PATH_OT_SIZE_CAP = 4096
MASS_TOL = 1e-9


# ============================================================
# Flat atomic measures
# ============================================================

@dataclass(frozen=True, eq=False)
class AtomMeasure:
    """Weighted atoms in R^d; ``points`` has shape (K, d)."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if points.shape[0] != weights.size:
            raise ValueError("one weight per atom is required")
        if np.any(weights < 0.0):
            raise ValueError("atom weights must be nonnegative")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, points) -> "AtomMeasure":
        """Uniform empirical measure of the given points, duplicates merged."""
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        return cls(points, np.full(points.shape[0], 1.0 / points.shape[0])).merged()

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def size(self) -> int:
        return int(self.weights.size)

    def is_probability(self, tol: float = MASS_TOL) -> bool:
        return abs(self.total - 1.0) <= tol

    def merged(self) -> "AtomMeasure":
        """Merge duplicate points, drop zero weights, order atoms lexicographically."""
        keep = self.weights > 0.0
        unique, inverse = np.unique(self.points[keep], axis=0, return_inverse=True)
        weights = np.bincount(inverse.reshape(-1), weights=self.weights[keep], minlength=unique.shape[0])
        return AtomMeasure(unique, weights)

    def same_as(self, other: "AtomMeasure", tol: float = 0.0) -> bool:
        a, b = self.merged(), other.merged()
        if a.points.shape != b.points.shape:
            return False
        return bool(np.allclose(a.points, b.points, rtol=0.0, atol=tol) and np.allclose(a.weights, b.weights, rtol=0.0, atol=max(tol, 1e-15)))


def _exact_ot(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> float:
    if a.size + b.size > OT_SIZE_CAP:
        raise CapExceededError(f"exact OT size cap: {a.size} + {b.size} atoms > {OT_SIZE_CAP}")
    return _solve(a, b, cost)


def _solve(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> float:
    if a.size == 1 or b.size == 1:
        # the coupling is forced
        return float(np.sum(cost * (a[:, None] * b[None, :])))
    logger.debug("exact OT on %d x %d atoms", a.size, b.size)
    return float(ot.emd2(a, b, np.ascontiguousarray(cost), numItermax=1_000_000))


def _normalized_weights(p: AtomMeasure) -> np.ndarray:
    if not p.is_probability():
        raise ValueError(f"not probability: total mass {p.total!r}")
    return p.weights / p.total


def wasserstein(p: AtomMeasure, q: AtomMeasure) -> float:
    """Exact order-1 Wasserstein distance under the Euclidean ground metric.

    Args:
        p (AtomMeasure): Probability measure.
        q (AtomMeasure): Probability measure in the same dimension.

    Returns:
        float: Optimal transport cost.

    Raises:
        ValueError: If either measure does not have total mass one.
        CapExceededError: If the merged supports exceed 512 atoms together.
    """
    p, q = p.merged(), q.merged()
    a, b = _normalized_weights(p), _normalized_weights(q)
    return _exact_ot(a, b, cdist(p.points, q.points))


# ============================================================
# Nested empirical measures
# ============================================================

@dataclass(frozen=True, eq=False)
class NestedEmpiricalMeasure:
    """Atoms (u^j_*, mu^n_j) with uniform weights, plus graph/initial-condition provenance."""

    points: np.ndarray
    subs: Tuple[AtomMeasure, ...]
    weights: np.ndarray
    graph: Optional[object] = None
    init: Optional[object] = None

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @cached_property
    def flat_marginal(self) -> AtomMeasure:
        """(2n+1)^{-1} sum_j delta_{u^j_*}."""
        return AtomMeasure(self.points, self.weights).merged()

    def as_depth(self) -> "DepthMeasure":
        """Depth-1 view; needs graph provenance."""
        if self.graph is None:
            raise ValueError("nested measure has no graph provenance")
        return DepthMeasure(self.points, self.graph.neighbors, 1, self.weights)


def build_nested(g, init) -> NestedEmpiricalMeasure:
    """Build mu^n_* = (2n+1)^{-1} sum_j delta_{(u^j_*, mu^n_j)}.

    Args:
        g (GraphSample): Graph providing the in-neighbourhoods Xi^n_j.
        init (InitialCondition): States u^j_*.

    Returns:
        NestedEmpiricalMeasure: Nested measure with provenance.

    Raises:
        ValueError: If sizes disagree or some node has no in-neighbour.
    """
    if init.size != g.size:
        raise ValueError("initial condition and graph disagree on the number of nodes")
    if g.degrees.min() == 0:
        raise ValueError("disconnected vertex")
    subs = tuple(AtomMeasure.uniform(init.states[nbrs]) for nbrs in g.neighbors)
    weights = np.full(g.size, 1.0 / g.size)
    return NestedEmpiricalMeasure(init.states, subs, weights, g, init)


def lift_gamma(nested: NestedEmpiricalMeasure, lift: Callable[[np.ndarray], np.ndarray]) -> NestedEmpiricalMeasure:
    """Push atoms and sub-atoms of a circle-valued nested measure through U.

    Args:
        nested (NestedEmpiricalMeasure): Points are angles with shape (K, 1).
        lift (Callable): Vectorized map from angles to (K, d) states.

    Returns:
        NestedEmpiricalMeasure: (U(theta), mu o U^{-1}) atoms with the same weights.
    """
    points = lift(nested.points[:, 0])
    subs = tuple(AtomMeasure(lift(sub.points[:, 0]), sub.weights).merged() for sub in nested.subs)
    return NestedEmpiricalMeasure(points, subs, nested.weights.copy(), nested.graph, None)


# ============================================================
# Depth-m measures indexed by graph nodes
# ============================================================

@dataclass(frozen=True, eq=False)
class DepthMeasure:
    """Depth-m object stored by node indirection.

    Node j's depth-k object is (states[j], uniform mixture over k' in neighbors[j] of the
    depth-(k-1) objects of k'); a depth-0 object is the bare point. The measure is the
    ``weights``-mixture over root nodes of depth-m objects. Zero root weights mark
    auxiliary nodes that only occur inside sub-measures.
    """

    states: np.ndarray
    neighbors: Tuple[np.ndarray, ...]
    depth: int
    weights: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "neighbors", tuple(np.asarray(nb, dtype=np.int64) for nb in self.neighbors))
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")
        if len(self.neighbors) != states.shape[0] or weights.size != states.shape[0]:
            raise ValueError("depth measure needs one neighbour set and one weight per node")
        if abs(weights.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"not probability: total mass {weights.sum()!r}")

    @property
    def roots(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0.0)

    def truncated(self, depth: int) -> "DepthMeasure":
        return DepthMeasure(self.states, self.neighbors, depth, self.weights)


def unroll_phi(g, init, m: int) -> DepthMeasure:
    """Depth-m neighbourhood unroll Phi_m of the empirical network measure.

    Args:
        g (GraphSample): Provenance graph.
        init (InitialCondition): Initial states, pairwise distinct.
        m (int): Depth, at least 1.

    Returns:
        DepthMeasure: The unrolled measure.

    Raises:
        ValueError: If m < 1, a node is disconnected, or states repeat.
    """
    if m < 1:
        raise ValueError("depth must be at least 1")
    if g.degrees.min() == 0:
        raise ValueError("disconnected vertex")
    if not init.has_distinct_states():
        raise ValueError("conditional kernel ambiguous: initial states are not distinct")
    return DepthMeasure(init.states, g.neighbors, m, np.full(g.size, 1.0 / g.size))


class _NestedDistance:
    """Memoized sub-distances E_k(i, j) = d_k(sub_k^p(i), sub_k^q(j))."""

    def __init__(self, p: DepthMeasure, q: DepthMeasure):
        self.p = p
        self.q = q
        self.memo: Dict[Tuple[int, int, int], float] = {}

    def point_cost(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        return cdist(self.p.states[left], self.q.states[right])

    def sub(self, k: int, i: int, j: int) -> float:
        key = (k, i, j)
        if key not in self.memo:
            left, right = self.p.neighbors[i], self.q.neighbors[j]
            if left.size == 0 or right.size == 0:
                raise ValueError("disconnected vertex")
            cost = self.point_cost(left, right)
            if k > 0:
                cost = cost + np.array([[self.sub(k - 1, a, b) for b in right] for a in left])
            a_w = np.full(left.size, 1.0 / left.size)
            b_w = np.full(right.size, 1.0 / right.size)
            self.memo[key] = _exact_ot(a_w, b_w, cost)
        return self.memo[key]

    def top(self, k: int) -> float:
        left, right = self.p.roots, self.q.roots
        cost = self.point_cost(left, right)
        if k > 0:
            cost = cost + np.array([[self.sub(k - 1, a, b) for b in right] for a in left])
        return _exact_ot(self.p.weights[left], self.q.weights[right], cost)


def nested_wasserstein(p: DepthMeasure, q: DepthMeasure, k: Optional[int] = None) -> float:
    """Recursive distance d_k with ground cost ||x - y|| + d_{k-1}(sub-measures).

    Args:
        p (DepthMeasure): First measure.
        q (DepthMeasure): Second measure of the same depth.
        k (Optional[int]): Depth to compare at; defaults to the common depth.

    Returns:
        float: d_k(p, q); d_0 is the Euclidean Wasserstein distance of the root points.

    Raises:
        ValueError: On depth mismatch.
        CapExceededError: If any transport problem exceeds the size cap.
    """
    if p.depth != q.depth:
        raise ValueError(f"depth mismatch: {p.depth} != {q.depth}")
    k = p.depth if k is None else k
    if k > p.depth or k < 0:
        raise ValueError(f"depth mismatch: cannot compare depth-{p.depth} measures at depth {k}")
    if k == 0:
        return wasserstein(AtomMeasure(p.states, p.weights), AtomMeasure(q.states, q.weights))
    return _NestedDistance(p, q).top(k)


TreeObject = Tuple[np.ndarray, tuple]


def expand_tree(dm: DepthMeasure, max_depth: int = 3, max_nodes: int = 200_000) -> List[Tuple[float, TreeObject]]:
    """Explicit tree form: a list of (weight, object) with object = (point, children).

    Children of a depth-k object are depth-(k-1) objects with implicit uniform weights;
    depth-0 objects have no children.

    Raises:
        CapExceededError: If the depth exceeds ``max_depth`` or the tree grows too large.
    """
    if dm.depth > max_depth:
        raise CapExceededError(f"tree expansion limited to depth {max_depth}")
    counter = [0]

    def build(node: int, k: int) -> TreeObject:
        counter[0] += 1
        if counter[0] > max_nodes:
            raise CapExceededError(f"tree expansion exceeds {max_nodes} nodes")
        if k == 0:
            return dm.states[node], ()
        return dm.states[node], tuple(build(int(c), k - 1) for c in dm.neighbors[node])

    return [(float(dm.weights[r]), build(int(r), dm.depth)) for r in dm.roots]


# ============================================================
# Positive measures on S^1 x {0, 1}
# ============================================================

@dataclass(frozen=True, eq=False)
class PlusMeasure:
    """Weighted atoms ((theta, w), weight) of a positive measure on S^1 x {0, 1}."""

    angles: np.ndarray
    marks: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for name in ("angles", "weights"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        object.__setattr__(self, "marks", np.asarray(self.marks, dtype=np.int8).reshape(-1))
        if not self.angles.size == self.marks.size == self.weights.size:
            raise ValueError("plus measure needs one mark and one weight per atom")
        if np.any(self.weights < 0.0):
            raise ValueError("plus measure weights must be nonnegative")
        if np.any((self.marks != 0) & (self.marks != 1)):
            raise ValueError("marks must be 0 or 1")

    @property
    def connected_mass(self) -> float:
        """nu(w = 1)."""
        return float(self.weights[self.marks == 1].sum())

    @classmethod
    def tilde(cls, g, j: int) -> "PlusMeasure":
        """(rho_n (2n+1))^{-1} sum_k delta_{(theta^k, w^{jk})} for node label j."""
        index = j + g.n
        marks = np.zeros(g.size, dtype=np.int8)
        marks[g.neighbors[index]] = 1
        return cls(g.positions, marks, np.full(g.size, 1.0 / (g.rho * g.size)))


def project_pi(p: PlusMeasure) -> AtomMeasure:
    """Conditional law on {w = 1}: (pi nu)(B) = nu(theta in B, w = 1) / nu(w = 1).

    Raises:
        ValueError: If nu(w = 1) = 0.
    """
    mass = p.connected_mass
    if mass <= 0.0:
        raise ValueError("pi undefined: no mass on w = 1")
    keep = p.marks == 1
    return AtomMeasure(p.angles[keep], p.weights[keep] / mass).merged()


# ============================================================
# Path measures
# ============================================================

@dataclass(frozen=True, eq=False)
class PathMeasure:
    """Weighted trajectories on one shared time grid; ``paths`` has shape (K, S+1, d)."""

    times: np.ndarray
    paths: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "paths", np.asarray(self.paths, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if self.paths.ndim != 3 or self.paths.shape[1] != self.times.size:
            raise ValueError("paths must have shape (atoms, time points, dimension)")
        if self.weights.size != self.paths.shape[0]:
            raise ValueError("one weight per path is required")

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def terminal(self) -> AtomMeasure:
        return AtomMeasure(self.paths[:, -1, :], self.weights)

    def merged(self) -> "PathMeasure":
        """Merge identical trajectories; atoms ordered lexicographically."""
        flat = self.paths.reshape(self.paths.shape[0], -1)
        unique, inverse = np.unique(flat, axis=0, return_inverse=True)
        weights = np.bincount(inverse.reshape(-1), weights=self.weights, minlength=unique.shape[0])
        return PathMeasure(self.times, unique.reshape((-1,) + self.paths.shape[1:]), weights)

    def same_as(self, other: "PathMeasure") -> bool:
        """Exact equality as multisets of weighted trajectories."""
        a, b = self.merged(), other.merged()
        return bool(
            np.array_equal(a.times, b.times)
            and np.array_equal(a.paths, b.paths)
            and np.allclose(a.weights, b.weights, rtol=0.0, atol=1e-15)
        )

    def resample(self, times: Sequence[float]) -> "PathMeasure":
        """Linear interpolation of every path onto a new grid within [t_0, t_S]."""
        times = np.asarray(times, dtype=float)
        idx = np.clip(np.searchsorted(self.times, times, side="right") - 1, 0, self.times.size - 2)
        left, right = self.times[idx], self.times[idx + 1]
        frac = ((times - left) / (right - left))[None, :, None]
        values = (1.0 - frac) * self.paths[:, idx, :] + frac * self.paths[:, idx + 1, :]
        exact = np.isin(times, self.times)
        if np.any(exact):
            values[:, exact, :] = self.paths[:, np.searchsorted(self.times, times[exact]), :]
        return PathMeasure(times, values, self.weights)


def path_wasserstein(p: PathMeasure, q: PathMeasure) -> float:
    """Exact Wasserstein distance between path measures with sup-over-time ground cost.

    The coarser measure is resampled onto the finer grid; for piecewise-linear paths the
    sup over each segment is attained at a grid point.

    Raises:
        ValueError: If horizons differ or a measure is not a probability.
        CapExceededError: If the merged supports exceed the path OT cap.
    """
    if not np.isclose(p.times[-1], q.times[-1]) or not np.isclose(p.times[0], q.times[0]):
        raise ValueError("path measures live on different time intervals")
    if p.times.size < q.times.size:
        p = p.resample(q.times)
    elif q.times.size < p.times.size:
        q = q.resample(p.times)
    elif not np.array_equal(p.times, q.times):
        q = q.resample(p.times)
    p, q = p.merged(), q.merged()
    for measure in (p, q):
        if abs(measure.total - 1.0) > MASS_TOL:
            raise ValueError(f"not probability: total mass {measure.total!r}")
    if p.weights.size + q.weights.size > PATH_OT_SIZE_CAP:
        raise CapExceededError(f"exact OT size cap: {p.weights.size} + {q.weights.size} paths > {PATH_OT_SIZE_CAP}")
    cost = np.zeros((p.weights.size, q.weights.size))
    for s in range(p.times.size):
        np.maximum(cost, cdist(p.paths[:, s, :], q.paths[:, s, :]), out=cost)
    return _solve(p.weights / p.total, q.weights / q.total, cost)
