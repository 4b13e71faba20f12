"""Euler push-forward Psi_m of nested network measures and its convergence ladder."""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ..contracts import KernelPort
from ..errors import CapExceededError, NoConvergenceError
from .dynamics import InitialCondition, path_empirical, simulate
from .fields import Lift, VectorFieldPair
from .graph import sample_graph
from .measures import (
    DepthMeasure,
    NestedEmpiricalMeasure,
    PathMeasure,
    build_nested,
    expand_tree,
    path_wasserstein,
    unroll_phi,
)
from .streams import generator

logger = logging.getLogger(__name__)

FACTORIZATION_MAX_NODES = 50
FACTORIZATION_MAX_STEPS = 3
FACTORIZATION_TOL = 1e-9
LADDER_REFINEMENT = 16


@dataclass(frozen=True)
class PushforwardConfig:
    """Horizon T, initial Euler step count m, ladder tolerance and step cap."""

    horizon: float = 1.0
    steps: int = 8
    tol: float = 1e-2
    max_steps: int = 4096

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")


def _provenance(nu: NestedEmpiricalMeasure):
    if nu.graph is None or nu.init is None:
        raise ValueError("nested measure has no graph provenance")
    return nu.graph, nu.init


def psi_m(nu: NestedEmpiricalMeasure, fields: VectorFieldPair, cfg: PushforwardConfig, steps: Optional[int] = None) -> PathMeasure:
    """Empirical measure of the m-step Euler polygons y^j_m started from nu.

    Args:
        nu (NestedEmpiricalMeasure): Measure carrying graph provenance.
        fields (VectorFieldPair): Drift and coupling.
        cfg (PushforwardConfig): Horizon and default step count.
        steps (Optional[int]): Overrides ``cfg.steps``.

    Returns:
        PathMeasure: Uniform measure over the piecewise-linear paths.
    """
    g, init = _provenance(nu)
    return path_empirical(simulate(g, init, fields, cfg.horizon, steps or cfg.steps, "euler"))


@dataclass(frozen=True)
class PsiLimit:
    measure: PathMeasure
    steps: int
    ladder: List[int]
    gaps: List[float]


def psi_limit(nu: NestedEmpiricalMeasure, fields: VectorFieldPair, cfg: PushforwardConfig) -> PsiLimit:
    """Double m until d_W(Psi_m nu, Psi_2m nu) < tol and return the finer measure.

    Raises:
        NoConvergenceError: If doubling would pass ``cfg.max_steps`` first.
    """
    m = cfg.steps
    previous = psi_m(nu, fields, cfg, m)
    ladder: List[int] = [m]
    gaps: List[float] = []
    while True:
        if 2 * m > cfg.max_steps:
            gap = gaps[-1] if gaps else float("inf")
            raise NoConvergenceError(f"no convergence at cap {cfg.max_steps}: gap {gap:.3e}", gap, m, gaps)
        m *= 2
        current = psi_m(nu, fields, cfg, m)
        gaps.append(path_wasserstein(previous, current))
        ladder.append(m)
        logger.info("psi ladder m=%d gap=%.3e", m, gaps[-1])
        if gaps[-1] < cfg.tol:
            return PsiLimit(current, m, ladder, gaps)
        previous = current


@dataclass(frozen=True)
class FactorizationReport:
    nodes: int
    steps: int
    gap: float
    tolerance: float = FACTORIZATION_TOL
    direct: Optional[PathMeasure] = field(default=None, repr=False)
    tree: Optional[PathMeasure] = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.gap <= self.tolerance


def _tree_path(obj, fields: VectorFieldPair, dt: float) -> np.ndarray:
    point, children = obj
    if not children:
        return point[None, :]
    child_paths = np.stack([_tree_path(child, fields, dt) for child in children])
    path = [point]
    for p in range(child_paths.shape[1]):
        y = path[-1][None, :]
        inputs = child_paths[:, p, :]
        coupling = fields.coupling(np.repeat(y, inputs.shape[0], axis=0), inputs).mean(axis=0)
        path.append(path[-1] + dt * (fields.drift(y)[0] + coupling))
    return np.stack(path)


def gamma_tree(dm: DepthMeasure, fields: VectorFieldPair, horizon: float) -> PathMeasure:
    """Apply the nested Euler recursion to the explicit depth-m tree of ``dm``."""
    dt = horizon / dm.depth
    tree = expand_tree(dm)
    paths = np.stack([_tree_path(obj, fields, dt) for _, obj in tree])
    weights = np.array([w for w, _ in tree])
    return PathMeasure(np.linspace(0.0, horizon, dm.depth + 1), paths, weights)


def factorization_check(g, init: InitialCondition, fields: VectorFieldPair, cfg: PushforwardConfig) -> FactorizationReport:
    """Compare Psi_m computed by coupled Euler on the graph with Gamma^m on the unrolled tree.

    Raises:
        CapExceededError: If the graph has more than 50 nodes or m exceeds 3.
    """
    if g.size > FACTORIZATION_MAX_NODES or cfg.steps > FACTORIZATION_MAX_STEPS:
        raise CapExceededError(
            f"factorization check limited to {FACTORIZATION_MAX_NODES} nodes and m <= {FACTORIZATION_MAX_STEPS}"
        )
    direct = psi_m(build_nested(g, init), fields, cfg)
    tree = gamma_tree(unroll_phi(g, init, cfg.steps), fields, cfg.horizon)
    gap = path_wasserstein(direct, tree)
    logger.info("factorization gap %.3e on %d nodes, m=%d", gap, g.size, cfg.steps)
    return FactorizationReport(g.size, cfg.steps, gap, direct=direct, tree=tree)


@dataclass(frozen=True)
class LadderResult:
    m_ladder: List[int]
    gaps: List[float]
    fitted_slope: float
    final_distance: float
    reference_steps: int


def euler_ladder(
    nu: NestedEmpiricalMeasure,
    fields: VectorFieldPair,
    cfg: PushforwardConfig,
    ladder: Sequence[int],
    refinement: int = LADDER_REFINEMENT,
) -> LadderResult:
    """Distances d_W(Psi_m nu, Psi_ref nu) along a ladder and their log-log slope.

    The reference runs ``refinement`` times the largest ladder step count, so the
    gap at step count m carries a relative bias of about m / reference_steps.
    """
    if refinement < 2:
        raise ValueError("refinement must be at least 2")
    ladder = sorted(int(m) for m in ladder)
    reference_steps = refinement * ladder[-1]
    reference = psi_m(nu, fields, cfg, reference_steps)
    gaps = [path_wasserstein(psi_m(nu, fields, cfg, m), reference) for m in ladder]
    positive = [(m, gap) for m, gap in zip(ladder, gaps) if gap > 0.0]
    if len(positive) > 1:
        slope = float(np.polyfit(np.log([m for m, _ in positive]), np.log([gap for _, gap in positive]), 1)[0])
    else:
        slope = float("nan")
    logger.info("euler ladder slope %.3f against %d reference steps", slope, reference_steps)
    return LadderResult(ladder, gaps, slope, gaps[-1], reference_steps)


# ============================================================
# Sampling adapter for non-empirical inputs
# ============================================================

def sample_network_measure(kernel: KernelPort, lift: Lift, n: int, rho: float, seed: int, bound: Optional[float] = None) -> NestedEmpiricalMeasure:
    """Empirical approximant: sampled graph plus U-lifted initial states."""
    g = sample_graph(kernel, n, rho, seed, allow_clip=True)
    return build_nested(g, InitialCondition.from_lift(lift, n, bound))


def psi_sampled(kernel: KernelPort, lift: Lift, fields: VectorFieldPair, n: int, rho: float, seed: int, cfg: PushforwardConfig) -> PsiLimit:
    return psi_limit(sample_network_measure(kernel, lift, n, rho, seed), fields, cfg)


@dataclass(frozen=True)
class ApproximantSpread:
    seeds: List[int]
    distances: np.ndarray

    @property
    def spread(self) -> float:
        return float(self.distances.max())


def approximant_spread(
    kernel: KernelPort,
    lift: Lift,
    fields: VectorFieldPair,
    n: int,
    rho: float,
    seed: int,
    cfg: PushforwardConfig,
    count: int = 5,
) -> ApproximantSpread:
    """Pairwise path distances between Psi of ``count`` independently sampled approximants."""
    seeds = [int(s) for s in generator(seed, "approximant").integers(0, 2**63 - 1, size=count)]
    measures = [psi_sampled(kernel, lift, fields, n, rho, s, cfg).measure for s in seeds]
    distances = np.zeros((count, count))
    for a in range(count):
        for b in range(a + 1, count):
            distances[a, b] = distances[b, a] = path_wasserstein(measures[a], measures[b])
    logger.info("approximant spread %.3e over %d seeds", distances.max(), count)
    return ApproximantSpread(seeds, distances)
