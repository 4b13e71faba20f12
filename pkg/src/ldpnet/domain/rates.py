"""Rate functions of the degree and neighbourhood large deviations on the quadrature grid.

Every integral (1/2 pi) int ... d theta is a midpoint mean over the bins of the density
or test function being evaluated, so all quantities share one discretization.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import expm1, xlogy

from ..contracts import KernelPort
from .circle import CircleDensity, CircleGrid, GridFunction, MassDensity, circle_mean, in_arc, kernel_mass, validate_density
from .streams import generator

logger = logging.getLogger(__name__)

H_FLOOR = 1e-300
EXP_LIMIT = math.log(np.finfo(float).max)
SCALE_RANGE = (1e-6, 1e3)
MULTISTART = 20
MAX_ITERATIONS = 10_000


class NoDensity:
    """Tag for a node measure without a density; I_alpha reduces to the kernel mass."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NO_DENSITY"


NO_DENSITY = NoDensity()


@dataclass(frozen=True)
class RateValue:
    value: float
    mass_term: float
    exponential_term: float
    degenerate: bool = False


def _kernel_row(kernel: KernelPort, alpha: float, bins: int) -> np.ndarray:
    mids = CircleGrid(bins).midpoints
    return np.broadcast_to(kernel.evaluate(alpha, mids), (bins,)).astype(float)


def _require_nonnegative(d: MassDensity) -> np.ndarray:
    diagnostics = validate_density(d)
    if diagnostics.negative_bins:
        raise ValueError(f"negative density on {len(diagnostics.negative_bins)} bins")
    return d.values


def _entropy_mean(values: np.ndarray, row: np.ndarray) -> float:
    """(1/2 pi) int v log(v / C), with 0 log 0 = 0."""
    with np.errstate(divide="ignore"):
        return circle_mean(xlogy(values, values) - xlogy(values, row))


def rate_node(kernel: KernelPort, alpha: float, mu: Union[CircleDensity, NoDensity]) -> RateValue:
    """I_alpha(mu) = c(alpha) - exp(-(1/2 pi) int zeta log(zeta / C(alpha, .))).

    Args:
        kernel (KernelPort): Connection kernel.
        alpha (float): Node angle.
        mu (CircleDensity | NoDensity): Normalized grid density or the no-density tag.

    Returns:
        RateValue: Value with its mass and exponential terms.

    Raises:
        ValueError: If the density has negative bins or is not normalized.
    """
    if isinstance(mu, NoDensity):
        mass = kernel_mass(kernel, alpha)
        return RateValue(mass, mass, 0.0, degenerate=True)
    values = _require_nonnegative(mu)
    if abs(circle_mean(values) - 1.0) > 1e-9:
        raise ValueError("density is not normalized")
    row = _kernel_row(kernel, alpha, values.size)
    mass = circle_mean(row)
    exponential = math.exp(-_entropy_mean(values, row))
    return RateValue(mass - exponential, mass, exponential)


@dataclass(frozen=True, eq=False)
class PopulationMeasure:
    """Atoms (theta_j, density_j or NO_DENSITY) with probability weights."""

    angles: Tuple[float, ...]
    densities: Tuple[Union[CircleDensity, NoDensity], ...]
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", weights)
        if not len(self.angles) == len(self.densities) == weights.size:
            raise ValueError("population measure needs one density and one weight per atom")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("population weights must sum to one")


def rate_population(kernel: KernelPort, pm: PopulationMeasure) -> float:
    """E^mu[I_theta(alpha)] over the population atoms."""
    values = [rate_node(kernel, theta, density).value for theta, density in zip(pm.angles, pm.densities)]
    return float(np.dot(pm.weights, values))


def lift_population(pm: PopulationMeasure, lift) -> Tuple[np.ndarray, np.ndarray]:
    """Lifted atom locations U(theta_j) with their weights, for export."""
    return lift(np.asarray(pm.angles, dtype=float)), pm.weights.copy()


def rate_plus(kernel: KernelPort, alpha: float, gamma: MassDensity) -> float:
    """(1/2 pi) int {gamma log(gamma / C) - gamma + C} on the positive-measure space."""
    values = _require_nonnegative(gamma)
    row = _kernel_row(kernel, alpha, values.size)
    return _entropy_mean(values, row) - circle_mean(values) + circle_mean(row)


def lmgf(kernel: KernelPort, alpha: float, h: GridFunction) -> float:
    """(1/2 pi) int C(alpha, beta) (e^{h(beta)} - 1) d beta.

    Raises:
        OverflowError: If e^h overflows; the message reports max h.
    """
    top = float(np.max(h.values))
    if top > EXP_LIMIT:
        raise OverflowError(f"lmgf overflow: max h = {top!r}")
    row = _kernel_row(kernel, alpha, h.values.size)
    return circle_mean(row * expm1(h.values))


def legendre_gap(kernel: KernelPort, alpha: float, gamma: MassDensity, h: GridFunction) -> float:
    """Pairing E^nu[h(theta) w] - Lambda(alpha, h); bounded above by rate_plus(gamma)."""
    values = _require_nonnegative(gamma)
    if values.size != h.values.size:
        raise ValueError("density and test function live on different grids")
    return circle_mean(values * h.values) - lmgf(kernel, alpha, h)


def optimal_h(kernel: KernelPort, alpha: float, gamma: MassDensity) -> GridFunction:
    """h* = log(gamma / C); bins with gamma = 0 use log(1e-300 / C)."""
    values = _require_nonnegative(gamma)
    row = _kernel_row(kernel, alpha, values.size)
    return GridFunction(np.log(np.where(values > 0.0, values, H_FLOOR)) - np.log(row))


def scale_objective(kernel: KernelPort, alpha: float, zeta: CircleDensity):
    """Gamma(a) = (1/2 pi) int {a zeta log(a zeta / C) - a zeta + C}."""
    row = _kernel_row(kernel, alpha, zeta.values.size)

    def objective(a: float) -> float:
        scaled = a * zeta.values
        return _entropy_mean(scaled, row) - circle_mean(scaled) + circle_mean(row)

    return objective


@dataclass(frozen=True)
class ScaleResult:
    a_star: float
    value: float
    numeric_a: float


def optimal_scale(kernel: KernelPort, alpha: float, zeta: CircleDensity) -> ScaleResult:
    """Closed-form minimizer a_* = exp(-(1/2 pi) int zeta log(zeta / C)) and a golden-section check.

    Returns:
        ScaleResult: a_*, Gamma(a_*) and the numerical argmin over [1e-6, 1e3].
    """
    values = _require_nonnegative(zeta)
    row = _kernel_row(kernel, alpha, values.size)
    a_star = math.exp(-_entropy_mean(values, row))
    if a_star == 0.0:
        # zeta charges bins where C vanishes: Gamma is infinite for every a > 0
        return ScaleResult(0.0, circle_mean(row), 0.0)
    objective = scale_objective(kernel, alpha, zeta)

    grid = np.logspace(math.log10(SCALE_RANGE[0]), math.log10(SCALE_RANGE[1]), 361)
    samples = np.array([objective(a) for a in grid])
    best = int(np.clip(np.argmin(samples), 1, grid.size - 2))
    result = minimize_scalar(objective, bracket=(grid[best - 1], grid[best], grid[best + 1]), method="golden", tol=1e-9)
    numeric = float(np.clip(result.x, *SCALE_RANGE))
    logger.debug("scale argmin %.12g vs closed form %.12g", numeric, a_star)
    return ScaleResult(a_star, objective(a_star), numeric)


def mass_tail_rate(kernel: KernelPort, alpha: float, m: float) -> float:
    """Infimum of the positive-measure rate over measures with w = 1 mass at most m.

    Equals m log(m / c) - m + c for 0 < m < c, zero from m = c on, and c at m = 0.
    """
    if m < 0.0:
        raise ValueError("mass threshold must be nonnegative")
    mass = kernel_mass(kernel, alpha)
    if m >= mass:
        return 0.0
    return float(xlogy(m, m / mass) - m + mass)


def kl_bernoulli(lam: float, p: float) -> float:
    return float(xlogy(lam, lam / p) + xlogy(1.0 - lam, (1.0 - lam) / (1.0 - p)))


# ============================================================
# Constrained minimization over arc-mass events
# ============================================================

@dataclass(frozen=True, eq=False)
class ArcRateResult:
    value: float
    density: CircleDensity
    closed_form: Optional[float]
    start_values: List[float]


def _project(x: np.ndarray, groups: List[np.ndarray], thresholds: Sequence[float]) -> np.ndarray:
    """Feasibility map: raise deficient arcs to their threshold, rescale everything else."""
    x = x.copy()
    fixed = np.zeros(len(groups), dtype=bool)
    for _ in range(len(groups) + 1):
        masses = np.array([x[g].sum() for g in groups])
        deficient = ~fixed & (masses < np.asarray(thresholds) * (1.0 - 1e-14))
        if not deficient.any():
            break
        fixed |= deficient
        free = np.ones(x.size, dtype=bool)
        for i in np.flatnonzero(fixed):
            g = groups[i]
            total = x[g].sum()
            x[g] = thresholds[i] * (x[g] / total if total > 0.0 else 1.0 / g.size)
            free[g] = False
        remaining = 1.0 - sum(thresholds[i] for i in np.flatnonzero(fixed))
        free_total = x[free].sum()
        x[free] = remaining * (x[free] / free_total if free_total > 0.0 else 1.0 / free.sum())
    return x


def _kl(x: np.ndarray, q: np.ndarray) -> float:
    with np.errstate(divide="ignore"):
        return float(np.sum(xlogy(x, x) - xlogy(x, q)))


def _descend(x: np.ndarray, q: np.ndarray, groups, thresholds) -> np.ndarray:
    """Projected gradient descent on KL(x || q) in the entropy geometry of the simplex.

    Each step is the exponentiated gradient update followed by the arc feasibility map,
    with step halving on failure and at most MAX_ITERATIONS steps.
    """
    step = 0.5
    current = _kl(x, q)
    log_q = np.log(np.where(q > 0.0, q, H_FLOOR))
    for _ in range(MAX_ITERATIONS):
        log_x = np.log(np.where(x > 0.0, x, H_FLOOR))
        # exponentiated gradient step: x^(1 - step) q^step, renormalized
        trial = np.exp((1.0 - step) * log_x + step * log_q - np.max((1.0 - step) * log_x + step * log_q))
        trial = _project(trial / trial.sum(), groups, thresholds)
        value = _kl(trial, q)
        if value < current - 1e-15:
            done = current - value < 1e-13
            x, current = trial, value
            if done:
                break
        else:
            step *= 0.5
            if step < 1e-12:
                break
    return x


def arc_event_rate(
    kernel: KernelPort,
    alpha: float,
    arcs: Sequence[Tuple[float, float]],
    thresholds: Sequence[float],
    bins: int = 1024,
    seed: int = 0,
    starts: int = MULTISTART,
) -> ArcRateResult:
    """Minimize I_alpha over grid densities with (1/2 pi) int_{F_i} zeta >= lambda_i.

    Writing x for the bin masses and q = C / sum(C), I_alpha = c (1 - exp(-KL(x || q))),
    so the search runs projected gradient descent on KL(x || q), with exponentiated
    gradient steps on the simplex, from ``starts`` random feasible points drawn from
    the ``multistart`` stream.

    Args:
        kernel (KernelPort): Connection kernel.
        alpha (float): Node angle.
        arcs (Sequence[Tuple[float, float]]): Disjoint arcs (start, end].
        thresholds (Sequence[float]): Lower mass bounds lambda_i with sum < 1.
        bins (int): Quadrature bins.
        seed (int): Master seed.
        starts (int): Number of random feasible starts.

    Returns:
        ArcRateResult: Best value, minimizing density, and the closed form when the kernel
            is constant and there is a single arc.

    Raises:
        ValueError: If thresholds are infeasible or arcs overlap.
    """
    thresholds = [float(t) for t in thresholds]
    if len(arcs) != len(thresholds):
        raise ValueError("one threshold per arc is required")
    if any(t < 0.0 for t in thresholds) or sum(thresholds) >= 1.0:
        raise ValueError("infeasible thresholds: need lambda_i >= 0 and sum < 1")
    grid = CircleGrid(bins)
    groups = [np.flatnonzero(grid.arc_mask(a, b)) for a, b in arcs]
    cover = np.zeros(bins, dtype=int)
    for g in groups:
        cover[g] += 1
    if np.any(cover > 1):
        raise ValueError("arcs must be disjoint")
    if any(g.size == 0 for g, t in zip(groups, thresholds) if t > 0.0):
        raise ValueError("an arc with a positive threshold holds no grid bin")

    row = _kernel_row(kernel, alpha, bins)
    q = row / row.sum()
    best: Optional[np.ndarray] = None
    start_values: List[float] = []
    for s in range(starts):
        x0 = _project(generator(seed, "multistart", s).dirichlet(np.ones(bins)), groups, thresholds)
        x = _descend(x0, q, groups, thresholds)
        start_values.append(_kl(x, q))
        if best is None or start_values[-1] < _kl(best, q):
            best = x
    density = CircleDensity(best * bins)
    value = rate_node(kernel, alpha, density).value

    closed_form = None
    if kernel.lower_bound == kernel.upper_bound and len(arcs) == 1:
        start, end = arcs[0]
        p = float(np.mod(end - start, 2.0 * math.pi) / (2.0 * math.pi)) or 1.0
        lam = thresholds[0]
        closed_form = 0.0 if lam <= p else kernel.upper_bound * -expm1(-kl_bernoulli(lam, p))
    logger.info("arc event rate at alpha=%.4f: %.6g (closed form %s)", alpha, value, closed_form)
    return ArcRateResult(value, density, closed_form, start_values)


def arc_masses(density: CircleDensity, arcs: Sequence[Tuple[float, float]]) -> List[float]:
    """(1/2 pi) int_{F_i} zeta for each arc."""
    mids = CircleGrid(density.values.size).midpoints
    return [float(np.sum(density.values[in_arc(mids, a, b)]) / density.values.size) for a, b in arcs]
