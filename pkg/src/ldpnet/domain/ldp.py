"""Exact and Monte Carlo probabilities of one node's row events, Chernoff bounds and LDP scans."""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp
from scipy.stats import norm

from ..contracts import KernelPort
from ..errors import CapExceededError
from .circle import in_arc, kernel_mass
from .graph import SparsitySchedule, positions, speeds
from .rates import arc_event_rate, mass_tail_rate
from .streams import generator

logger = logging.getLogger(__name__)

DP_MAX_N = 20_000
ENUMERATION_CAP = 2_000_000
MC_CHUNK = 10_000
BRUTE_FORCE_MAX_N = 6
RESCALE_BELOW = 1e-200

DEGREE_TAIL = "degree_tail"
ARC_OCCUPANCY = "arc_occupancy"


@dataclass(frozen=True)
class EventSpec:
    """Event on the in-row of the node nearest ``target_angle``.

    ``degree_tail``: count <= mass * rho (2n+1), or count <= max_count when given.
    ``arc_occupancy``: N_i / sum N >= thresholds[i] for every arc (start, end].
    """

    kind: str = DEGREE_TAIL
    mass: Optional[float] = None
    max_count: Optional[int] = None
    arcs: Tuple[Tuple[float, float], ...] = ()
    thresholds: Tuple[float, ...] = ()
    target_angle: float = 0.0

    def __post_init__(self):
        if self.kind == DEGREE_TAIL:
            if (self.mass is None) == (self.max_count is None):
                raise ValueError("degree-tail event needs exactly one of mass and max_count")
            if (self.mass is not None and self.mass < 0.0) or (self.max_count is not None and self.max_count < 0):
                raise ValueError("degree-tail threshold must be nonnegative")
        elif self.kind == ARC_OCCUPANCY:
            if len(self.arcs) != len(self.thresholds) or not self.arcs:
                raise ValueError("arc-occupancy event needs one threshold per arc")
            if any(t < 0.0 for t in self.thresholds) or sum(self.thresholds) >= 1.0:
                raise ValueError("infeasible thresholds: need lambda_i >= 0 and sum < 1")
        else:
            raise ValueError(f"unknown event kind '{self.kind}'")

    def count_limit(self, n: int, rho: float) -> int:
        """Largest admissible degree of a degree-tail event."""
        if self.max_count is not None:
            return int(self.max_count)
        node_speed, _ = speeds(rho, n)
        return math.floor(self.mass * node_speed * (1.0 + 1e-12))

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "mass": self.mass,
            "max_count": self.max_count,
            "arcs": [list(a) for a in self.arcs],
            "thresholds": list(self.thresholds),
            "target_angle": self.target_angle,
        }


def target_label(n: int, angle: float) -> int:
    """Label j in -n..n whose position is circularly closest to ``angle``."""
    offsets = np.abs(np.angle(np.exp(1j * (positions(n) - angle))))
    return int(np.argmin(offsets)) - n


def row_probabilities(kernel: KernelPort, n: int, rho: float, j: int) -> np.ndarray:
    """Edge probabilities min(1, rho C(theta^j, theta^k)) of node j's row, self-loop forced to 1."""
    thetas = positions(n)
    probs = np.clip(rho * np.broadcast_to(kernel.evaluate(thetas[j + n], thetas), thetas.shape), 0.0, 1.0)
    probs[j + n] = 1.0
    return probs


def poisson_binomial(probs: np.ndarray, max_count: Optional[int] = None) -> np.ndarray:
    """Log-pmf of a sum of independent Bernoulli(p_k) variables.

    The convolution recursion carries a TwoSum error term per entry and rescales the
    retained prefix when it underflows; ``max_count`` truncates the support to
    0..max_count.

    Args:
        probs (np.ndarray): Success probabilities in [0, 1].
        max_count (Optional[int]): Largest count of interest.

    Returns:
        np.ndarray: log P(S = k) for k = 0..K with K = max_count or the number of
            positive probabilities; impossible counts hold -inf.
    """
    probs = np.asarray(probs, dtype=float)
    certain = int(np.count_nonzero(probs >= 1.0))
    active = probs[(probs > 0.0) & (probs < 1.0)]
    length = certain + active.size + 1 if max_count is None else max_count + 1
    out = np.full(length, -np.inf)
    budget = length - 1 - certain
    if budget < 0:
        return out
    size = min(active.size, budget) + 1
    hi = np.zeros(size)
    lo = np.zeros(size)
    hi[0] = 1.0
    log_scale = 0.0
    filled = 1
    for p in active:
        top = min(filled + 1, size)
        keep = hi[:top] * (1.0 - p)
        move = np.zeros(top)
        move[1:] = hi[: top - 1] * p
        total = keep + move
        virtual = total - keep
        error = (keep - (total - virtual)) + (move - virtual)
        carry = lo[:top] * (1.0 - p)
        carry[1:] += lo[: top - 1] * p
        hi[:top] = total
        lo[:top] = carry + error
        filled = top
        peak = hi[:top].max()
        if peak < RESCALE_BELOW:
            hi[:top] /= peak
            lo[:top] /= peak
            log_scale += math.log(peak)
    with np.errstate(divide="ignore"):
        out[certain : certain + size] = np.log(hi + lo) + log_scale
    return out


def _check_dp_size(n: int) -> None:
    if n > DP_MAX_N:
        raise CapExceededError(f"DP size cap: n = {n} > {DP_MAX_N}")


def _arc_groups(n: int, arcs: Sequence[Tuple[float, float]]) -> List[np.ndarray]:
    thetas = positions(n)
    return [np.flatnonzero(in_arc(thetas, a, b)) for a, b in arcs]


def arc_count_law(kernel: KernelPort, n: int, rho: float, j: int, arcs: Sequence[Tuple[float, float]]) -> List[np.ndarray]:
    """Exact laws of N_i = #{k in F_i : w^{jk} = 1} for arcs partitioning the circle.

    Args:
        kernel (KernelPort): Connection kernel.
        n (int): Half-size of the index set.
        rho (float): Sparsity.
        j (int): Node label in -n..n.
        arcs (Sequence[Tuple[float, float]]): Arcs (start, end] covering each position once.

    Returns:
        List[np.ndarray]: One pmf per arc indexed by count; the arcs' counts are independent.

    Raises:
        ValueError: If the arcs do not partition the node positions.
        CapExceededError: If n exceeds the DP cap.
    """
    _check_dp_size(n)
    groups = _arc_groups(n, arcs)
    cover = np.zeros(2 * n + 1, dtype=int)
    for g in groups:
        cover[g] += 1
    if np.any(cover != 1):
        raise ValueError("arcs must partition the circle")
    probs = row_probabilities(kernel, n, rho, j)
    return [np.exp(poisson_binomial(probs[g])) for g in groups]


def brute_force_row_law(kernel: KernelPort, n: int, rho: float, j: int, arcs: Sequence[Tuple[float, float]]) -> List[np.ndarray]:
    """Per-arc count laws by enumerating all 2^{2n} rows; a test oracle for n <= 6."""
    if n > BRUTE_FORCE_MAX_N:
        raise CapExceededError(f"brute-force enumeration limited to n <= {BRUTE_FORCE_MAX_N}")
    probs = row_probabilities(kernel, n, rho, j)
    groups = _arc_groups(n, arcs)
    laws = [np.zeros(g.size + 1) for g in groups]
    others = [k for k in range(2 * n + 1) if k != j + n]
    for bits in itertools.product((0, 1), repeat=len(others)):
        row = np.zeros(2 * n + 1, dtype=int)
        row[j + n] = 1
        row[others] = bits
        weight = float(np.prod(np.where(row == 1, probs, 1.0 - probs)))
        for law, g in zip(laws, groups):
            law[row[g].sum()] += weight
    return laws


@dataclass(frozen=True)
class EventProbability:
    logp: float

    @property
    def probability(self) -> float:
        return math.exp(self.logp)


def exact_event_prob(spec: EventSpec, kernel: KernelPort, n: int, rho: float) -> EventProbability:
    """Exact probability of a row event from the Poisson-binomial laws.

    Raises:
        CapExceededError: If the DP or the joint enumeration of arc counts is too large.
    """
    _check_dp_size(n)
    j = target_label(n, spec.target_angle)
    probs = row_probabilities(kernel, n, rho, j)
    if spec.kind == DEGREE_TAIL:
        limit = spec.count_limit(n, rho)
        if limit >= probs.size:
            return EventProbability(0.0)
        return EventProbability(float(min(0.0, logsumexp(poisson_binomial(probs, limit)))))

    if all(t == 0.0 for t in spec.thresholds):
        return EventProbability(0.0)
    groups = _arc_groups(n, spec.arcs)
    rest = np.ones(probs.size, dtype=bool)
    for g in groups:
        rest[g] = False
    groups.append(np.flatnonzero(rest))
    laws = [poisson_binomial(probs[g]) for g in groups]
    support = math.prod(law.size for law in laws)
    if support > ENUMERATION_CAP:
        raise CapExceededError(f"enumeration cap: joint support {support} > {ENUMERATION_CAP}")

    q = len(laws)
    shapes = [[-1 if axis == i else 1 for axis in range(q)] for i in range(q)]
    counts = [np.arange(law.size).reshape(shape) for law, shape in zip(laws, shapes)]
    log_joint = sum(law.reshape(shape) for law, shape in zip(laws, shapes))
    total = sum(counts)
    event = np.ones(log_joint.shape, dtype=bool)
    for i, lam in enumerate(spec.thresholds):
        event &= counts[i] >= lam * total
    if not event.any():
        return EventProbability(-math.inf)
    return EventProbability(float(min(0.0, logsumexp(log_joint[event]))))


def exact_upper_tail(kernel: KernelPort, n: int, rho: float, j: int, m_thr: float) -> float:
    """P(count > m_thr rho (2n+1)) for node label j."""
    _check_dp_size(n)
    limit = math.floor(m_thr * speeds(rho, n)[0] * (1.0 + 1e-12))
    log_pmf = poisson_binomial(row_probabilities(kernel, n, rho, j))
    if limit + 1 >= log_pmf.size:
        return 0.0
    return float(min(1.0, math.exp(logsumexp(log_pmf[limit + 1 :]))))


@dataclass(frozen=True)
class MonteCarloEstimate:
    hits: int
    trials: int
    estimate: float
    low: float
    high: float

    def covers(self, p: float) -> bool:
        return self.low <= p <= self.high


def wilson_interval(hits: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    z = float(norm.ppf(0.5 + confidence / 2.0))
    phat = hits / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _event_hits(spec: EventSpec, draws: np.ndarray, n: int, rho: float) -> int:
    if spec.kind == DEGREE_TAIL:
        return int(np.count_nonzero(draws.sum(axis=1) <= spec.count_limit(n, rho)))
    total = draws.sum(axis=1)
    event = np.ones(draws.shape[0], dtype=bool)
    for g, lam in zip(_arc_groups(n, spec.arcs), spec.thresholds):
        event &= draws[:, g].sum(axis=1) >= lam * total
    return int(np.count_nonzero(event))


def mc_event_prob(
    spec: EventSpec,
    kernel: KernelPort,
    n: int,
    rho: float,
    trials: int,
    seed: int,
    threads: int = 1,
) -> MonteCarloEstimate:
    """Monte Carlo estimate from independent resamples of the target node's row.

    Trials run in fixed chunks, each on its own ``mc`` substream, so the estimate does
    not depend on the number of threads.

    Raises:
        ValueError: If trials < 1.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    probs = row_probabilities(kernel, n, rho, target_label(n, spec.target_angle))

    def run_chunk(chunk: int) -> int:
        size = min(MC_CHUNK, trials - chunk * MC_CHUNK)
        draws = generator(seed, "mc", chunk).random((size, probs.size)) < probs
        return _event_hits(spec, draws, n, rho)

    chunks = range(math.ceil(trials / MC_CHUNK))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(run_chunk, chunks))
    else:
        hits = sum(run_chunk(c) for c in chunks)
    low, high = wilson_interval(hits, trials)
    return MonteCarloEstimate(hits, trials, hits / trials, low, high)


@dataclass(frozen=True)
class ChernoffBound:
    a: float
    log_bound: float

    @property
    def bound(self) -> float:
        return math.exp(self.log_bound)


def chernoff_bound(kernel: KernelPort, n: int, rho: float, j: int, a: float, m_thr: float) -> ChernoffBound:
    """exp(-a rho (2n+1) m_thr) E[e^{a count}] bounding P(count > m_thr rho (2n+1)).

    The self-loop contributes its exact factor e^a.

    Raises:
        ValueError: If a <= 0.
    """
    if a <= 0.0:
        raise ValueError("chernoff exponent a must be positive")
    probs = row_probabilities(kernel, n, rho, j)
    others = np.delete(probs, j + n)
    log_mgf = a + float(np.sum(np.log1p(others * math.expm1(a))))
    return ChernoffBound(a, -a * speeds(rho, n)[0] * m_thr + log_mgf)


def optimal_chernoff(kernel: KernelPort, n: int, rho: float, j: int, m_thr: float, a_max: float = 50.0) -> ChernoffBound:
    """Chernoff bound minimized over a in (0, a_max]."""
    result = minimize_scalar(
        lambda a: chernoff_bound(kernel, n, rho, j, a, m_thr).log_bound,
        bounds=(1e-8, a_max),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return chernoff_bound(kernel, n, rho, j, float(result.x), m_thr)


# ============================================================
# Scans
# ============================================================

@dataclass(frozen=True)
class ScanRow:
    n: int
    rho: float
    speed: float
    measure_speed: float
    logp: float
    normalized: float
    predicted: float
    gap: float
    method: str
    flagged: bool = False


@dataclass(frozen=True)
class ScanResult:
    spec: EventSpec
    kernel_id: str
    rows: List[ScanRow] = field(default_factory=list)

    def gaps_decreasing(self) -> bool:
        gaps = [abs(r.gap) for r in self.rows]
        return all(b < a for a, b in zip(gaps, gaps[1:]))


def predicted_limit(spec: EventSpec, kernel: KernelPort, bins: int = 1024, seed: int = 0) -> float:
    """Predicted limit -inf I of the normalized log-probability."""
    if spec.kind == DEGREE_TAIL:
        if spec.max_count is not None or spec.mass == 0.0:
            return -kernel_mass(kernel, spec.target_angle)
        return -mass_tail_rate(kernel, spec.target_angle, spec.mass)
    return -arc_event_rate(kernel, spec.target_angle, spec.arcs, spec.thresholds, bins=bins, seed=seed).value


def _scan_row(spec, kernel, n, rho, predicted, mode, trials, seed, threads) -> ScanRow:
    node_speed, measure_speed = speeds(rho, n)
    method = "exact"
    if mode == "mc":
        method = "mc"
    else:
        try:
            logp = exact_event_prob(spec, kernel, n, rho).logp
        except CapExceededError:
            if mode != "auto":
                raise
            method = "mc"
    if method == "mc":
        estimate = mc_event_prob(spec, kernel, n, rho, trials, seed, threads)
        logp = math.log(estimate.estimate) if estimate.hits else -math.inf
    flagged = math.isinf(logp)
    if flagged:
        logger.warning("event has probability zero at n=%d; row flagged", n)
    normalized = logp / node_speed
    gap = normalized - predicted if not flagged else math.nan
    logger.info("scan n=%d rho=%.4g normalized=%.6f predicted=%.6f", n, rho, normalized, predicted)
    return ScanRow(n, rho, node_speed, measure_speed, logp, normalized, predicted, gap, method, flagged)


def ldp_scan(
    spec: EventSpec,
    kernel: KernelPort,
    schedule: SparsitySchedule,
    n_grid: Sequence[int],
    mode: str = "exact",
    trials: int = 100_000,
    seed: int = 0,
    threads: int = 1,
    bins: int = 1024,
) -> ScanResult:
    """Normalized log-probabilities (rho_n (2n+1))^{-1} log P along an increasing n-grid.

    Args:
        spec (EventSpec): Row event.
        kernel (KernelPort): Connection kernel.
        schedule (SparsitySchedule): rho_n.
        n_grid (Sequence[int]): Strictly increasing sizes.
        mode (str): ``exact``, ``mc`` or ``auto`` (exact unless a cap is hit).
        trials (int): Monte Carlo trials per row.
        seed (int): Master seed.
        threads (int): Rows evaluated in parallel.
        bins (int): Quadrature bins for predictions.

    Returns:
        ScanResult: One row per n with the predicted limit and the gap.

    Raises:
        ValueError: If the grid or its speeds are not strictly increasing.
    """
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    node_speeds = [schedule.speed(n) for n in n_grid]
    if any(b <= a for a, b in zip(node_speeds, node_speeds[1:])):
        raise ValueError("scan speeds must increase along the n-grid")
    schedule.check_regime(n_grid)
    predicted = predicted_limit(spec, kernel, bins, seed)

    def row(n: int) -> ScanRow:
        return _scan_row(spec, kernel, n, schedule.rho(n), predicted, mode, trials, seed, 1)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, n_grid))
    else:
        rows = [row(n) for n in n_grid]
    return ScanResult(spec, getattr(kernel, "kernel_id", "kernel"), rows)
