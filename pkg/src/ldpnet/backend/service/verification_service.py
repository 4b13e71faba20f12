"""Verification Service - Built-in acceptance suite run at desk scale."""

import itertools
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import i0

from ...domain.circle import CircleDensity, CircleGrid, ConstantKernel, CosineKernel, GridFunction, MassDensity, VonMisesKernel, kernel_mass
from ...domain.dynamics import InitialCondition, euler_order
from ...domain.fields import make_fields, make_lift
from ...domain.graph import SparsitySchedule, sample_graph
from ...domain.ldp import EventSpec, chernoff_bound, exact_event_prob, exact_upper_tail, ldp_scan, mc_event_prob
from ...domain.measures import AtomMeasure, DepthMeasure, nested_wasserstein, wasserstein
from ...domain.pushforward import PushforwardConfig, factorization_check
from ...domain.rates import arc_event_rate, legendre_gap, lmgf, optimal_h, optimal_scale, rate_node, rate_plus
from ...domain.streams import generator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VerificationContext:
    bins: int = 1024
    seed: int = 0
    threads: int = 1


@dataclass(frozen=True)
class CriterionResult:
    criterion_id: str
    passed: bool
    detail: str
    seconds: float = 0.0


@dataclass(frozen=True)
class Criterion:
    criterion_id: str
    description: str
    check: Callable[[VerificationContext], Tuple[bool, str]]


CRITERIA: List[Criterion] = []


def criterion(criterion_id: str, description: str):
    def register(check: Callable[[VerificationContext], Tuple[bool, str]]):
        CRITERIA.append(Criterion(criterion_id, description, check))
        return check

    return register


def _rng(ctx: VerificationContext, index: int) -> np.random.Generator:
    return generator(ctx.seed, "verify", index)


def _random_kernel(rng: np.random.Generator):
    if rng.random() < 0.5:
        return CosineKernel(base=float(rng.uniform(2.0, 4.0)), amplitude=float(rng.uniform(0.0, 1.5)))
    return VonMisesKernel(scale=float(rng.uniform(0.5, 2.0)), concentration=float(rng.uniform(0.0, 2.0)))


def _random_density(rng: np.random.Generator, bins: int) -> CircleDensity:
    theta = CircleGrid(bins).midpoints
    values = np.ones(bins)
    for k in range(1, 4):
        values += rng.uniform(0.0, 0.3) * np.cos(k * theta + rng.uniform(0.0, 2.0 * math.pi))
    return CircleDensity.normalized(values)


@criterion("rate-minimizer", "I_alpha vanishes at zeta* = C(alpha, .) / c(alpha) for 5 random kernels")
def check_rate_minimizer(ctx: VerificationContext) -> Tuple[bool, str]:
    rng = _rng(ctx, 1)
    worst = 0.0
    for _ in range(5):
        kernel = _random_kernel(rng)
        alpha = float(rng.uniform(-math.pi, math.pi))
        zeta = CircleDensity.normalized(kernel.row(alpha, CircleGrid(ctx.bins)))
        worst = max(worst, abs(rate_node(kernel, alpha, zeta).value))
    return worst <= 1e-10, f"max |I| = {worst:.3e} (tol 1e-10)"


@criterion("scalar-duality", "golden-section argmin of Gamma(a) matches a_* and Gamma(a_*) = I_alpha")
def check_scalar_duality(ctx: VerificationContext) -> Tuple[bool, str]:
    rng = _rng(ctx, 2)
    worst_a = worst_value = 0.0
    for _ in range(20):
        kernel = _random_kernel(rng)
        alpha = float(rng.uniform(-math.pi, math.pi))
        zeta = _random_density(rng, ctx.bins)
        scale = optimal_scale(kernel, alpha, zeta)
        worst_a = max(worst_a, abs(scale.numeric_a - scale.a_star))
        worst_value = max(worst_value, abs(scale.value - rate_node(kernel, alpha, zeta).value))
    passed = worst_a <= 1e-6 and worst_value <= 1e-10
    return passed, f"max |a - a*| = {worst_a:.3e} (tol 1e-6), max |Gamma(a*) - I| = {worst_value:.3e} (tol 1e-10)"


@criterion("legendre-pairing", "pairing E[h w] - Lambda(h) <= rate_plus with equality at h*")
def check_legendre_pairing(ctx: VerificationContext) -> Tuple[bool, str]:
    rng = _rng(ctx, 3)
    excess = 0.0
    equality = 0.0
    for _ in range(1000):
        kernel = _random_kernel(rng)
        alpha = float(rng.uniform(-math.pi, math.pi))
        gamma = MassDensity(rng.exponential(1.0, ctx.bins) * (rng.random(ctx.bins) > 0.1))
        h = GridFunction(rng.normal(0.0, 1.5, ctx.bins))
        upper = rate_plus(kernel, alpha, gamma)
        excess = max(excess, legendre_gap(kernel, alpha, gamma, h) - upper)
        equality = max(equality, abs(legendre_gap(kernel, alpha, gamma, optimal_h(kernel, alpha, gamma)) - upper))
    passed = excess <= 1e-10 and equality <= 1e-8
    return passed, f"max excess = {excess:.3e} (tol 1e-10), max |gap(h*) - rate| = {equality:.3e} (tol 1e-8)"


@criterion("degree-tail-scaling", "self-loop-only event: normalized log-probability near -1 at n = 1e4, gaps decreasing")
def check_degree_tail(ctx: VerificationContext) -> Tuple[bool, str]:
    spec = EventSpec(kind="degree_tail", max_count=1)
    result = ldp_scan(spec, ConstantKernel(1.0), SparsitySchedule(1.0, 0.5), [100, 1000, 10_000], mode="exact", bins=ctx.bins)
    last = result.rows[-1]
    passed = abs(last.normalized + 1.0) <= 0.01 and result.gaps_decreasing()
    values = ", ".join(f"{r.normalized:.4f}" for r in result.rows)
    return passed, f"normalized = [{values}] (tol 0.01 at n=1e4), gaps decreasing = {result.gaps_decreasing()}"


@criterion("chernoff-domination", "Chernoff bound dominates the exact upper tail on a 5 x 5 grid at n = 1e3")
def check_chernoff(ctx: VerificationContext) -> Tuple[bool, str]:
    kernel, n, rho = ConstantKernel(1.0), 1000, 0.1
    worst = math.inf
    for m_thr in (1.0, 1.2, 1.5, 2.0, 3.0):
        exact = exact_upper_tail(kernel, n, rho, 0, m_thr)
        for a in (0.25, 0.5, 1.0, 1.5, 2.0):
            bound = chernoff_bound(kernel, n, rho, 0, a, m_thr).bound
            worst = min(worst, bound - exact * (1.0 - 1e-12))
            logger.debug("chernoff a=%.2f m=%.2f bound/exact=%.3g", a, m_thr, bound / exact if exact else math.inf)
    return worst >= 0.0, f"min (bound - exact) = {worst:.3e}"


@criterion("euler-order", "Euler sup-path error halves per doubling of m (ratios in [1.7, 2.3])")
def check_euler_order(ctx: VerificationContext) -> Tuple[bool, str]:
    g = sample_graph(ConstantKernel(1.0), 200, 0.05, ctx.seed, threads=ctx.threads)
    fields = make_fields(2, {"name": "tanh", "params": {"rate": 0.5}}, {"name": "sine", "params": {"strength": 1.0}})
    init = InitialCondition.from_lift(make_lift(2, {"name": "circle"}), 200)
    # rk4 oracle on 32 * 256 = 8192 steps
    result = euler_order(g, init, fields, 1.0, [8, 16, 32, 64, 128, 256], refinement=32)
    passed = all(1.7 <= r <= 2.3 for r in result.ratios)
    return passed, "ratios = [" + ", ".join(f"{r:.3f}" for r in result.ratios) + f"], slope = {result.slope:.3f}"


@criterion("psi-factorization", "coupled Euler and the tree recursion on the unroll agree (10 graphs, <= 50 nodes, m <= 3)")
def check_factorization(ctx: VerificationContext) -> Tuple[bool, str]:
    rng = _rng(ctx, 7)
    fields = make_fields(2, {"name": "tanh", "params": {"rate": 1.0}}, {"name": "sine", "params": {"strength": 1.5}})
    lift = make_lift(2, {"name": "harmonic"})
    worst = 0.0
    for trial in range(10):
        n = int(rng.integers(3, 13))
        g = sample_graph(ConstantKernel(1.0), n, 0.2, ctx.seed + trial)
        cfg = PushforwardConfig(horizon=1.0, steps=int(rng.integers(1, 4)))
        worst = max(worst, factorization_check(g, InitialCondition.from_lift(lift, n), fields, cfg).gap)
    return worst <= 1e-9, f"max gap = {worst:.3e} (tol 1e-9)"


@criterion("mc-oracle", "Wilson 95% intervals from 1e5 trials cover the exact probability in >= 18 of 20 seeds")
def check_mc_oracle(ctx: VerificationContext) -> Tuple[bool, str]:
    kernel, n, rho = ConstantKernel(1.0), 100, 0.1
    spec = EventSpec(kind="degree_tail", mass=1.0)
    exact = exact_event_prob(spec, kernel, n, rho).probability
    covered = sum(mc_event_prob(spec, kernel, n, rho, 100_000, ctx.seed + s, ctx.threads).covers(exact) for s in range(20))
    return covered >= 18, f"{covered}/20 intervals cover p = {exact:.6f}"


@criterion("arc-event-rate", "constrained minimum matches c (1 - exp(-KL(0.5 || 0.25))) within 1e-3")
def check_arc_event(ctx: VerificationContext) -> Tuple[bool, str]:
    result = arc_event_rate(ConstantKernel(1.0), 0.0, [(-math.pi / 4, math.pi / 4)], [0.5], bins=ctx.bins, seed=ctx.seed)
    error = abs(result.value - result.closed_form)
    return error <= 1e-3, f"numeric {result.value:.6f} vs closed form {result.closed_form:.6f} (tol 1e-3)"


def _brute_force_uniform(cost: np.ndarray) -> float:
    k = cost.shape[0]
    return min(cost[np.arange(k), list(perm)].mean() for perm in itertools.permutations(range(k)))


@criterion("ot-metric", "exact OT metric axioms and nested distance vs exhaustive couplings on supports <= 6")
def check_ot_metric(ctx: VerificationContext) -> Tuple[bool, str]:
    rng = _rng(ctx, 10)
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(1, 7))
        pts = [rng.normal(size=(k, 2)) for _ in range(3)]
        p, q, r = (AtomMeasure(x, np.full(k, 1.0 / k)) for x in pts)
        pq, qp = wasserstein(p, q), wasserstein(q, p)
        brute = _brute_force_uniform(np.linalg.norm(pts[0][:, None] - pts[1][None], axis=2))
        worst = max(worst, abs(pq - brute), abs(pq - qp), wasserstein(p, p))
        worst = max(worst, pq - wasserstein(p, r) - wasserstein(r, q))

        roots, leaves = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        sides = []
        for _ in range(2):
            states = rng.normal(size=(roots * (1 + leaves), 2))
            neighbors = [np.arange(roots + i * leaves, roots + (i + 1) * leaves) for i in range(roots)]
            neighbors += [np.empty(0, dtype=np.int64)] * (roots * leaves)
            weights = np.r_[np.full(roots, 1.0 / roots), np.zeros(roots * leaves)]
            sides.append(DepthMeasure(states, neighbors, 1, weights))
        a, b = sides
        inner = np.array(
            [
                [_brute_force_uniform(np.linalg.norm(a.states[a.neighbors[i]][:, None] - b.states[b.neighbors[j]][None], axis=2)) for j in range(roots)]
                for i in range(roots)
            ]
        )
        outer = np.linalg.norm(a.states[:roots, None] - b.states[None, :roots], axis=2) + inner
        worst = max(worst, abs(nested_wasserstein(a, b) - _brute_force_uniform(outer)))
    return worst <= 1e-9, f"max discrepancy = {worst:.3e} (tol 1e-9)"


@criterion("quadrature", "midpoint quadrature reproduces I0(1) for the von Mises mass and the cosine lmgf")
def check_quadrature(ctx: VerificationContext) -> Tuple[bool, str]:
    grid = CircleGrid(ctx.bins)
    mass_error = abs(kernel_mass(VonMisesKernel(1.0, 1.0), 0.3, grid) - float(i0(1.0)))
    lmgf_error = abs(lmgf(ConstantKernel(1.0), 0.0, GridFunction(np.cos(grid.midpoints))) - (float(i0(1.0)) - 1.0))
    passed = mass_error <= 1e-8 and lmgf_error <= 1e-8
    return passed, f"M={ctx.bins}: kernel mass error {mass_error:.3e}, lmgf error {lmgf_error:.3e} (tol 1e-8)"


class VerificationService:
    """Service running the acceptance criteria and reporting pass/fail per criterion."""

    def __init__(self, context: VerificationContext):
        """Initialize the verification service.

        Args:
            context (VerificationContext): Quadrature bins, master seed and threads.
        """
        self.context = context

    @staticmethod
    def list_criteria() -> List[Tuple[str, str]]:
        return [(c.criterion_id, c.description) for c in CRITERIA]

    def run(self, selected: Optional[Sequence[str]] = None) -> List[CriterionResult]:
        """Run all (or the selected) criteria.

        Raises:
            KeyError: If a selected criterion id is unknown.
        """
        known: Dict[str, Criterion] = {c.criterion_id: c for c in CRITERIA}
        ids = list(selected) if selected else list(known)
        for criterion_id in ids:
            if criterion_id not in known:
                raise KeyError(f"unknown criterion '{criterion_id}'")
        results = []
        for criterion_id in ids:
            start = time.perf_counter()
            passed, detail = known[criterion_id].check(self.context)
            seconds = time.perf_counter() - start
            logger.info("criterion %s %s in %.2f s: %s", criterion_id, "passed" if passed else "FAILED", seconds, detail)
            results.append(CriterionResult(criterion_id, bool(passed), detail, seconds))
        return results
