"""Fixed-step integration of the quenched network ODE on a sampled graph."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..errors import BlowUpError, ContractViolationError
from .fields import Lift, VectorFieldPair, lift_bound
from .graph import GraphSample, positions
from .measures import PathMeasure

logger = logging.getLogger(__name__)

SCHEMES = ("euler", "rk4")


@dataclass(frozen=True, eq=False)
class InitialCondition:
    """Per-node initial states u^j_* (row i belongs to node label i - n) with bound C_ini."""

    states: np.ndarray
    bound: float

    def __post_init__(self):
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        object.__setattr__(self, "states", states)
        if not np.all(np.isfinite(states)):
            raise ValueError("initial states must be finite")
        largest = float(np.linalg.norm(states, axis=1).max())
        if largest > self.bound + 1e-12:
            raise ValueError(f"initial state norm {largest:.6g} exceeds bound {self.bound:.6g}")

    @property
    def dimension(self) -> int:
        return int(self.states.shape[1])

    @property
    def size(self) -> int:
        return int(self.states.shape[0])

    @classmethod
    def from_lift(cls, lift: Lift, n: int, bound: Optional[float] = None) -> "InitialCondition":
        """Initial states u^j_* = U(theta^j_n) on the 2n+1 circle positions."""
        angles = positions(n)
        states = lift(angles)
        return cls(states, lift_bound(lift, angles=angles) if bound is None else float(bound))

    def has_distinct_states(self) -> bool:
        return np.unique(self.states, axis=0).shape[0] == self.size

    def permuted(self, permutation: Sequence[int]) -> "InitialCondition":
        out = np.empty_like(self.states)
        out[np.asarray(permutation, dtype=np.int64)] = self.states
        return InitialCondition(out, self.bound)


@dataclass(frozen=True, eq=False)
class TrajectoryBundle:
    """States u^j(t_s) with shape (S+1, N, d) on a uniform time grid."""

    times: np.ndarray
    states: np.ndarray
    scheme: str

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def steps(self) -> int:
        return int(self.times.size - 1)

    def terminal(self) -> np.ndarray:
        return self.states[-1]

    def csv_headers(self) -> List[str]:
        return ["node", "step", "time"] + [f"x{p}" for p in range(self.states.shape[2])]

    def csv_rows(self, thinning: int = 1) -> List[list]:
        """Long-format rows (node label, step, time, components), every ``thinning``-th step."""
        n = (self.states.shape[1] - 1) // 2
        rows = []
        for s in range(0, self.steps + 1, max(1, thinning)):
            for i, state in enumerate(self.states[s]):
                rows.append([i - n, s, repr(float(self.times[s]))] + [repr(float(x)) for x in state])
        return rows


def _network_field(g: GraphSample, fields: VectorFieldPair):
    targets, sources, offsets = g.edges
    degrees = g.degrees[:, None].astype(float)

    def rhs(u: np.ndarray) -> np.ndarray:
        contributions = fields.coupling(u[targets], u[sources])
        # reduceat sums each node's sorted neighbour block in a fixed order
        coupling = np.add.reduceat(contributions, offsets, axis=0) / degrees
        return fields.drift(u) + coupling

    return rhs


def simulate(
    g: GraphSample,
    init: InitialCondition,
    fields: VectorFieldPair,
    horizon: float,
    steps: int,
    scheme: str = "euler",
    record_stride: int = 1,
) -> TrajectoryBundle:
    """Integrate du^k/dt = drift(u^k) + (1/kappa^k) sum_{j in Xi_k} coupling(u^k, u^j).

    Args:
        g (GraphSample): Quenched graph.
        init (InitialCondition): One state per node.
        fields (VectorFieldPair): Drift and coupling.
        horizon (float): Final time T > 0.
        steps (int): Number of fixed steps.
        scheme (str): ``"euler"`` or ``"rk4"``.
        record_stride (int): Keep every ``record_stride``-th state; must divide ``steps``.

    Returns:
        TrajectoryBundle: Recorded states including t = 0.

    Raises:
        ValueError: On inconsistent inputs.
        BlowUpError: If a non-finite state appears.
        ContractViolationError: If the a priori norm bound fails.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme '{scheme}'")
    if init.size != g.size:
        raise ValueError("initial condition and graph disagree on the number of nodes")
    if init.dimension != fields.dimension:
        raise ValueError("initial condition and fields disagree on the dimension")
    if steps % record_stride:
        raise ValueError("record_stride must divide steps")
    if g.degrees.min() == 0:
        raise ValueError("disconnected vertex")
    if not init.has_distinct_states():
        logger.warning("initial states are not pairwise distinct")

    rhs = _network_field(g, fields)
    dt = horizon / steps
    u = init.states.copy()
    recorded = [u.copy()]
    for s in range(1, steps + 1):
        if scheme == "euler":
            u = u + dt * rhs(u)
        else:
            k1 = rhs(u)
            k2 = rhs(u + 0.5 * dt * k1)
            k3 = rhs(u + 0.5 * dt * k2)
            k4 = rhs(u + dt * k3)
            u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(u)):
            raise BlowUpError(f"blow-up at step {s}")
        if s % record_stride == 0:
            recorded.append(u.copy())

    times = np.linspace(0.0, horizon, steps // record_stride + 1)
    states = np.stack(recorded)
    _check_a_priori_bound(times, states, init.bound, fields)
    tag = f"euler-{steps}" if scheme == "euler" else "reference"
    logger.debug("simulated %d nodes for %d %s steps", g.size, steps, scheme)
    return TrajectoryBundle(times, states, tag)


def _check_a_priori_bound(times: np.ndarray, states: np.ndarray, bound: float, fields: VectorFieldPair) -> None:
    norms = np.linalg.norm(states, axis=2).max(axis=1)
    limit = bound + times * fields.speed_bound + 1e-9
    bad = np.flatnonzero(norms > limit)
    if bad.size:
        s = int(bad[0])
        raise ContractViolationError(f"a priori bound violated at t={times[s]:.6g}: {norms[s]:.6g} > {limit[s]:.6g}")


def path_empirical(traj: TrajectoryBundle) -> PathMeasure:
    """Uniform empirical measure over the 2n+1 trajectories of a bundle."""
    paths = np.transpose(traj.states, (1, 0, 2))
    weights = np.full(paths.shape[0], 1.0 / paths.shape[0])
    return PathMeasure(traj.times, paths, weights)


@dataclass(frozen=True)
class EulerOrderResult:
    steps: List[int]
    errors: List[float]
    ratios: List[float]
    slope: float


def euler_order(
    g: GraphSample,
    init: InitialCondition,
    fields: VectorFieldPair,
    horizon: float,
    ladder: Sequence[int],
    refinement: int = 64,
) -> EulerOrderResult:
    """Sup-norm Euler error against an rk4 reference for a doubling ladder of step counts.

    The reference runs ``refinement`` times the largest Euler step count and is
    compared on each Euler grid.

    Args:
        g (GraphSample): Quenched graph.
        init (InitialCondition): Initial states.
        fields (VectorFieldPair): Drift and coupling.
        horizon (float): Final time.
        ladder (Sequence[int]): Increasing step counts, each dividing the largest.
        refinement (int): Reference step multiplier.

    Returns:
        EulerOrderResult: Errors, successive ratios and log-log slope.
    """
    ladder = sorted(int(m) for m in ladder)
    finest = ladder[-1]
    if any(finest % m for m in ladder):
        raise ValueError("every ladder entry must divide the largest")
    reference = simulate(g, init, fields, horizon, refinement * finest, "rk4", record_stride=refinement)
    errors = []
    for m in ladder:
        euler = simulate(g, init, fields, horizon, m, "euler")
        diff = euler.states - reference.states[:: finest // m]
        errors.append(float(np.linalg.norm(diff, axis=2).max()))
    ratios = [errors[i] / errors[i + 1] for i in range(len(errors) - 1)]
    slope = float(np.polyfit(np.log(ladder), np.log(errors), 1)[0]) if len(ladder) > 1 else float("nan")
    logger.info("euler errors %s, slope %.3f", ["%.3e" % e for e in errors], slope)
    return EulerOrderResult(ladder, errors, ratios, slope)
