"""Quenched directed inhomogeneous Erdos-Renyi graphs on evenly spaced circle positions."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from ..contracts import KernelPort
from .circle import TWO_PI, canonical_angle
from .streams import generator

logger = logging.getLogger(__name__)

TEXT_HEADER = "# ldpnet graph v1"


def positions(n: int) -> np.ndarray:
    """Return the node positions 2 pi j / (2n+1) for j = -n..n, ordered by j.

    Args:
        n (int): Half-size of the index set I_n = {-n..n}.

    Returns:
        np.ndarray: 2n+1 strictly increasing angles in (-pi, pi].

    Raises:
        ValueError: If n is negative.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    labels = np.arange(-n, n + 1)
    return canonical_angle(TWO_PI * labels / (2 * n + 1))


@dataclass(frozen=True, eq=False)
class GraphSample:
    """One sampled graph; ``neighbors[i]`` is the sorted in-neighbourhood of node index i.

    Node index i corresponds to the label j = i - n.
    """

    n: int
    rho: float
    seed: int
    kernel_id: str
    neighbors: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.neighbors) != self.size:
            raise ValueError("graph must list one neighbourhood per node")
        for i, nbrs in enumerate(self.neighbors):
            if not np.all(np.diff(nbrs) > 0):
                raise ValueError(f"neighbourhood of node {i - self.n} must be sorted")
            if nbrs.size and (nbrs[0] < 0 or nbrs[-1] >= self.size):
                raise ValueError(f"neighbourhood of node {i - self.n} references unknown nodes")
            if not np.any(nbrs == i):
                raise ValueError(f"node {i - self.n} is missing its self-loop")

    @property
    def size(self) -> int:
        return 2 * self.n + 1

    @cached_property
    def positions(self) -> np.ndarray:
        return positions(self.n)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([nbrs.size for nbrs in self.neighbors], dtype=np.int64)

    @cached_property
    def edges(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flattened adjacency (targets, sources, segment offsets) in sorted neighbour order."""
        targets = np.repeat(np.arange(self.size), self.degrees)
        sources = np.concatenate(self.neighbors)
        offsets = np.concatenate(([0], np.cumsum(self.degrees)[:-1]))
        return targets, sources, offsets

    def has_self_loops(self) -> bool:
        return all(np.any(nbrs == i) for i, nbrs in enumerate(self.neighbors))

    def permuted(self, permutation: Sequence[int]) -> "GraphSample":
        """Relabel nodes: new node index ``permutation[i]`` takes the role of old node i.

        Positions are attached to indices, so only the adjacency structure moves.
        """
        perm = np.asarray(permutation, dtype=np.int64)
        new_neighbors: List[np.ndarray] = [np.empty(0, dtype=np.int64)] * self.size
        for i, nbrs in enumerate(self.neighbors):
            new_neighbors[perm[i]] = np.sort(perm[nbrs])
        return GraphSample(self.n, self.rho, self.seed, self.kernel_id, tuple(new_neighbors))


def _sample_rows(kernel: KernelPort, n: int, rho: float, seed: int, rows: Iterable[int]) -> Dict[int, np.ndarray]:
    thetas = positions(n)
    out: Dict[int, np.ndarray] = {}
    for i in rows:
        probs = np.clip(rho * np.broadcast_to(kernel.evaluate(thetas[i], thetas), thetas.shape), 0.0, 1.0)
        probs[i] = 1.0
        draws = generator(seed, "graph", i).random(thetas.size)
        out[i] = np.flatnonzero(draws < probs).astype(np.int64)
    return out


def sample_graph(kernel: KernelPort, n: int, rho: float, seed: int, allow_clip: bool = False, threads: int = 1) -> GraphSample:
    """Sample the directed graph with w^{jj} = 1 and P(w^{ij} = 1) = min(1, rho C(theta^i, theta^j)).

    Every row uses its own substream keyed by (seed, node index), so the result is
    bit-identical for any number of worker threads.

    Args:
        kernel (KernelPort): Connection kernel.
        n (int): Half-size of the index set.
        rho (float): Sparsity in (0, 1].
        seed (int): Master seed.
        allow_clip (bool): Accept rho * C_ub > 1 by clipping probabilities at 1.
        threads (int): Worker threads for row sampling.

    Returns:
        GraphSample: The sampled graph.

    Raises:
        ValueError: If rho is outside (0, 1] or probabilities overflow without clipping.
    """
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho must lie in (0, 1]")
    if rho * kernel.upper_bound > 1.0:
        if not allow_clip:
            raise ValueError("probability overflow")
        logger.warning("edge probabilities clipped at 1 (rho * C_ub = %.4g)", rho * kernel.upper_bound)
    size = 2 * n + 1
    if threads <= 1 or size < 64:
        rows = _sample_rows(kernel, n, rho, seed, range(size))
    else:
        chunks = np.array_split(np.arange(size), threads)
        rows = {}
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(lambda c: _sample_rows(kernel, n, rho, seed, c.tolist()), chunks):
                rows.update(part)
    kernel_id = getattr(kernel, "kernel_id", "kernel")
    return GraphSample(n, float(rho), int(seed), kernel_id, tuple(rows[i] for i in range(size)))


@dataclass(frozen=True)
class DegreeProfile:
    minimum: int
    maximum: int
    mean: float
    histogram: Dict[int, int]


def degree_profile(g: GraphSample) -> DegreeProfile:
    """Summarize the degrees kappa^j_n.

    Args:
        g (GraphSample): Sampled graph.

    Returns:
        DegreeProfile: Min, max, mean and histogram (degree -> node count).
    """
    degrees = g.degrees
    counts = np.bincount(degrees)
    histogram = {int(k): int(c) for k, c in enumerate(counts) if c}
    return DegreeProfile(int(degrees.min()), int(degrees.max()), float(degrees.mean()), histogram)


def to_text(g: GraphSample) -> str:
    """Serialize a graph to the line-oriented text format (labels j in -n..n)."""
    lines = [TEXT_HEADER, f"n={g.n} rho={g.rho!r} seed={g.seed} kernel={g.kernel_id}"]
    for i, nbrs in enumerate(g.neighbors):
        lines.append(f"{i - g.n}: " + " ".join(str(int(k) - g.n) for k in nbrs))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> GraphSample:
    """Parse the text format written by ``to_text``.

    Raises:
        ValueError: If the header or a node line is malformed.
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0].strip() != TEXT_HEADER:
        raise ValueError("not an ldpnet graph document")
    header = dict(item.split("=", 1) for item in lines[1].split())
    n = int(header["n"])
    neighbors: List[np.ndarray] = []
    for expected, line in zip(range(-n, n + 1), lines[2:]):
        label, _, rest = line.partition(":")
        if int(label) != expected:
            raise ValueError(f"expected node {expected}, found {label}")
        neighbors.append(np.array([int(k) + n for k in rest.split()], dtype=np.int64))
    return GraphSample(n, float(header["rho"]), int(header["seed"]), header["kernel"], tuple(neighbors))


@dataclass(frozen=True)
class RegimeCheck:
    rho_to_zero: bool
    mean_degree_to_infinity: bool

    @property
    def ok(self) -> bool:
        return self.rho_to_zero and self.mean_degree_to_infinity


@dataclass(frozen=True)
class SparsitySchedule:
    """rho_n = min(1, scale * (2n+1)^(-exponent)); the sparse regime needs 0 < exponent < 1."""

    scale: float = 1.0
    exponent: float = 0.5
    name: str = "power"

    def rho(self, n: int) -> float:
        return min(1.0, self.scale * (2 * n + 1) ** (-self.exponent))

    def speed(self, n: int) -> float:
        """Node-level speed rho_n (2n+1)."""
        return self.rho(n) * (2 * n + 1)

    def check_regime(self, n_grid: Sequence[int]) -> RegimeCheck:
        """Check rho_n decreasing and (2n+1) rho_n increasing between the grid endpoints."""
        first, last = min(n_grid), max(n_grid)
        check = RegimeCheck(
            rho_to_zero=self.rho(last) < self.rho(first) and 0.0 < self.exponent,
            mean_degree_to_infinity=self.speed(last) > self.speed(first) and self.exponent < 1.0,
        )
        if not check.ok:
            logger.warning("schedule %s(scale=%g, exponent=%g) leaves the sparse regime", self.name, self.scale, self.exponent)
        return check


def make_schedule(spec: Dict) -> SparsitySchedule:
    name = spec.get("name", "power")
    if name != "power":
        raise KeyError(f"unknown sparsity schedule '{name}'")
    return SparsitySchedule(float(spec.get("scale", 1.0)), float(spec.get("exponent", 0.5)), name)


def speeds(rho: float, n: int) -> Tuple[float, float]:
    """Return the node-level and measure-level speeds rho (2n+1) and rho (2n+1)^2."""
    size = 2 * n + 1
    return rho * size, rho * math.pow(size, 2)
