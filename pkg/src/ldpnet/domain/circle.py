"""Circle geometry, connection kernels, grid densities and midpoint quadrature."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..contracts import KernelPort

logger = logging.getLogger(__name__)

DEFAULT_BINS = 1024
TWO_PI = 2.0 * math.pi


def canonical_angle(x):
    """Map angles onto the canonical representative in (-pi, pi].

    Args:
        x (float | np.ndarray): Angles in radians.

    Returns:
        float | np.ndarray: Equivalent angles in (-pi, pi].
    """
    return math.pi - np.mod(math.pi - np.asarray(x, dtype=float), TWO_PI)


@dataclass(frozen=True, eq=False)
class CircleGrid:
    """Uniform partition of (-pi, pi] into M bins, evaluated at the bin midpoints."""

    bins: int = DEFAULT_BINS

    def __post_init__(self):
        if self.bins < 1:
            raise ValueError("degenerate grid")

    @property
    def width(self) -> float:
        return TWO_PI / self.bins

    @property
    def midpoints(self) -> np.ndarray:
        return -math.pi + (np.arange(self.bins) + 0.5) * self.width

    def bin_index(self, angles) -> np.ndarray:
        """Return the index of the bin (-pi + i w, -pi + (i+1) w] holding each angle.

        Args:
            angles (array-like): Angles in radians.

        Returns:
            np.ndarray: Integer bin indices in [0, M).
        """
        shifted = (canonical_angle(angles) + math.pi) / self.width
        return np.clip(np.ceil(shifted).astype(int) - 1, 0, self.bins - 1)

    def arc_mask(self, start: float, end: float) -> np.ndarray:
        """Boolean mask of bins whose midpoint lies in the arc (start, end].

        Args:
            start (float): Arc start angle.
            end (float): Arc end angle, reached counter-clockwise from start.

        Returns:
            np.ndarray: Mask over the M bins.
        """
        return in_arc(self.midpoints, start, end)


def in_arc(angles, start: float, end: float) -> np.ndarray:
    """Test membership of angles in the counter-clockwise arc (start, end].

    Args:
        angles (array-like): Angles in radians.
        start (float): Arc start.
        end (float): Arc end; an arc of length 2 pi covers the whole circle.

    Returns:
        np.ndarray: Boolean membership mask.
    """
    length = end - start
    if length >= TWO_PI - 1e-15:
        return np.ones(np.shape(angles), dtype=bool)
    offset = np.mod(np.asarray(angles, dtype=float) - start, TWO_PI)
    return (offset > 0.0) & (offset <= np.mod(length, TWO_PI))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Bounded test function h sampled on the bins of a CircleGrid."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite grid function")


@dataclass(frozen=True, eq=False)
class MassDensity:
    """Density gamma of a positive measure on the circle; total mass unconstrained."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


@dataclass(frozen=True, eq=False)
class CircleDensity(MassDensity):
    """Density zeta of the probability measure zeta/(2 pi) d theta."""

    @classmethod
    def normalized(cls, values) -> "CircleDensity":
        """Rescale nonnegative grid values so that their circle mean equals one.

        Args:
            values (array-like): Nonnegative grid values with positive mean.

        Returns:
            CircleDensity: The normalized density.
        """
        values = np.asarray(values, dtype=float)
        return cls(values / circle_mean(values))

    @classmethod
    def uniform(cls, bins: int = DEFAULT_BINS) -> "CircleDensity":
        return cls(np.ones(bins))


@dataclass(frozen=True)
class DensityDiagnostics:
    """Outcome of validate_density."""

    negative_bins: Tuple[int, ...]
    zero_bins: Tuple[int, ...]
    normalization_error: Optional[float]

    @property
    def valid(self) -> bool:
        if self.negative_bins:
            return False
        return self.normalization_error is None or abs(self.normalization_error) <= 1e-12


def circle_mean(f: Union[GridFunction, MassDensity, np.ndarray, Sequence[float]]) -> float:
    """Midpoint quadrature of (1/2 pi) times the integral over the circle.

    Args:
        f (GridFunction | MassDensity | array-like): Bin values on a uniform grid.

    Returns:
        float: The mean of the bin values; exact for bin-constant integrands.

    Raises:
        ValueError: If the grid is empty.
    """
    values = np.asarray(getattr(f, "values", f), dtype=float)
    if values.size == 0:
        raise ValueError("degenerate grid")
    return float(np.mean(values))


def validate_density(d: MassDensity) -> DensityDiagnostics:
    """Report negativity, normalization error and zero bins of a grid density.

    Args:
        d (MassDensity): A CircleDensity (normalization checked) or MassDensity.

    Returns:
        DensityDiagnostics: Negative bins, zero bins and the normalization error
            (None for mass densities).

    Raises:
        ValueError: If any entry is NaN or infinite.
    """
    values = d.values
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite density")
    negative = tuple(int(i) for i in np.flatnonzero(values < 0.0))
    zero = tuple(int(i) for i in np.flatnonzero(values == 0.0))
    error = circle_mean(values) - 1.0 if isinstance(d, CircleDensity) else None
    return DensityDiagnostics(negative_bins=negative, zero_bins=zero, normalization_error=error)


# ============================================================
# Connection kernels
# ============================================================

class ConnectionKernel(KernelPort):
    """Shared behaviour of the built-in kernels."""

    kernel_id = "kernel"

    def __init__(self, lower: float, upper: float, degenerate: bool = False):
        if lower < 0 or upper < lower or not math.isfinite(upper):
            raise ValueError("kernel bounds must satisfy 0 <= lower <= upper < inf")
        if lower == 0 and not degenerate:
            raise ValueError("kernel lower bound must be positive unless the kernel is marked degenerate")
        self._lower = float(lower)
        self._upper = float(upper)
        self.degenerate = bool(degenerate)

    @property
    def lower_bound(self) -> float:
        return self._lower

    @property
    def upper_bound(self) -> float:
        return self._upper

    def row(self, alpha: float, grid: CircleGrid) -> np.ndarray:
        """Return C(alpha, .) at the grid midpoints."""
        return np.broadcast_to(self.evaluate(alpha, grid.midpoints), (grid.bins,)).astype(float)

    def describe(self) -> Dict:
        return {"name": self.kernel_id}


class ConstantKernel(ConnectionKernel):
    kernel_id = "constant"

    def __init__(self, value: float = 1.0, degenerate: bool = False):
        super().__init__(value, value, degenerate)
        self.value = float(value)

    def evaluate(self, alpha, theta) -> np.ndarray:
        shape = np.broadcast(np.asarray(alpha), np.asarray(theta)).shape
        return np.full(shape, self.value)

    def describe(self) -> Dict:
        return {"name": self.kernel_id, "params": {"value": self.value}}


class CosineKernel(ConnectionKernel):
    """C(alpha, theta) = base + amplitude * cos(theta - alpha), or cos(theta) if not relative."""

    kernel_id = "cosine"

    def __init__(self, base: float = 2.0, amplitude: float = 1.0, relative: bool = True, degenerate: bool = False):
        super().__init__(base - abs(amplitude), base + abs(amplitude), degenerate)
        self.base = float(base)
        self.amplitude = float(amplitude)
        self.relative = bool(relative)

    def evaluate(self, alpha, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        phase = theta - np.asarray(alpha, dtype=float) if self.relative else theta + 0.0 * np.asarray(alpha)
        return self.base + self.amplitude * np.cos(phase)

    def describe(self) -> Dict:
        return {"name": self.kernel_id, "params": {"base": self.base, "amplitude": self.amplitude, "relative": self.relative}}


class VonMisesKernel(ConnectionKernel):
    """C(alpha, theta) = scale * exp(concentration * cos(theta - alpha))."""

    kernel_id = "von_mises"

    def __init__(self, scale: float = 1.0, concentration: float = 1.0, degenerate: bool = False):
        super().__init__(scale * math.exp(-abs(concentration)), scale * math.exp(abs(concentration)), degenerate)
        self.scale = float(scale)
        self.concentration = float(concentration)

    def evaluate(self, alpha, theta) -> np.ndarray:
        phase = np.asarray(theta, dtype=float) - np.asarray(alpha, dtype=float)
        return self.scale * np.exp(self.concentration * np.cos(phase))

    def describe(self) -> Dict:
        return {"name": self.kernel_id, "params": {"scale": self.scale, "concentration": self.concentration}}


class PiecewiseKernel(ConnectionKernel):
    """Block kernel: C(alpha, theta) = values[arc(alpha), arc(theta)].

    The arcs are (b_i, b_{i+1}] for the sorted cut points b, the last arc wrapping
    around from b_{Q-1} to b_0 + 2 pi.
    """

    kernel_id = "piecewise"

    def __init__(self, boundaries: Sequence[float], values: Sequence[Sequence[float]], degenerate: bool = False):
        cuts = np.sort(canonical_angle(np.asarray(boundaries, dtype=float)))
        table = np.asarray(values, dtype=float)
        if cuts.size < 1 or table.shape != (cuts.size, cuts.size):
            raise ValueError("piecewise kernel needs a Q x Q table for Q cut points")
        if np.unique(cuts).size != cuts.size:
            raise ValueError("piecewise kernel cut points must be distinct")
        super().__init__(float(table.min()), float(table.max()), degenerate)
        self.cuts = cuts
        self.table = table

    def arc_index(self, angles) -> np.ndarray:
        idx = np.searchsorted(self.cuts, canonical_angle(angles), side="left") - 1
        return np.where(idx < 0, self.cuts.size - 1, idx)

    @property
    def arcs(self) -> List[Tuple[float, float]]:
        q = self.cuts.size
        return [(float(self.cuts[i]), float(self.cuts[i + 1]) if i + 1 < q else float(self.cuts[0]) + TWO_PI) for i in range(q)]

    def evaluate(self, alpha, theta) -> np.ndarray:
        return self.table[self.arc_index(alpha), self.arc_index(theta)]

    def describe(self) -> Dict:
        return {"name": self.kernel_id, "params": {"boundaries": self.cuts.tolist(), "values": self.table.tolist()}}


class GridKernel(ConnectionKernel):
    """Kernel given as an M x M table of bin values (rows: alpha bin, columns: theta bin)."""

    kernel_id = "table"

    def __init__(self, table: Sequence[Sequence[float]], degenerate: bool = False):
        table = np.asarray(table, dtype=float)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] < 1:
            raise ValueError("kernel table must be a square M x M array")
        if not np.all(np.isfinite(table)):
            raise ValueError("kernel table must be finite")
        super().__init__(float(table.min()), float(table.max()), degenerate)
        self.table = table
        self.grid = CircleGrid(table.shape[0])

    def evaluate(self, alpha, theta) -> np.ndarray:
        return self.table[self.grid.bin_index(alpha), self.grid.bin_index(theta)]

    def describe(self) -> Dict:
        return {"name": self.kernel_id, "bins": self.grid.bins}


KERNELS = {
    "constant": ConstantKernel,
    "cosine": CosineKernel,
    "von_mises": VonMisesKernel,
    "piecewise": PiecewiseKernel,
}


def make_kernel(spec: Dict) -> ConnectionKernel:
    """Build a kernel from its configuration document.

    Args:
        spec (Dict): Either ``{"name": ..., "params": {...}}`` naming a built-in, or
            ``{"table": [[...]]}`` with M x M grid values. ``"degenerate": true``
            admits a zero lower bound.

    Returns:
        ConnectionKernel: The configured kernel.

    Raises:
        KeyError: If the named kernel is not registered.
    """
    degenerate = bool(spec.get("degenerate", False))
    if "table" in spec:
        return GridKernel(spec["table"], degenerate=degenerate)
    name = spec.get("name", "constant")
    if name not in KERNELS:
        raise KeyError(f"unknown kernel '{name}'")
    return KERNELS[name](**(spec.get("params") or {}), degenerate=degenerate)


def kernel_mass(kernel: KernelPort, alpha: float, grid: Optional[CircleGrid] = None) -> float:
    """Return c(alpha) = (1/2 pi) * integral of C(alpha, theta) d theta.

    Args:
        kernel (KernelPort): Connection kernel.
        alpha (float): Receiving angle in (-pi, pi].
        grid (Optional[CircleGrid]): Quadrature grid; defaults to M = 1024.

    Returns:
        float: Midpoint-rule value of the kernel mass.
    """
    grid = grid or CircleGrid()
    values = np.broadcast_to(kernel.evaluate(alpha, grid.midpoints), (grid.bins,))
    return circle_mean(values)


@dataclass(frozen=True)
class KernelDiagnostics:
    """Sampled check of a kernel's declared bounds and arc structure."""

    grid_min: float
    grid_max: float
    bounds_ok: bool
    arcs_ok: bool
    violations: List[str] = field(default_factory=list)


def check_kernel(kernel: KernelPort, grid: Optional[CircleGrid] = None) -> KernelDiagnostics:
    """Verify the kernel bounds on the grid and, if arcs exist, constancy in alpha per arc.

    Args:
        kernel (KernelPort): Kernel to check.
        grid (Optional[CircleGrid]): Sampling grid.

    Returns:
        KernelDiagnostics: Observed range and flags.
    """
    grid = grid or CircleGrid(256)
    mids = grid.midpoints
    values = np.broadcast_to(kernel.evaluate(mids[:, None], mids[None, :]), (grid.bins, grid.bins))
    violations: List[str] = []
    tol = 1e-12 * max(1.0, kernel.upper_bound)
    bounds_ok = bool(values.min() >= kernel.lower_bound - tol and values.max() <= kernel.upper_bound + tol)
    if not bounds_ok:
        violations.append("kernel values outside declared bounds")
    if kernel.lower_bound <= 0.0:
        violations.append("kernel lower bound is not positive")
    arcs_ok = True
    for start, end in kernel.arcs or []:
        rows = values[in_arc(mids, start, end)]
        if rows.size and not np.all(rows == rows[0]):
            arcs_ok = False
            violations.append(f"kernel not constant in alpha on arc ({start:.6g}, {end:.6g}]")
    if violations:
        logger.debug("kernel %s diagnostics: %s", getattr(kernel, "kernel_id", "?"), violations)
    return KernelDiagnostics(float(values.min()), float(values.max()), bounds_ok, arcs_ok, violations)
