"""Registries of named drift/coupling vector fields and initial-condition lifts U."""

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

Drift = Callable[[np.ndarray], np.ndarray]
Coupling = Callable[[np.ndarray, np.ndarray], np.ndarray]
Lift = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class VectorFieldPair:
    """Drift G and coupling f of du^k/dt = G(u^k) + mean_{j in Xi_k} f(u^k, u^j).

    Both callables act row-wise on (K, d) arrays; the coupling receives the target
    state first and the source state second.
    """

    drift: Drift
    coupling: Coupling
    drift_bound: float
    coupling_bound: float
    drift_lipschitz: float
    coupling_lipschitz: float
    dimension: int
    name: str = "custom"

    @property
    def speed_bound(self) -> float:
        return self.drift_bound + self.coupling_bound

    def check_bounds(self, cloud: np.ndarray, tol: float = 1e-12) -> bool:
        """Sampled check of the declared sup-norm bounds on a cloud of states.

        Args:
            cloud (np.ndarray): (K, d) test states; pairs are formed with the reversed cloud.
            tol (float): Absolute slack.

        Returns:
            bool: True if both fields respect their bounds on the cloud.
        """
        cloud = np.atleast_2d(np.asarray(cloud, dtype=float))
        drift_norm = np.linalg.norm(self.drift(cloud), axis=1).max(initial=0.0)
        coupling_norm = np.linalg.norm(self.coupling(cloud, cloud[::-1]), axis=1).max(initial=0.0)
        return bool(drift_norm <= self.drift_bound + tol and coupling_norm <= self.coupling_bound + tol)


def _vector(value, dimension: int) -> np.ndarray:
    out = np.broadcast_to(np.asarray(value, dtype=float), (dimension,))
    return np.array(out)


def _zero_drift(dimension: int) -> tuple:
    return (lambda u: np.zeros_like(u)), 0.0, 0.0


def _constant_drift(dimension: int, omega=0.0) -> tuple:
    vec = _vector(omega, dimension)
    return (lambda u: np.broadcast_to(vec, u.shape).copy()), float(np.linalg.norm(vec)), 0.0


def _linear_drift(dimension: int, rate: float = 1.0, radius: float = 1.0) -> tuple:
    # bounded only on the ball of the given radius
    return (lambda u: -rate * u), abs(rate) * radius, abs(rate)


def _tanh_drift(dimension: int, rate: float = 1.0) -> tuple:
    return (lambda u: -rate * np.tanh(u)), abs(rate) * math.sqrt(dimension), abs(rate)


def _zero_coupling(dimension: int) -> tuple:
    return (lambda u, v: np.zeros_like(u)), 0.0, 0.0


def _linear_coupling(dimension: int, source_weight: float = 1.0, target_weight: float = 0.0, radius: float = 1.0) -> tuple:
    weight = abs(source_weight) + abs(target_weight)
    return (lambda u, v: source_weight * v + target_weight * u), weight * radius, weight


def _sine_coupling(dimension: int, strength: float = 1.0) -> tuple:
    return (lambda u, v: strength * np.sin(v - u)), abs(strength) * math.sqrt(dimension), 2.0 * abs(strength)


def _tanh_coupling(dimension: int, strength: float = 1.0) -> tuple:
    return (lambda u, v: strength * np.tanh(v - u)), abs(strength) * math.sqrt(dimension), 2.0 * abs(strength)


DRIFTS = {
    "zero": _zero_drift,
    "constant": _constant_drift,
    "linear": _linear_drift,
    "tanh": _tanh_drift,
}

COUPLINGS = {
    "zero": _zero_coupling,
    "linear": _linear_coupling,
    "sine": _sine_coupling,
    "tanh": _tanh_coupling,
}


def make_fields(dimension: int, drift: Dict, coupling: Dict) -> VectorFieldPair:
    """Build a VectorFieldPair from registry entries.

    Args:
        dimension (int): State dimension d.
        drift (Dict): ``{"name": ..., "params": {...}}`` naming a DRIFTS entry.
        coupling (Dict): ``{"name": ..., "params": {...}}`` naming a COUPLINGS entry.

    Returns:
        VectorFieldPair: Fields with their declared bounds and Lipschitz constants.

    Raises:
        KeyError: If a name is not registered.
    """
    drift_name = drift.get("name", "zero")
    coupling_name = coupling.get("name", "zero")
    if drift_name not in DRIFTS:
        raise KeyError(f"unknown drift '{drift_name}'")
    if coupling_name not in COUPLINGS:
        raise KeyError(f"unknown coupling '{coupling_name}'")
    g, g_bound, g_lip = DRIFTS[drift_name](dimension, **(drift.get("params") or {}))
    f, f_bound, f_lip = COUPLINGS[coupling_name](dimension, **(coupling.get("params") or {}))
    return VectorFieldPair(g, f, g_bound, f_bound, g_lip, f_lip, dimension, f"{drift_name}/{coupling_name}")


# ============================================================
# Lifts U: S^1 -> R^d
# ============================================================

def _constant_lift(dimension: int, value=0.0) -> Lift:
    vec = _vector(value, dimension)
    return lambda theta: np.tile(vec, (np.size(theta), 1))


def _angle_lift(dimension: int, scale: float = 1.0) -> Lift:
    if dimension != 1:
        raise ValueError("angle lift needs dimension 1")
    return lambda theta: scale * np.reshape(np.asarray(theta, dtype=float), (-1, 1))


def _circle_lift(dimension: int, radius: float = 1.0) -> Lift:
    if dimension != 2:
        raise ValueError("circle lift needs dimension 2")
    return lambda theta: radius * np.column_stack((np.cos(theta), np.sin(theta)))


def _harmonic_lift(dimension: int, amplitude: float = 1.0, offset: float = 0.0) -> Lift:
    """Component p is offset + amplitude * cos((p+1) theta + p)."""

    def lift(theta):
        theta = np.reshape(np.asarray(theta, dtype=float), (-1, 1))
        harmonics = np.arange(dimension)
        return offset + amplitude * np.cos((harmonics + 1) * theta + harmonics)

    return lift


LIFTS = {
    "constant": _constant_lift,
    "angle": _angle_lift,
    "circle": _circle_lift,
    "harmonic": _harmonic_lift,
}


def make_lift(dimension: int, spec: Dict) -> Lift:
    name = spec.get("name", "harmonic")
    if name not in LIFTS:
        raise KeyError(f"unknown lift '{name}'")
    return LIFTS[name](dimension, **(spec.get("params") or {}))


def lift_bound(lift: Lift, samples: int = 4096, angles: Optional[np.ndarray] = None) -> float:
    """Sup-norm of a lift on a fine angle grid.

    Args:
        lift (Lift): Map from angles to states.
        samples (int): Grid size.
        angles (Optional[np.ndarray]): Extra angles the lift is evaluated at; the
            bound always covers them.

    Returns:
        float: Largest Euclidean norm seen.
    """
    theta = np.append(-math.pi + (np.arange(samples) + 0.5) * (2.0 * math.pi / samples), math.pi)
    if angles is not None:
        theta = np.concatenate([theta, np.ravel(np.asarray(angles, dtype=float))])
    return float(np.linalg.norm(lift(theta), axis=1).max())
