"""Define abstract base classes (ports) for the ldpnet application architecture."""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

# ============================================================
# Connection Kernel Port (Circle Layer)
# ============================================================

class KernelPort(ABC):
    """Abstract interface for a connection kernel C(alpha, theta) on the circle."""

    kernel_id: str = "abstract"

    @abstractmethod
    def evaluate(self, alpha, theta) -> np.ndarray:
        """Evaluate the kernel with numpy broadcasting.

        Args:
            alpha (array-like): Angles of the receiving node, canonical in (-pi, pi].
            theta (array-like): Angles of the sending node.

        Returns:
            np.ndarray: Positive kernel values with the broadcast shape.
        """
        ...

    @property
    @abstractmethod
    def lower_bound(self) -> float:
        """float: Declared lower bound C_lb > 0."""
        ...

    @property
    @abstractmethod
    def upper_bound(self) -> float:
        """float: Declared upper bound C_ub < infinity."""
        ...

    @property
    def arcs(self) -> Optional[List[Tuple[float, float]]]:
        """Optional partition of the circle into arcs on which the kernel is constant.

        Returns:
            Optional[List[Tuple[float, float]]]: Half-open arcs (start, end], or None.
        """
        return None

# ============================================================
# Artifact Store Port (Persistence Layer)
# ============================================================

class ArtifactStorePort(ABC):
    """Abstract interface for persisting experiment artifacts."""

    @abstractmethod
    def connect(self) -> None:
        """Prepare the storage location.

        Raises:
            OSError: If the location cannot be created.
        """
        ...

    @abstractmethod
    def write_text(self, name: str, text: str) -> Path:
        """Atomically write a text artifact.

        Args:
            name (str): File name relative to the store root.
            text (str): Content to write.

        Returns:
            Path: Location of the written artifact.
        """
        ...

    @abstractmethod
    def write_csv(self, name: str, headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        """Atomically write a CSV artifact with a header row.

        Args:
            name (str): File name relative to the store root.
            headers (Sequence[str]): Column names in fixed order.
            rows (Sequence[Sequence[Any]]): Data rows.

        Returns:
            Path: Location of the written artifact.
        """
        ...

    @abstractmethod
    def write_json(self, name: str, payload: Dict) -> Path:
        """Atomically write a JSON artifact.

        Args:
            name (str): File name relative to the store root.
            payload (Dict): JSON-serialisable document.

        Returns:
            Path: Location of the written artifact.
        """
        ...

# ============================================================
# Report Port
# ============================================================

class ReportPort(ABC):
    """Abstract interface for tabular and JSON report generation."""

    @abstractmethod
    def headers(self) -> List[str]:
        """Return the fixed CSV column order.

        Returns:
            List[str]: Column names.
        """
        ...

    @abstractmethod
    def rows(self) -> List[List[Any]]:
        """Return the CSV data rows.

        Returns:
            List[List[Any]]: One list per row, aligned with ``headers()``.
        """
        ...

    @abstractmethod
    def payload(self) -> Dict:
        """Return the JSON form of the report.

        Returns:
            Dict: Schema-versioned JSON document.
        """
        ...

# ============================================================
# Experiment Service Port
# ============================================================

class ExperimentServicePort(ABC):
    """Abstract interface for running configured experiments."""

    @abstractmethod
    def run(self, stages: Optional[Sequence[str]] = None) -> Dict:
        """Execute the configured pipeline and persist its artifacts.

        Args:
            stages (Optional[Sequence[str]]): Stages to execute; defaults to the
                configured list.

        Returns:
            Dict: The run manifest.

        Raises:
            CapExceededError: If a runtime size cap is breached.
            ContractViolationError: If a numerical self-check fails.
        """
        ...
