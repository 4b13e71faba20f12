import pathlib
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Union

from ldpnet.contracts import KernelPort, ReportPort
from ldpnet.domain.circle import CircleDensity
from ldpnet.domain.rates import NoDensity, optimal_scale, rate_node
from reports.report_format import csv_float, json_float, versioned

DEFAULT_OUTPUT_FILE = pathlib.Path("rates.csv")


@dataclass(frozen=True)
class RateRow:
    alpha: float
    kernel_id: str
    value: float
    mass_term: float
    exponential_term: float
    a_star: float


class RateReport(ReportPort):
    """Node rate evaluations I_alpha(zeta) over a list of angles."""

    HEADERS = ["alpha", "kernel_id", "value", "mass_term", "exponential_term", "a_star"]

    def __init__(self, rows: Sequence[RateRow]):
        self._rows = list(rows)

    @classmethod
    def evaluate(cls, kernel: KernelPort, alphas: Sequence[float], density: Union[CircleDensity, NoDensity]) -> "RateReport":
        """Evaluate one density at every angle; a_* is NaN for the no-density tag."""
        rows = []
        for alpha in alphas:
            rate = rate_node(kernel, alpha, density)
            a_star = float("nan") if rate.degenerate else optimal_scale(kernel, alpha, density).a_star
            rows.append(RateRow(float(alpha), kernel.kernel_id, rate.value, rate.mass_term, rate.exponential_term, a_star))
        return cls(rows)

    def headers(self) -> List[str]:
        return list(self.HEADERS)

    def rows(self) -> List[List[Any]]:
        return [
            [csv_float(r.alpha), r.kernel_id, csv_float(r.value), csv_float(r.mass_term), csv_float(r.exponential_term), csv_float(r.a_star)]
            for r in self._rows
        ]

    def payload(self) -> Dict:
        return versioned(
            {
                "kind": "rates",
                "rows": [{key: json_float(v) if isinstance(v, float) else v for key, v in zip(self.HEADERS, vars(r).values())} for r in self._rows],
            }
        )
