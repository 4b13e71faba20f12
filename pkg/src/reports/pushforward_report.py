import pathlib
from typing import Any, Dict, List, Optional

from ldpnet.contracts import ReportPort
from ldpnet.domain.pushforward import FactorizationReport, LadderResult, PsiLimit
from reports.report_format import csv_float, json_float, versioned

DEFAULT_LADDER_FILE = pathlib.Path("ladder.json")
DEFAULT_FACTORIZATION_FILE = pathlib.Path("factorization.json")


class LadderReport(ReportPort):
    """Euler ladder of the push-forward: distances to the finest run and the fitted slope."""

    HEADERS = ["m", "gap"]

    def __init__(self, ladder: LadderResult, limit: Optional[PsiLimit] = None):
        self.ladder = ladder
        self.limit = limit

    def headers(self) -> List[str]:
        return list(self.HEADERS)

    def rows(self) -> List[List[Any]]:
        return [[m, csv_float(g)] for m, g in zip(self.ladder.m_ladder, self.ladder.gaps)]

    def payload(self) -> Dict:
        document = {
            "kind": "pushforward_ladder",
            "m_ladder": list(self.ladder.m_ladder),
            "gaps": [json_float(g) for g in self.ladder.gaps],
            "fitted_slope": json_float(self.ladder.fitted_slope),
            "final_distance": json_float(self.ladder.final_distance),
            "reference_steps": self.ladder.reference_steps,
        }
        if self.limit is not None:
            document["limit"] = {
                "steps": self.limit.steps,
                "ladder": list(self.limit.ladder),
                "successive_gaps": [json_float(g) for g in self.limit.gaps],
            }
        return versioned(document)


class FactorizationCheckReport(ReportPort):
    """Direct coupled Euler versus the tree recursion on the unrolled measure."""

    HEADERS = ["nodes", "steps", "gap", "tolerance", "passed"]

    def __init__(self, report: FactorizationReport):
        self.report = report

    def headers(self) -> List[str]:
        return list(self.HEADERS)

    def rows(self) -> List[List[Any]]:
        r = self.report
        return [[r.nodes, r.steps, csv_float(r.gap), csv_float(r.tolerance), str(r.passed).lower()]]

    def payload(self) -> Dict:
        r = self.report
        return versioned(
            {"kind": "factorization", "nodes": r.nodes, "steps": r.steps, "gap": json_float(r.gap), "tolerance": r.tolerance, "passed": r.passed}
        )
