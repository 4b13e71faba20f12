import pathlib
from typing import Any, Dict, List

from ldpnet.contracts import ReportPort
from ldpnet.domain.ldp import ScanResult
from reports.report_format import csv_float, json_float, versioned

DEFAULT_OUTPUT_FILE = pathlib.Path("scan.csv")
DEFAULT_SIDECAR_FILE = pathlib.Path("scan.json")


class ScanReport(ReportPort):
    """Normalized log-probability scan as CSV rows plus a JSON sidecar describing the event."""

    HEADERS = ["n", "rho", "speed", "logp", "normalized", "predicted", "gap"]

    def __init__(self, result: ScanResult):
        self.result = result

    def headers(self) -> List[str]:
        return list(self.HEADERS)

    def rows(self) -> List[List[Any]]:
        return [
            [row.n, csv_float(row.rho), csv_float(row.speed), csv_float(row.logp), csv_float(row.normalized), csv_float(row.predicted), csv_float(row.gap)]
            for row in self.result.rows
        ]

    def payload(self) -> Dict:
        return versioned(
            {
                "kind": "ldp_scan",
                "kernel_id": self.result.kernel_id,
                "event": self.result.spec.describe(),
                "gaps_decreasing": self.result.gaps_decreasing(),
                "rows": [
                    {
                        "n": row.n,
                        "rho": json_float(row.rho),
                        "speed": json_float(row.speed),
                        "measure_speed": json_float(row.measure_speed),
                        "logp": json_float(row.logp),
                        "normalized": json_float(row.normalized),
                        "predicted": json_float(row.predicted),
                        "gap": json_float(row.gap),
                        "method": row.method,
                        "flagged": row.flagged,
                    }
                    for row in self.result.rows
                ],
            }
        )
