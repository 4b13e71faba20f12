import json
import math

import numpy as np

from ldpnet.domain.circle import CircleDensity, ConstantKernel
from ldpnet.domain.fields import make_fields
from ldpnet.domain.graph import SparsitySchedule
from ldpnet.domain.ldp import EventSpec, ldp_scan
from ldpnet.domain.measures import build_nested
from ldpnet.domain.pushforward import PushforwardConfig, euler_ladder
from ldpnet.domain.rates import NO_DENSITY
from reports.pushforward_report import LadderReport
from reports.rate_report import RateReport
from reports.report_format import SCHEMA_VERSION, csv_float, json_float, nested_measure_from_payload, nested_measure_payload
from reports.scan_report import ScanReport


def test_scan_report_rows_follow_the_grid():
    spec = EventSpec(kind="degree_tail", max_count=1)
    result = ldp_scan(spec, ConstantKernel(1.0), SparsitySchedule(1.0, 0.5), [5, 10], mode="exact")
    report = ScanReport(result)

    assert report.headers() == ["n", "rho", "speed", "logp", "normalized", "predicted", "gap"]
    rows = report.rows()
    assert [row[0] for row in rows] == [5, 10]
    assert all(len(row) == len(report.headers()) for row in rows)

    payload = json.loads(json.dumps(report.payload()))
    assert payload["schema_version"] == SCHEMA_VERSION
    assert payload["kind"] == "ldp_scan"
    assert [row["method"] for row in payload["rows"]] == ["exact", "exact"]


def test_rate_report_marks_missing_density():
    kernel = ConstantKernel(1.0)
    uniform = RateReport.evaluate(kernel, [0.0, 1.0], CircleDensity.uniform(64))
    missing = RateReport.evaluate(kernel, [0.0], NO_DENSITY)

    assert uniform.headers()[0] == "alpha"
    assert all(abs(float(row[2])) < 1e-12 for row in uniform.rows())
    assert missing.rows()[0][5] == "nan"
    assert float(missing.rows()[0][2]) == 1.0
    assert missing.payload()["rows"][0]["a_star"] == "nan"


def test_ladder_report_payload(small_graph, small_init):
    nu = build_nested(small_graph, small_init)
    fields = make_fields(2, {"name": "tanh", "params": {"rate": 0.5}}, {"name": "sine", "params": {"strength": 1.0}})
    ladder = euler_ladder(nu, fields, PushforwardConfig(steps=4), [4, 8, 16])
    report = LadderReport(ladder)

    assert [row[0] for row in report.rows()] == [4, 8, 16]
    payload = report.payload()
    assert payload["kind"] == "pushforward_ladder"
    assert payload["m_ladder"] == [4, 8, 16]
    assert payload["reference_steps"] == 256
    assert "limit" not in payload


def test_nested_measure_round_trips_bit_exact(small_graph, small_init):
    nu = build_nested(small_graph, small_init)
    restored = nested_measure_from_payload(json.loads(json.dumps(nested_measure_payload(nu))))

    assert np.array_equal(restored.points, nu.points)
    assert np.array_equal(restored.weights, nu.weights)
    for ours, theirs in zip(restored.subs, nu.subs):
        assert np.array_equal(ours.points, theirs.points)
        assert np.array_equal(ours.weights, theirs.weights)


def test_float_spelling():
    assert csv_float(0.1) == "0.1"
    assert csv_float(-math.inf) == "-inf"
    assert json_float(math.nan) == "nan"
    assert json_float(2.5) == 2.5
