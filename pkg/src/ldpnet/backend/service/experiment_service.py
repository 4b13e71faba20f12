"""Experiment Service - Orchestrates the configured pipeline stages and persists their artifacts."""

import logging
import math
import time
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from reports.pushforward_report import DEFAULT_FACTORIZATION_FILE, DEFAULT_LADDER_FILE, FactorizationCheckReport, LadderReport
from reports.rate_report import DEFAULT_OUTPUT_FILE as RATES_FILE
from reports.rate_report import RateReport
from reports.report_format import nested_measure_payload
from reports.scan_report import DEFAULT_OUTPUT_FILE as SCAN_FILE
from reports.scan_report import DEFAULT_SIDECAR_FILE as SCAN_SIDECAR, ScanReport

from ...contracts import ExperimentServicePort
from ...domain.circle import CircleDensity
from ...domain.dynamics import InitialCondition, TrajectoryBundle, simulate
from ...domain.graph import GraphSample, degree_profile, sample_graph, to_text
from ...domain.ldp import ScanResult, ldp_scan
from ...domain.measures import NestedEmpiricalMeasure, build_nested
from ...domain.pushforward import (
    FACTORIZATION_MAX_NODES,
    FACTORIZATION_MAX_STEPS,
    FactorizationReport,
    euler_ladder,
    factorization_check,
    psi_limit,
)
from ...errors import ConfigError, ContractViolationError
from ..config import STAGES, ExperimentConfig
from .artifact_service import ArtifactService

logger = logging.getLogger(__name__)

DEFAULT_RATE_ANGLES = 8


class ExperimentService(ExperimentServicePort):
    """Service running sample, simulate, measures, rates, ldp-scan and pushforward stages."""

    def __init__(self, config: ExperimentConfig, artifacts: ArtifactService):
        """Initialize the experiment service.

        Args:
            config (ExperimentConfig): Validated configuration.
            artifacts (ArtifactService): Persistence for all emitted files.
        """
        self.config = config
        self.artifacts = artifacts
        self._graph: Optional[GraphSample] = None
        self._init: Optional[InitialCondition] = None
        self._nested: Optional[NestedEmpiricalMeasure] = None
        self.results: Dict[str, object] = {}

    # ------------------------------------------------------------ shared inputs

    @property
    def graph(self) -> GraphSample:
        if self._graph is None:
            cfg = self.config
            self._graph = sample_graph(cfg.kernel(), cfg.n, cfg.rho(), cfg.seed, cfg.allow_clip, cfg.threads)
        return self._graph

    @property
    def initial_condition(self) -> InitialCondition:
        if self._init is None:
            self._init = InitialCondition.from_lift(self.config.lift(), self.config.n, self.config.initial_bound)
        return self._init

    @property
    def nested(self) -> NestedEmpiricalMeasure:
        if self._nested is None:
            self._nested = build_nested(self.graph, self.initial_condition)
        return self._nested

    # ------------------------------------------------------------ stages

    def sample_graph(self) -> GraphSample:
        """Sample the graph and write graph.txt and degrees.csv."""
        g = self.graph
        profile = degree_profile(g)
        self.artifacts.write_text("graph.txt", to_text(g))
        self.artifacts.write_csv("degrees.csv", ["degree", "count"], sorted(profile.histogram.items()))
        logger.info("graph n=%d rho=%.4g degrees min=%d mean=%.2f max=%d", g.n, g.rho, profile.minimum, profile.mean, profile.maximum)
        return g

    def simulate(self) -> TrajectoryBundle:
        """Integrate the network with the configured Euler step count and write trajectories.csv."""
        cfg = self.config
        steps = cfg.pushforward().steps
        bundle = simulate(self.graph, self.initial_condition, cfg.fields(), cfg.horizon, steps, "euler")
        self.artifacts.write_csv("trajectories.csv", bundle.csv_headers(), bundle.csv_rows(cfg.thinning))
        return bundle

    def measures(self) -> NestedEmpiricalMeasure:
        """Build the nested initial measure and write nested_measure.json."""
        nu = self.nested
        self.artifacts.write_json("nested_measure.json", nested_measure_payload(nu))
        logger.info("nested measure: %d atoms, %d distinct initial states", nu.size, nu.flat_marginal.size)
        return nu

    def rates(self) -> RateReport:
        """Evaluate the node rate of the uniform density at the configured angles."""
        cfg = self.config
        default = [-math.pi + (i + 1) * 2.0 * math.pi / DEFAULT_RATE_ANGLES for i in range(DEFAULT_RATE_ANGLES)]
        angles = cfg.run_value("rate_angles", default)
        report = RateReport.evaluate(cfg.kernel(), angles, CircleDensity.uniform(cfg.bins))
        self.artifacts.write_report(report, csv_name=str(RATES_FILE))
        return report

    def ldp_scan(self) -> Optional[ScanResult]:
        """Scan the configured event along the n-grid and write scan.csv with its sidecar."""
        cfg = self.config
        spec = cfg.event()
        if spec is None:
            logger.warning("no event configured; ldp-scan skipped")
            return None
        result = ldp_scan(
            spec,
            cfg.kernel(),
            cfg.schedule(),
            cfg.n_grid,
            mode=cfg.run_value("mode", "auto"),
            trials=int(cfg.run_value("trials", 100_000)),
            seed=cfg.seed,
            threads=cfg.threads,
            bins=cfg.bins,
        )
        self.artifacts.write_report(ScanReport(result), csv_name=str(SCAN_FILE), json_name=str(SCAN_SIDECAR))
        return result

    def pushforward_check(self) -> Dict[str, object]:
        """Run the Psi ladder and, on small graphs, the factorization check.

        Raises:
            NoConvergenceError: If the ladder hits its step cap.
            ContractViolationError: If the factorization gap exceeds its tolerance.
        """
        cfg = self.config
        pf = cfg.pushforward()
        fields = cfg.fields()
        limit = psi_limit(self.nested, fields, pf)
        ladder = euler_ladder(self.nested, fields, pf, cfg.run_value("ladder", limit.ladder))
        self.artifacts.write_json(str(DEFAULT_LADDER_FILE), LadderReport(ladder, limit).payload())
        outcome: Dict[str, object] = {"limit": limit, "ladder": ladder}

        g = self.graph
        if not self.initial_condition.has_distinct_states():
            logger.warning("factorization check skipped: initial states are not distinct")
        elif g.size <= FACTORIZATION_MAX_NODES and pf.steps <= FACTORIZATION_MAX_STEPS:
            report: FactorizationReport = factorization_check(g, self.initial_condition, fields, pf)
            self.artifacts.write_json(str(DEFAULT_FACTORIZATION_FILE), FactorizationCheckReport(report).payload())
            outcome["factorization"] = report
            if not report.passed:
                raise ContractViolationError(f"factorization gap {report.gap:.3e} exceeds {report.tolerance:.1e}")
        else:
            logger.info("factorization check skipped: %d nodes, m=%d", g.size, pf.steps)
        return outcome

    def _stage_table(self) -> Dict[str, Callable[[], object]]:
        return {
            "sample-graph": self.sample_graph,
            "simulate": self.simulate,
            "measures": self.measures,
            "rates": self.rates,
            "ldp-scan": self.ldp_scan,
            "pushforward-check": self.pushforward_check,
        }

    def run(self, stages: Optional[Sequence[str]] = None) -> Dict:
        """Execute the requested stages in pipeline order and write the manifest.

        Args:
            stages (Optional[Sequence[str]]): Stage names; defaults to ``run.stages``.

        Returns:
            Dict: The run manifest.

        Raises:
            ConfigError: If a stage name is unknown.
        """
        requested = set(stages if stages is not None else self.config.stages)
        unknown = requested - set(STAGES)
        if unknown:
            raise ConfigError(f"unknown stages: {sorted(unknown)}", "run.stages")
        self.artifacts.connect()
        table = self._stage_table()
        seconds: Dict[str, float] = {}
        for name in [s for s in STAGES if s in requested]:
            logger.info("stage %s started", name)
            start = time.perf_counter()
            self.results[name] = table[name]()
            seconds[name] = time.perf_counter() - start
            logger.info("stage %s finished in %.3f s", name, seconds[name])
        return self.artifacts.write_manifest(self.config.sha256, seconds)

    def completed(self) -> List[str]:
        return [name for name in STAGES if name in self.results]


def summarize_scan(result: ScanResult) -> List[str]:
    """Console lines for a scan: n, normalized value and gap."""
    lines = []
    for row in result.rows:
        gap = "flagged" if row.flagged else f"{row.gap:+.6f}"
        lines.append(f"n={row.n:<7d} rho={row.rho:.5f} normalized={row.normalized:.6f} predicted={row.predicted:.6f} gap={gap}")
    return lines


def degree_summary(g: GraphSample) -> str:
    degrees = g.degrees
    return f"n={g.n} nodes={g.size} degree min={degrees.min()} mean={np.mean(degrees):.3f} max={degrees.max()}"
