"""Experiment configuration: JSON document, published schema, overrides and builders."""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from jsonschema import Draft202012Validator

from ..domain.circle import KERNELS, ConnectionKernel, make_kernel
from ..domain.dynamics import InitialCondition
from ..domain.fields import COUPLINGS, DRIFTS, LIFTS, Lift, VectorFieldPair, make_fields, make_lift
from ..domain.graph import SparsitySchedule, make_schedule
from ..domain.ldp import ARC_OCCUPANCY, DEGREE_TAIL, EventSpec
from ..domain.pushforward import PushforwardConfig
from ..errors import ConfigError

logger = logging.getLogger(__name__)

OUTPUT_ENV = "LDPNET_OUT"
STAGES = ["sample-graph", "simulate", "measures", "rates", "ldp-scan", "pushforward-check"]

_NAMED = {
    "type": "object",
    "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
    "required": ["name"],
    "additionalProperties": False,
}


def _named(names: List[str]) -> Dict:
    schema = json.loads(json.dumps(_NAMED))
    schema["properties"]["name"]["enum"] = sorted(names)
    return schema


EXPERIMENT_SCHEMA: Dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ldpnet experiment",
    "type": "object",
    "required": ["kernel", "model", "graph"],
    "additionalProperties": False,
    "properties": {
        "kernel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "name": {"enum": sorted(KERNELS)},
                "params": {"type": "object"},
                "table": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                "degenerate": {"type": "boolean"},
            },
        },
        "model": {
            "type": "object",
            "required": ["dimension"],
            "additionalProperties": False,
            "properties": {
                "dimension": {"type": "integer", "minimum": 1},
                "drift": _named(list(DRIFTS)),
                "coupling": _named(list(COUPLINGS)),
                "lift": _named(list(LIFTS)),
                "initial_bound": {"type": "number", "exclusiveMinimum": 0},
                "horizon": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "graph": {
            "type": "object",
            "required": ["seed"],
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 0},
                "n_grid": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                "rho": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "schedule": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "name": {"enum": ["power"]},
                        "scale": {"type": "number", "exclusiveMinimum": 0},
                        "exponent": {"type": "number"},
                    },
                },
                "seed": {"type": "integer", "minimum": 0},
                "allow_clip": {"type": "boolean"},
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "quadrature_bins": {"type": "integer", "minimum": 1},
                "euler_steps": {"type": "integer", "minimum": 1},
                "ladder": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
                "max_steps": {"type": "integer", "minimum": 1},
                "trials": {"type": "integer", "minimum": 1},
                "mode": {"enum": ["exact", "mc", "auto"]},
                "stages": {"type": "array", "items": {"enum": STAGES}},
                "threads": {"type": "integer", "minimum": 1},
                "rate_angles": {"type": "array", "items": {"type": "number"}},
            },
        },
        "event": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": [DEGREE_TAIL, ARC_OCCUPANCY]},
                "mass": {"type": "number", "minimum": 0},
                "max_count": {"type": "integer", "minimum": 0},
                "arcs": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                },
                "thresholds": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "target_angle": {"type": "number"},
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "thinning": {"type": "integer", "minimum": 1},
            },
        },
    },
}

_VALIDATOR = Draft202012Validator(EXPERIMENT_SCHEMA)


def _error_path(error) -> str:
    parts = [str(p) for p in error.absolute_path]
    if error.validator == "required":
        missing = [key for key in error.validator_value if key not in error.instance]
        parts.append(missing[0])
    elif error.validator == "additionalProperties":
        extra = sorted(set(error.instance) - set(error.schema.get("properties", {})))
        if extra:
            parts.append(extra[0])
    return ".".join(parts) or "<document>"


def validate_document(document: Dict) -> None:
    """Validate a configuration document against EXPERIMENT_SCHEMA.

    Args:
        document (Dict): Parsed JSON configuration.

    Raises:
        ConfigError: For the first violation in document order, with its field path.
    """
    errors = sorted(_VALIDATOR.iter_errors(document), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        raise ConfigError(errors[0].message, _error_path(errors[0]))


def canonical_bytes(document: Dict) -> bytes:
    return json.dumps(document, sort_keys=True, separators=(",", ":")).encode("utf-8")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment configuration with typed accessors."""

    document: Dict[str, Any]
    source: Optional[Path] = None
    overrides: Dict[str, Any] = field(default_factory=dict)

    @property
    def sha256(self) -> str:
        return hashlib.sha256(canonical_bytes(self.document)).hexdigest()

    def section(self, name: str) -> Dict[str, Any]:
        return self.document.get(name) or {}

    # ---------------------------------------------------------- graph

    @property
    def seed(self) -> int:
        return int(self.section("graph")["seed"])

    @property
    def n_grid(self) -> List[int]:
        graph = self.section("graph")
        if "n_grid" in graph:
            return [int(n) for n in graph["n_grid"]]
        return [int(graph["n"])]

    @property
    def n(self) -> int:
        graph = self.section("graph")
        return int(graph["n"]) if "n" in graph else self.n_grid[0]

    def schedule(self) -> SparsitySchedule:
        graph = self.section("graph")
        if "schedule" in graph:
            return make_schedule(graph["schedule"])
        return SparsitySchedule(float(graph["rho"]), 0.0, "constant")

    def rho(self, n: Optional[int] = None) -> float:
        graph = self.section("graph")
        if "rho" in graph:
            return float(graph["rho"])
        return self.schedule().rho(self.n if n is None else n)

    @property
    def allow_clip(self) -> bool:
        return bool(self.section("graph").get("allow_clip", False))

    # ---------------------------------------------------------- model

    def kernel(self) -> ConnectionKernel:
        return make_kernel(self.section("kernel") or {"name": "constant"})

    @property
    def dimension(self) -> int:
        return int(self.section("model")["dimension"])

    @property
    def horizon(self) -> float:
        return float(self.section("model").get("horizon", 1.0))

    def fields(self) -> VectorFieldPair:
        model = self.section("model")
        return make_fields(self.dimension, model.get("drift", {"name": "zero"}), model.get("coupling", {"name": "zero"}))

    def lift(self) -> Lift:
        return make_lift(self.dimension, self.section("model").get("lift", {"name": "harmonic"}))

    @property
    def initial_bound(self) -> Optional[float]:
        bound = self.section("model").get("initial_bound")
        return None if bound is None else float(bound)

    # ---------------------------------------------------------- run

    def run_value(self, key: str, default: Any) -> Any:
        return self.section("run").get(key, default)

    @property
    def bins(self) -> int:
        return int(self.run_value("quadrature_bins", 1024))

    @property
    def threads(self) -> int:
        return int(self.run_value("threads", 1))

    @property
    def stages(self) -> List[str]:
        return list(self.run_value("stages", STAGES))

    def pushforward(self) -> PushforwardConfig:
        return PushforwardConfig(
            horizon=self.horizon,
            steps=int(self.run_value("euler_steps", 8)),
            tol=float(self.run_value("tolerance", 1e-2)),
            max_steps=int(self.run_value("max_steps", 4096)),
        )

    def event(self) -> Optional[EventSpec]:
        event = self.section("event")
        if not event:
            return None
        return EventSpec(
            kind=event["kind"],
            mass=event.get("mass"),
            max_count=event.get("max_count"),
            arcs=tuple(tuple(float(x) for x in arc) for arc in event.get("arcs", [])),
            thresholds=tuple(float(t) for t in event.get("thresholds", [])),
            target_angle=float(event.get("target_angle", 0.0)),
        )

    # ---------------------------------------------------------- outputs

    @property
    def output_dir(self) -> Path:
        return Path(self.section("outputs").get("directory", "ldpnet-out"))

    @property
    def thinning(self) -> int:
        return int(self.section("outputs").get("thinning", 1))


def _check_semantics(config: ExperimentConfig) -> None:
    graph = config.section("graph")
    if "n" not in graph and "n_grid" not in graph:
        raise ConfigError("one of n and n_grid is required", "graph.n")
    if "rho" not in graph and "schedule" not in graph:
        raise ConfigError("one of rho and schedule is required", "graph.rho")
    grid = config.n_grid
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("n_grid must be strictly increasing", "graph.n_grid")
    model = config.section("model")
    builders = (
        ("kernel", config.kernel),
        ("model.drift", lambda: make_fields(config.dimension, model.get("drift", {"name": "zero"}), {"name": "zero"})),
        ("model.coupling", config.fields),
        ("model.lift", config.lift),
    )
    for path, build in builders:
        try:
            build()
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc).strip("'\""), path) from exc
    upper = config.kernel().upper_bound
    if config.rho() * upper > 1.0 and not config.allow_clip:
        path = "graph.rho" if "rho" in graph else "graph.schedule"
        raise ConfigError(f"probability overflow: rho * C_ub = {config.rho() * upper:.6g} > 1 at n={config.n}; set graph.allow_clip", path)
    try:
        InitialCondition.from_lift(config.lift(), config.n, config.initial_bound)
    except ValueError as exc:
        raise ConfigError(str(exc), "model.initial_bound" if config.initial_bound is not None else "model.lift") from exc
    try:
        config.event()
    except ValueError as exc:
        raise ConfigError(str(exc), "event") from exc
    try:
        config.pushforward()
    except ValueError as exc:
        raise ConfigError(str(exc), "run") from exc


def parse_config(
    document: Dict,
    source: Optional[Path] = None,
    seed: Optional[int] = None,
    out: Optional[Union[str, Path]] = None,
    threads: Optional[int] = None,
) -> ExperimentConfig:
    """Apply overrides, validate and wrap a configuration document.

    Precedence for the output directory: ``out`` argument, then the LDPNET_OUT
    environment variable, then ``outputs.directory``.

    Raises:
        ConfigError: If the document violates the schema or its registries.
    """
    document = json.loads(json.dumps(document))
    overrides: Dict[str, Any] = {}
    if seed is not None:
        document.setdefault("graph", {})["seed"] = int(seed)
        overrides["graph.seed"] = int(seed)
    if threads is not None:
        document.setdefault("run", {})["threads"] = int(threads)
        overrides["run.threads"] = int(threads)
    directory = str(out) if out is not None else os.environ.get(OUTPUT_ENV)
    if directory:
        document.setdefault("outputs", {})["directory"] = directory
        overrides["outputs.directory"] = directory
    validate_document(document)
    config = ExperimentConfig(document, source, overrides)
    _check_semantics(config)
    logger.debug("configuration %s accepted (sha256 %s)", source or "<memory>", config.sha256[:12])
    return config


def load_config(
    path: Union[str, Path], seed: Optional[int] = None, out: Optional[Union[str, Path]] = None, threads: Optional[int] = None
) -> ExperimentConfig:
    """Read and validate a JSON configuration file.

    Raises:
        ConfigError: If the file cannot be read or parsed, or fails validation.
    """
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", "<document>") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}", "<document>") from exc
    if not isinstance(document, dict):
        raise ConfigError("configuration must be a JSON object", "<document>")
    return parse_config(document, path, seed, out, threads)
