"""ldpnet command line - Subcommand handlers for the experiment pipeline and the acceptance suite."""

import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional, Sequence

from ... import __version__
from ...backend.app import create_app
from ...backend.config import STAGES, ExperimentConfig, load_config
from ...backend.service.experiment_service import degree_summary, summarize_scan
from ...backend.service.verification_service import VerificationContext, VerificationService
from ...errors import CapExceededError, ConfigError, ContractViolationError, NoConvergenceError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_CAP = 3
EXIT_CONTRACT = 4

Handler = Callable[[argparse.Namespace], int]


def _add_common(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    parser.add_argument("--config", required=config_required, metavar="PATH", help="experiment configuration (JSON)")
    parser.add_argument("--seed", type=int, metavar="OVERRIDE", help="replace graph.seed")
    parser.add_argument("--out", metavar="DIR", help="output directory (overrides LDPNET_OUT and outputs.directory)")
    parser.add_argument("--threads", type=int, metavar="K", help="worker threads; results do not depend on K")
    parser.add_argument("--verbose", "-v", action="count", default=0, help="-v for INFO, -vv for DEBUG")


def _load(args: argparse.Namespace) -> ExperimentConfig:
    return load_config(args.config, seed=args.seed, out=args.out, threads=args.threads)


def _run_stages(args: argparse.Namespace, stages: Optional[List[str]]) -> int:
    config = _load(args)
    _, experiment, _ = create_app(config)
    manifest = experiment.run(stages)
    for name in experiment.completed():
        result = experiment.results[name]
        if name == "sample-graph":
            print(degree_summary(result))
        elif name == "ldp-scan" and result is not None:
            print("\n".join(summarize_scan(result)))
    for name, digest in manifest["files"].items():
        print(f"{digest[:16]}  {config.output_dir / name}")
    return EXIT_OK


def _stage_handler(stage: str) -> Handler:
    def handle(args: argparse.Namespace) -> int:
        return _run_stages(args, [stage])

    return handle


def _handle_run(args: argparse.Namespace) -> int:
    return _run_stages(args, None)


def _handle_verify(args: argparse.Namespace) -> int:
    if args.list:
        for criterion_id, description in VerificationService.list_criteria():
            print(f"{criterion_id:<22} {description}")
        return EXIT_OK
    if args.config:
        _, _, service = create_app(_load(args))
    else:
        service = VerificationService(VerificationContext(seed=args.seed or 0, threads=args.threads or 1))
    try:
        results = service.run(args.criteria or None)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status}  {result.criterion_id:<22} {result.detail}  [{result.seconds:.2f} s]")
    failed = [r.criterion_id for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} of {len(results)} criteria failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def register_commands(subparsers) -> Dict[str, Handler]:
    """Register all subcommands on an argparse subparser collection.

    Args:
        subparsers: Result of ``ArgumentParser.add_subparsers``.

    Returns:
        Dict[str, Handler]: Handler per subcommand name.
    """
    handlers: Dict[str, Handler] = {}

    run = subparsers.add_parser("run", help="run the configured pipeline stages")
    _add_common(run)
    handlers["run"] = _handle_run

    for stage in STAGES:
        parser = subparsers.add_parser(stage, help=f"run only the {stage} stage")
        _add_common(parser)
        handlers[stage] = _stage_handler(stage)

    verify = subparsers.add_parser("verify", help="run the built-in acceptance suite")
    _add_common(verify, config_required=False)
    verify.add_argument("--list", action="store_true", help="print criterion ids without running")
    verify.add_argument("criteria", nargs="*", metavar="ID", help="criteria to run (default: all)")
    handlers["verify"] = _handle_verify
    return handlers


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldpnet", description="Particle systems on sparse inhomogeneous random graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    parser.set_defaults(handlers=register_commands(subparsers))
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, configure logging and dispatch; returns the process exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapExceededError as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ContractViolationError, NoConvergenceError) as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
