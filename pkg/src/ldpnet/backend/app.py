"""ldpnet Application - Service wiring for one experiment run."""

import logging
from typing import Tuple

from ..db.filesystem import FileArtifactStore
from .config import ExperimentConfig
from .service.artifact_service import ArtifactService
from .service.experiment_service import ExperimentService
from .service.verification_service import VerificationContext, VerificationService

logger = logging.getLogger(__name__)


def create_app(config: ExperimentConfig) -> Tuple[ArtifactService, ExperimentService, VerificationService]:
    """Initialize the artifact store and all service layers for a configuration.

    The output directory is created when a run starts.

    Args:
        config (ExperimentConfig): Validated configuration.

    Returns:
        Tuple[ArtifactService, ExperimentService, VerificationService]: The wired services.
    """
    artifact_service = ArtifactService(FileArtifactStore(config.output_dir))
    experiment_service = ExperimentService(config, artifact_service)
    verification_service = VerificationService(VerificationContext(bins=config.bins, seed=config.seed, threads=config.threads))
    logger.debug("services wired for config %s (sha256 %s)", config.source, config.sha256[:12])
    return artifact_service, experiment_service, verification_service
