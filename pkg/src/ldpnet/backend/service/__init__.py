"""Backend Services - Pipeline, persistence and acceptance-suite implementations."""

from .artifact_service import ArtifactService
from .experiment_service import ExperimentService
from .verification_service import VerificationContext, VerificationService

__all__ = ["ArtifactService", "ExperimentService", "VerificationContext", "VerificationService"]
