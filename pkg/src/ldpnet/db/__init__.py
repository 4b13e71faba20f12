"""DB - Artifact persistence adapters."""

from .filesystem import FileArtifactStore

__all__ = ["FileArtifactStore"]
