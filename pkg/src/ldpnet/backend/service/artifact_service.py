"""Artifact Service - Wrapper around the artifact store that records checksums."""

import hashlib
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Sequence

from ... import __version__
from ...contracts import ArtifactStorePort, ReportPort
from ...db.filesystem import FileArtifactStore

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"


class ArtifactService(ArtifactStorePort):
    """Service persisting artifacts and collecting the data for the run manifest."""

    def __init__(self, store: FileArtifactStore):
        """Initialize the artifact service with a store.

        Args:
            store (FileArtifactStore): The underlying filesystem store.
        """
        self.store = store
        self.checksums: Dict[str, str] = {}

    @property
    def root(self) -> Path:
        return self.store.root

    def connect(self) -> None:
        """Prepare the output directory through the store.

        Raises:
            OSError: If the directory cannot be created.
        """
        self.store.connect()

    def _record(self, name: str, path: Path) -> Path:
        self.checksums[name] = hashlib.sha256(path.read_bytes()).hexdigest()
        logger.info("artifact %s", path)
        return path

    def write_text(self, name: str, text: str) -> Path:
        return self._record(name, self.store.write_text(name, text))

    def write_csv(self, name: str, headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        return self._record(name, self.store.write_csv(name, headers, rows))

    def write_json(self, name: str, payload: Dict) -> Path:
        return self._record(name, self.store.write_json(name, payload))

    def write_report(self, report: ReportPort, csv_name: str = "", json_name: str = "") -> List[Path]:
        """Persist a report as CSV, JSON or both.

        Args:
            report (ReportPort): Report to write.
            csv_name (str): CSV file name; skipped when empty.
            json_name (str): JSON file name; skipped when empty.

        Returns:
            List[Path]: Written files.
        """
        written = []
        if csv_name:
            written.append(self.write_csv(csv_name, report.headers(), report.rows()))
        if json_name:
            written.append(self.write_json(json_name, report.payload()))
        return written

    def write_manifest(self, config_sha256: str, stage_seconds: Dict[str, float]) -> Dict:
        """Write manifest.json: config hash, version, per-stage wall times and checksums.

        The creation timestamp and wall times are the only run-dependent values.
        """
        manifest = {
            "schema_version": 1,
            "config_sha256": config_sha256,
            "version": __version__,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "stages": {name: round(seconds, 6) for name, seconds in stage_seconds.items()},
            "files": dict(sorted(self.checksums.items())),
        }
        self.store.write_json(MANIFEST_FILE, manifest)
        return manifest

    def verify_checksums(self) -> Dict[str, bool]:
        """Recompute every recorded checksum from disk."""
        result = {}
        for name, digest in self.checksums.items():
            data = self.store.read_bytes(name)
            result[name] = data is not None and hashlib.sha256(data).hexdigest() == digest
        return result
