"""Filesystem Artifact Store - Atomic write-temp-rename persistence of run outputs."""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

from ..contracts import ArtifactStorePort

logger = logging.getLogger(__name__)


class FileArtifactStore(ArtifactStorePort):
    """Store writing every artifact below one output directory."""

    def __init__(self, root: Union[str, Path]):
        """Initialize the store.

        Args:
            root (Union[str, Path]): Output directory; created by ``connect``.
        """
        self.root = Path(root)
        self._connected = False

    def connect(self) -> None:
        """Create the output directory if it does not yet exist.

        Raises:
            OSError: If the directory cannot be created.
        """
        if not self._connected:
            self.root.mkdir(parents=True, exist_ok=True)
            self._connected = True

    def path(self, name: str) -> Path:
        return self.root / name

    def _write_bytes(self, name: str, data: bytes) -> Path:
        self.connect()
        target = self.path(name)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, temp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(data)
            os.replace(temp, target)
        except BaseException:
            if os.path.exists(temp):
                os.unlink(temp)
            raise
        logger.debug("wrote %s (%d bytes)", target, len(data))
        return target

    def write_text(self, name: str, text: str) -> Path:
        return self._write_bytes(name, text.encode("utf-8"))

    def write_csv(self, name: str, headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(headers)
        writer.writerows(rows)
        return self.write_text(name, buffer.getvalue())

    def write_json(self, name: str, payload: Dict) -> Path:
        return self.write_text(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def read_bytes(self, name: str) -> Optional[bytes]:
        target = self.path(name)
        return target.read_bytes() if target.exists() else None
