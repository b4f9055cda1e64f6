"""
Run manifests written next to every CLI output.
"""
import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


def file_digest(path: str) -> str:
    """sha256 of a file's bytes."""
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunManifest:
    command: str
    config: Dict[str, Any]
    seed: Optional[int]
    version: str
    started_at: str = field(default_factory=_now)
    finished_at: Optional[str] = None
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)

    def add_input(self, path: str) -> None:
        self.inputs[os.path.abspath(path)] = file_digest(path)

    def add_output(self, path: str) -> None:
        self.outputs[os.path.basename(path)] = file_digest(path)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def write(self, out_dir: str) -> str:
        """Stamp the finish time and write manifest.json into ``out_dir``."""
        os.makedirs(out_dir, exist_ok=True)
        self.finished_at = _now()
        path = os.path.join(out_dir, MANIFEST_NAME)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True, default=str)
        logger.info(f"wrote manifest: {path}")
        return path

    @classmethod
    def load(cls, path: str) -> 'RunManifest':
        with open(path, 'r', encoding='utf-8') as f:
            return cls(**json.load(f))
