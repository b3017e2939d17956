"""Append-only JSONL manifest of generated samples."""

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ValidationError, model_validator

from ..ddim import DiffusionConfig
from ..logs import get_logger
from ..metrics import MetricReport
from ..prism import ChromaSpec, NoiseSpec

logger = get_logger(__name__)

MANIFEST_FILE = "manifest.jsonl"
IMAGES_DIR = "images"
INPUTS_DIR = "inputs"


class SampleSeeds(BaseModel):
    noise: int
    chroma: int
    diffusion: int
    style: int


class ManifestRecord(BaseModel):
    """One generated sample. Paths under the run directory are stored relative to it."""
    id: str
    mask_path: str
    image_path: Optional[str] = None
    input_path: Optional[str] = None
    seeds: SampleSeeds
    noise: NoiseSpec
    chroma: ChromaSpec
    diffusion: DiffusionConfig
    style: Optional[dict] = None
    chroma_order: Literal["after_noise"] = "after_noise"
    metrics: Optional[MetricReport] = None
    status: Literal["ok", "failed"]
    error: Optional[str] = None

    @model_validator(mode="after")
    def _image_matches_status(self):
        if self.status == "ok" and self.image_path is None:
            raise ValueError("ok records must point at an image")
        if self.status == "failed" and self.image_path is not None:
            raise ValueError("failed records must not point at an image")
        return self


@dataclass
class Manifest:
    path: Path
    records: list[ManifestRecord] = field(default_factory=list)

    @property
    def root(self) -> Path:
        return self.path.parent

    def latest(self) -> list[ManifestRecord]:
        """Last record per id, in first-seen order. A resumed run may retry failed ids."""
        by_id: dict[str, ManifestRecord] = {}
        for record in self.records:
            by_id[record.id] = record
        return list(by_id.values())

    def ok(self) -> list[ManifestRecord]:
        return [r for r in self.latest() if r.status == "ok"]

    def failed(self) -> list[ManifestRecord]:
        return [r for r in self.latest() if r.status == "failed"]

    def resolve(self, relative: str) -> Path:
        return self.root / relative


class ManifestWriter:
    """Thread-safe line appender; each record is flushed as soon as it is written."""

    def __init__(self, path: Path):
        self.path = path
        self._lock = threading.Lock()
        self._file = None

    def __enter__(self) -> "ManifestWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        torn = False
        if self.path.exists() and self.path.stat().st_size > 0:
            with open(self.path, "rb") as f:
                f.seek(-1, 2)
                torn = f.read(1) != b"\n"
        self._file = open(self.path, "a")
        if torn:
            # a crash left a partial line; start the next record on its own line
            self._file.write("\n")
        return self

    def __exit__(self, *exc) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def append(self, record: ManifestRecord) -> None:
        line = record.model_dump_json()
        with self._lock:
            self._file.write(line + "\n")
            self._file.flush()


def read_manifest(path: str | Path) -> Manifest:
    """Load records, skipping lines a crash left unreadable."""
    path = Path(path)
    manifest = Manifest(path=path)
    if not path.exists():
        return manifest

    with open(path, "r") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                manifest.records.append(ManifestRecord.model_validate(json.loads(line)))
            except (json.JSONDecodeError, ValidationError) as exc:
                logger.warning("skipping manifest line path=%s line=%d error=%s", path, lineno, exc.__class__.__name__)
    return manifest
