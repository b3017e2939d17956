"""Job configuration: pydantic models loaded from TOML or JSON."""

import json
import tomllib
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..backends import Codec, DenoiseBackend, create_backend
from ..ddim import DiffusionConfig
from ..errors import ConfigurationError, EmptyInputError
from ..prism import ChromaSpec, NoiseSpec

SEED_MAX = 2**64 - 1
MASK_SUFFIXES = {".png", ".tif", ".tiff"}
CONFIG_ECHO = "config.echo.json"


class BackendConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["toy", "remote"] = "toy"
    url: Optional[str] = None
    timeout_s: Optional[float] = Field(default=None, gt=0)
    model_id: str = ""
    codec: Codec = Codec.IDENTITY
    predictor_gain: float = 0.1
    gain_slope: float = 0.0


class EvalConfig(BaseModel):
    """Metric toggles and evaluation settings."""
    model_config = ConfigDict(frozen=True)

    fid: bool = False
    ssim: bool = True
    clip: bool = True
    entropy: bool = True
    diversity: bool = True
    reference_dir: Optional[Path] = None
    nfid_normalizer: Optional[float] = Field(default=None, gt=0)
    ssim_mode: Literal["predicted", "literal"] = "predicted"
    mask_threshold: float = Field(default=0.5, gt=0, lt=1)
    classifier_trees: int = Field(default=50, ge=1)
    classifier_depth: int = Field(default=12, ge=1)
    pixel_budget: int = Field(default=20_000, ge=1)
    min_samples: int = Field(default=1, ge=1)


class JobConfig(BaseModel):
    """Everything needed to reproduce a generation run from seeds alone."""
    model_config = ConfigDict(frozen=True)

    masks: list[Path] | Path
    style: str = "random"
    noise: NoiseSpec = NoiseSpec(mu=0.0)
    chroma: ChromaSpec = ChromaSpec()
    diffusion: DiffusionConfig = DiffusionConfig()
    backend: BackendConfig = BackendConfig()
    samples_per_mask: int = Field(default=1, ge=1)
    output_dir: Path = Path("out")
    eval: EvalConfig = EvalConfig()
    seed: int = Field(default=0, ge=0, le=SEED_MAX)
    workers: int = Field(default=1, ge=1)
    save_inputs: bool = False
    mask_threshold: float = Field(default=0.5, gt=0, lt=1)
    style_size: int = Field(default=512, ge=1)

    @field_validator("noise", mode="before")
    @classmethod
    def _noise_mean_defaults_to_zero(cls, value):
        # job files leave mu out for zero-mean noise; an explicit null takes the style mean
        if isinstance(value, dict) and "mu" not in value:
            return {**value, "mu": 0.0}
        return value

    @field_validator("style")
    @classmethod
    def _style_is_random_or_path(cls, value: str) -> str:
        if value != "random" and not value.strip():
            raise ValueError("style must be 'random' or a reference image path")
        return value

    def resolve_masks(self) -> list[Path]:
        """Sorted mask files; a directory contributes its PNG/TIFF files."""
        entries = [self.masks] if isinstance(self.masks, Path) else list(self.masks)
        found: list[Path] = []
        for entry in entries:
            if entry.is_dir():
                found.extend(sorted(p for p in entry.iterdir() if p.suffix.lower() in MASK_SUFFIXES))
            else:
                found.append(entry)
        if not found:
            raise EmptyInputError(f"No mask images found in {self.masks}")
        stems = [p.stem for p in found]
        if len(set(stems)) != len(stems):
            raise ConfigurationError("Mask file names must be unique; record ids are derived from them")
        return found

    def with_updates(self, **updates) -> "JobConfig":
        """Validated copy with top-level fields replaced."""
        try:
            return JobConfig.model_validate({**self.model_dump(), **updates})
        except ValidationError as exc:
            raise ConfigurationError(f"Invalid job configuration: {exc}") from exc


def load_job_config(path: str | Path) -> JobConfig:
    """Read a TOML or JSON job file."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Config file not found: {path}")
    try:
        if path.suffix.lower() == ".toml":
            with open(path, "rb") as f:
                data = tomllib.load(f)
        else:
            with open(path, "r") as f:
                data = json.load(f)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"Cannot parse config {path}: {exc}") from exc

    try:
        return JobConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(f"Invalid job configuration in {path}:\n{exc}") from exc


def write_config_echo(payload: BaseModel | dict, out_dir: Path, name: str = CONFIG_ECHO) -> Path:
    """Write the effective configuration, defaults included."""
    out_dir.mkdir(parents=True, exist_ok=True)
    data = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
    path = out_dir / name
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def build_backend(cfg: BackendConfig) -> DenoiseBackend:
    return create_backend(
        cfg.kind,
        url=cfg.url,
        timeout_s=cfg.timeout_s,
        model_id=cfg.model_id,
        codec=cfg.codec,
        predictor_gain=cfg.predictor_gain,
        gain_slope=cfg.gain_slope,
    )
