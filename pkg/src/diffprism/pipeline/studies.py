"""Experiment drivers: noise-amount sweep, noise-type study and the four-arm ablation."""

from pathlib import Path
from typing import Annotated, Iterable, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, TypeAdapter, ValidationError

from ..backends import DenoiseBackend
from ..errors import ConfigurationError
from ..imagecore import load_image
from ..logs import get_logger
from ..metrics import MetricReport, detail_entropy, shannon_entropy
from ..prism import ChromaMode, ChromaSpec, NoiseKind, NoiseSpec
from .config import JobConfig, build_backend
from .evaluate import evaluate_records
from .generate import generate_dataset

logger = get_logger(__name__)

REPORT_FILE = "report.json"


class SweepPoint(BaseModel):
    value: float
    metrics: MetricReport
    n_samples: int
    n_failed: int = 0


class SweepReport(BaseModel):
    kind: Literal["sweep"] = "sweep"
    axis: str = "noise_sigma"
    points: list[SweepPoint]

    def rows(self) -> list[dict]:
        return [
            {self.axis: p.value, "n_samples": p.n_samples, "n_failed": p.n_failed, **p.metrics.flat()}
            for p in self.points
        ]


class NoiseStudyEntry(BaseModel):
    noise_kind: NoiseKind
    input_entropy: float
    input_detail_entropy: float
    output_entropy: float
    output_detail_entropy: float
    n_samples: int
    n_failed: int = 0


class NoiseStudyReport(BaseModel):
    kind: Literal["noise_study"] = "noise_study"
    axis: str = "noise_kind"
    entries: list[NoiseStudyEntry]

    def rows(self) -> list[dict]:
        return [{**e.model_dump(mode="json")} for e in self.entries]


AblationArmName = Literal["none", "noise", "chroma", "noise+chroma"]
ABLATION_ARMS: tuple[AblationArmName, ...] = ("none", "noise", "chroma", "noise+chroma")


class AblationArm(BaseModel):
    name: AblationArmName
    metrics: MetricReport
    n_samples: int
    n_failed: int = 0
    masks: list[str]


class AblationReport(BaseModel):
    kind: Literal["ablation"] = "ablation"
    axis: str = "arm"
    arms: list[AblationArm]

    def rows(self) -> list[dict]:
        return [
            {self.axis: a.name, "n_samples": a.n_samples, "n_failed": a.n_failed, **a.metrics.flat()}
            for a in self.arms
        ]


Report = Annotated[Union[SweepReport, NoiseStudyReport, AblationReport], Field(discriminator="kind")]
_report_adapter = TypeAdapter(Report)


def save_report(report: SweepReport | NoiseStudyReport | AblationReport, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.model_dump_json(indent=2) + "\n")
    return path


def load_report(path: str | Path) -> SweepReport | NoiseStudyReport | AblationReport:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Report file not found: {path}")
    try:
        return _report_adapter.validate_json(path.read_text())
    except ValidationError as exc:
        raise ConfigurationError(f"{path} is not a diffprism report:\n{exc}") from exc


def _check_reference(cfg: JobConfig) -> None:
    if cfg.eval.fid and cfg.eval.reference_dir is None:
        raise ConfigurationError("FID is enabled but no reference_dir is configured")


def _run_arm(cfg: JobConfig, backend: DenoiseBackend, force: bool):
    manifest = generate_dataset(cfg, backend, force=force)
    metrics = evaluate_records(
        manifest, backend, cfg.eval, prompt=cfg.diffusion.prompt, seed=cfg.seed, workers=cfg.workers
    )
    return manifest, metrics


class _Backend:
    """Shares one backend across arms; closes it only if it was created here."""

    def __init__(self, cfg: JobConfig, backend: Optional[DenoiseBackend]):
        self.owned = backend is None
        self.backend = backend or build_backend(cfg.backend)

    def __enter__(self) -> DenoiseBackend:
        return self.backend

    def __exit__(self, *exc) -> None:
        if self.owned:
            self.backend.close()


def run_noise_sweep(
    cfg: JobConfig,
    sigmas: Iterable[float],
    backend: Optional[DenoiseBackend] = None,
    *,
    force: bool = False,
) -> SweepReport:
    """One generated set per noise sigma, evaluated with a per-sigma classifier."""
    sigmas = [float(s) for s in sigmas]
    if not sigmas:
        raise ConfigurationError("Sweep needs at least one sigma")
    if any(s < 0 for s in sigmas):
        raise ConfigurationError(f"Noise sigma must be non-negative, got {sigmas}")
    _check_reference(cfg)

    points = []
    with _Backend(cfg, backend) as shared:
        for sigma in sigmas:
            sub = cfg.with_updates(
                noise=cfg.noise.model_copy(update={"sigma": sigma}),
                output_dir=cfg.output_dir / "sweep" / f"sigma_{sigma:g}",
            )
            manifest, metrics = _run_arm(sub, shared, force)
            points.append(SweepPoint(
                value=sigma, metrics=metrics, n_samples=len(manifest.ok()), n_failed=len(manifest.failed())
            ))
            logger.info("sweep sigma=%g ok=%d", sigma, len(manifest.ok()))
    return SweepReport(points=points)


def _parse_kinds(kinds: Iterable[str | NoiseKind]) -> list[NoiseKind]:
    parsed = []
    for kind in kinds:
        try:
            parsed.append(NoiseKind(kind))
        except ValueError:
            allowed = ", ".join(k.value for k in NoiseKind)
            raise ConfigurationError(f"Unknown noise kind '{kind}'. Choose from: {allowed}") from None
    if not parsed:
        raise ConfigurationError("Noise-type study needs at least one noise kind")
    return parsed


def run_noise_type_study(
    cfg: JobConfig,
    kinds: Iterable[str | NoiseKind],
    backend: Optional[DenoiseBackend] = None,
    *,
    force: bool = False,
) -> NoiseStudyReport:
    """Entropy of Prism inputs and generated outputs for each noise kind."""
    parsed = _parse_kinds(kinds)
    _check_reference(cfg)

    entries = []
    with _Backend(cfg, backend) as shared:
        for kind in parsed:
            sub = cfg.with_updates(
                noise=cfg.noise.model_copy(update={"kind": kind}),
                save_inputs=True,
                output_dir=cfg.output_dir / "noise_study" / kind.value,
            )
            manifest = generate_dataset(sub, shared, force=force)
            ok = manifest.ok()
            if not ok:
                raise ConfigurationError(f"No sample generated for noise kind {kind.value}")
            inputs = [load_image(manifest.resolve(r.input_path)) for r in ok]
            outputs = [load_image(manifest.resolve(r.image_path)) for r in ok]
            entries.append(NoiseStudyEntry(
                noise_kind=kind,
                input_entropy=float(np.mean([shannon_entropy(x) for x in inputs])),
                input_detail_entropy=float(np.mean([detail_entropy(x) for x in inputs])),
                output_entropy=float(np.mean([shannon_entropy(x) for x in outputs])),
                output_detail_entropy=float(np.mean([detail_entropy(x) for x in outputs])),
                n_samples=len(ok),
                n_failed=len(manifest.failed()),
            ))
            logger.info("noise_study kind=%s ok=%d", kind.value, len(ok))
    return NoiseStudyReport(entries=entries)


def ablation_arms(cfg: JobConfig) -> dict[str, tuple[NoiseSpec, ChromaSpec]]:
    """Noise and chroma settings of each arm. Arms without noise keep a zero-mean, zero-deviation field."""
    silent = cfg.noise.model_copy(update={"mu": 0.0, "sigma": 0.0, "kind": NoiseKind.GAUSSIAN})
    off = cfg.chroma.model_copy(update={"mode": ChromaMode.NONE})
    on = cfg.chroma if cfg.chroma.mode != ChromaMode.NONE else cfg.chroma.model_copy(
        update={"mode": ChromaMode.PIXEL_SHUFFLE}
    )
    return {
        "none": (silent, off),
        "noise": (cfg.noise, off),
        "chroma": (silent, on),
        "noise+chroma": (cfg.noise, on),
    }


def run_ablation(
    cfg: JobConfig,
    backend: Optional[DenoiseBackend] = None,
    *,
    force: bool = False,
) -> AblationReport:
    """Four arms over the same masks and seeds."""
    _check_reference(cfg)
    masks = [str(p) for p in cfg.resolve_masks()]

    arms = []
    with _Backend(cfg, backend) as shared:
        for name, (noise, chroma) in ablation_arms(cfg).items():
            sub = cfg.with_updates(
                noise=noise,
                chroma=chroma,
                output_dir=cfg.output_dir / "ablation" / name.replace("+", "_"),
            )
            manifest, metrics = _run_arm(sub, shared, force)
            arms.append(AblationArm(
                name=name,
                metrics=metrics,
                n_samples=len(manifest.ok()),
                n_failed=len(manifest.failed()),
                masks=masks,
            ))
            logger.info("ablation arm=%s ok=%d", name, len(manifest.ok()))
    return AblationReport(arms=arms)
