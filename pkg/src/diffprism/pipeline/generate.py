"""Dataset generation: mask -> Prism input -> img2img -> image + manifest record."""

import shutil
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from ..backends import DenoiseBackend
from ..ddim import Schedule, img2img, make_schedule, timesteps
from ..errors import OutputExistsError
from ..imagecore import ChannelStats, channel_stats, load_image, load_mask, save_image
from ..logs import get_logger
from ..prism import apply_prism, random_style
from .config import JobConfig, build_backend
from .manifest import (
    IMAGES_DIR,
    INPUTS_DIR,
    MANIFEST_FILE,
    Manifest,
    ManifestRecord,
    ManifestWriter,
    SampleSeeds,
    read_manifest,
)

logger = get_logger(__name__)

# stream tags keep the four per-sample generators independent
_NOISE, _CHROMA, _DIFFUSION, _STYLE = range(4)


def _derive(base: int, spec_seed: int, stream: int, mask_idx: int, sample_idx: int) -> int:
    seq = np.random.SeedSequence([base, spec_seed, stream, mask_idx, sample_idx])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def sample_seeds(cfg: JobConfig, mask_idx: int, sample_idx: int) -> SampleSeeds:
    """Per-sample seeds; a function of the config and the sample position only."""
    return SampleSeeds(
        noise=_derive(cfg.seed, cfg.noise.seed, _NOISE, mask_idx, sample_idx),
        chroma=_derive(cfg.seed, cfg.chroma.seed, _CHROMA, mask_idx, sample_idx),
        diffusion=_derive(cfg.seed, cfg.diffusion.seed, _DIFFUSION, mask_idx, sample_idx),
        style=_derive(cfg.seed, 0, _STYLE, mask_idx, sample_idx),
    )


def record_id(mask_path: Path, sample_idx: int) -> str:
    return f"{mask_path.stem}-{sample_idx:04d}"


def resolve_style(cfg: JobConfig) -> Optional[ChannelStats]:
    """Reference statistics, or None when each sample draws a random style."""
    if cfg.style == "random":
        return None
    return channel_stats(load_image(cfg.style))


def diffusion_schedule(cfg: JobConfig) -> Schedule:
    """Build the noise schedule once per run so bad settings fail before any sample."""
    d = cfg.diffusion
    sched = make_schedule(d.train_steps, d.beta_start, d.beta_end)
    timesteps(d.steps, sched.T, d.spacing)
    return sched


def generate_sample(
    cfg: JobConfig,
    backend: DenoiseBackend,
    mask_idx: int,
    mask_path: Path,
    sample_idx: int,
    style: Optional[ChannelStats],
    sched: Optional[Schedule] = None,
) -> ManifestRecord:
    seeds = sample_seeds(cfg, mask_idx, sample_idx)
    noise = cfg.noise.model_copy(update={"seed": seeds.noise})
    chroma = cfg.chroma.model_copy(update={"seed": seeds.chroma})
    diffusion = cfg.diffusion.model_copy(update={"seed": seeds.diffusion})
    rid = record_id(mask_path, sample_idx)
    common = dict(id=rid, mask_path=str(mask_path), seeds=seeds, noise=noise, chroma=chroma, diffusion=diffusion)

    input_path = None
    try:
        mask = load_mask(mask_path, cfg.mask_threshold)
        if style is None:
            style = random_style(seeds.style, cfg.style_size, cfg.style_size)
        prismed = apply_prism(mask, style, noise, chroma)
        if cfg.save_inputs:
            input_path = f"{INPUTS_DIR}/{rid}.png"
            save_image(prismed, cfg.output_dir / input_path)
        out = img2img(prismed, backend, diffusion, sched)
        image_path = f"{IMAGES_DIR}/{rid}.png"
        save_image(out, cfg.output_dir / image_path)
    except Exception as exc:
        logger.error("generate id=%s status=failed error=%s", rid, exc)
        return ManifestRecord(
            **common,
            input_path=input_path,
            style=style.to_dict() if style is not None else None,
            status="failed",
            error=f"{exc.__class__.__name__}: {exc}",
        )

    logger.debug("generate id=%s status=ok", rid)
    return ManifestRecord(
        **common,
        image_path=image_path,
        input_path=input_path,
        style=style.to_dict(),
        status="ok",
    )


def _prepare_output(cfg: JobConfig, force: bool, resume: bool) -> Path:
    manifest_path = cfg.output_dir / MANIFEST_FILE
    if manifest_path.exists() and not (force or resume):
        raise OutputExistsError(
            f"{cfg.output_dir} already holds a run. Use --force to overwrite or --resume to continue."
        )
    if force and not resume:
        manifest_path.unlink(missing_ok=True)
        for sub in (IMAGES_DIR, INPUTS_DIR):
            if (cfg.output_dir / sub).is_dir():
                shutil.rmtree(cfg.output_dir / sub)
    (cfg.output_dir / IMAGES_DIR).mkdir(parents=True, exist_ok=True)
    if cfg.save_inputs:
        (cfg.output_dir / INPUTS_DIR).mkdir(parents=True, exist_ok=True)
    return manifest_path


def generate_dataset(
    cfg: JobConfig,
    backend: Optional[DenoiseBackend] = None,
    *,
    force: bool = False,
    resume: bool = False,
) -> Manifest:
    """Generate samples_per_mask images for every mask and append them to the manifest.

    Workers run in parallel, but records are written in submission order so the
    manifest does not depend on the pool width.
    """
    masks = cfg.resolve_masks()
    sched = diffusion_schedule(cfg)
    manifest_path = _prepare_output(cfg, force, resume)
    done = {r.id for r in read_manifest(manifest_path).ok()} if resume else set()
    style = resolve_style(cfg)

    jobs = [
        (mask_idx, mask_path, sample_idx)
        for mask_idx, mask_path in enumerate(masks)
        for sample_idx in range(cfg.samples_per_mask)
        if record_id(mask_path, sample_idx) not in done
    ]
    if done:
        logger.info("resume skipped=%d remaining=%d", len(done), len(jobs))

    owns_backend = backend is None
    backend = backend or build_backend(cfg.backend)
    n_ok = n_failed = 0
    try:
        with ManifestWriter(manifest_path) as writer, ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(generate_sample, cfg, backend, *job, style, sched) for job in jobs]
            for future in futures:
                record = future.result()
                writer.append(record)
                if record.status == "ok":
                    n_ok += 1
                else:
                    n_failed += 1
    finally:
        if owns_backend:
            backend.close()

    logger.info("generate out=%s ok=%d failed=%d", cfg.output_dir, n_ok, n_failed)
    return read_manifest(manifest_path)
