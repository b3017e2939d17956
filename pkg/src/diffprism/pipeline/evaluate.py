"""Aggregate metrics over the ok records of a manifest."""

from concurrent.futures import ThreadPoolExecutor
from functools import reduce
from pathlib import Path
from typing import Optional

import numpy as np

from ..backends import Capability, DenoiseBackend
from ..ddim import DEFAULT_PROMPT
from ..errors import ConfigurationError, DegenerateLabelsError, EmptyInputError, InsufficientDataError
from ..imagecore import BinaryMask, ImageRGB, load_image, load_mask
from ..logs import get_logger
from ..metrics import (
    GaussianStats,
    MetricReport,
    MetricValue,
    MomentAccumulator,
    clip_score,
    frechet_distance,
    mean_pairwise_distance,
    morphology_similarity,
    nfid,
    shannon_entropy,
    train_mask_classifier,
)
from .config import EvalConfig
from .manifest import Manifest, read_manifest

logger = get_logger(__name__)

REFERENCE_SUFFIXES = {".png", ".tif", ".tiff", ".jpg", ".jpeg"}


def load_reference_set(reference_dir: Path) -> list[ImageRGB]:
    if not reference_dir.is_dir():
        raise ConfigurationError(f"Reference set not found: {reference_dir}")
    paths = sorted(p for p in reference_dir.iterdir() if p.suffix.lower() in REFERENCE_SUFFIXES)
    if not paths:
        raise EmptyInputError(f"Reference directory {reference_dir} holds no images")
    return [load_image(p) for p in paths]


def _feature_chunks(backend: DenoiseBackend, images: list[ImageRGB], workers: int) -> list[np.ndarray]:
    """Features in input order, one contiguous chunk per worker task."""
    chunks = [idx for idx in np.array_split(np.arange(len(images)), max(workers, 1)) if idx.size]

    def extract(idx: np.ndarray) -> np.ndarray:
        return np.stack([backend.extract_features(images[i]) for i in idx])

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(extract, chunks))


def _moments(chunks: list[np.ndarray]) -> GaussianStats:
    """Merge per-task moments into one Gaussian fit."""
    return reduce(MomentAccumulator.merge, (MomentAccumulator.from_features(c) for c in chunks)).to_stats()


def _morphology(
    images: list[ImageRGB], masks: list[BinaryMask], eval_cfg: EvalConfig, seed: int
) -> Optional[MetricValue]:
    if eval_cfg.ssim_mode == "literal":
        scores = [morphology_similarity(img, m, None, mode="literal") for img, m in zip(images, masks)]
        return MetricValue(value=float(np.mean(scores)), n_samples=len(scores))

    # even positions train the classifier, odd positions are scored
    train = list(zip(images[::2], masks[::2]))
    held_out = list(zip(images[1::2], masks[1::2])) or train
    try:
        clf = train_mask_classifier(
            train,
            seed=seed,
            n_estimators=eval_cfg.classifier_trees,
            max_depth=eval_cfg.classifier_depth,
            pixel_budget=eval_cfg.pixel_budget,
        )
    except DegenerateLabelsError as exc:
        logger.warning("ssim skipped reason=%s", exc)
        return None
    scores = [morphology_similarity(img, m, clf) for img, m in held_out]
    return MetricValue(value=float(np.mean(scores)), n_samples=len(scores))


def evaluate_records(
    manifest: Manifest,
    backend: DenoiseBackend,
    eval_cfg: EvalConfig,
    prompt: str = DEFAULT_PROMPT,
    seed: int = 0,
    workers: int = 1,
) -> MetricReport:
    """Compute every enabled metric the backend can support."""
    records = manifest.ok()
    if not records:
        raise EmptyInputError(f"Manifest {manifest.path} has no ok records to evaluate")
    if len(records) < eval_cfg.min_samples:
        raise InsufficientDataError(
            f"Manifest {manifest.path} has {len(records)} ok records, {eval_cfg.min_samples} required"
        )

    images = [load_image(manifest.resolve(r.image_path)) for r in records]
    n = len(images)
    report: dict = {"params": {**eval_cfg.model_dump(mode="json"), "prompt": prompt, "records": n}}

    needs_features = eval_cfg.fid or eval_cfg.diversity
    features = None
    if needs_features and backend.supports(Capability.EXTRACT_FEATURES):
        chunks = _feature_chunks(backend, images, workers)
        features = np.vstack(chunks)
    elif needs_features:
        logger.warning("features unavailable backend=%s; fid and diversity skipped", backend.name)

    if eval_cfg.fid and features is not None:
        if eval_cfg.reference_dir is None:
            raise ConfigurationError("FID is enabled but no reference_dir is configured")
        reference = _feature_chunks(backend, load_reference_set(eval_cfg.reference_dir), workers)
        fid_value = frechet_distance(_moments(chunks), _moments(reference))
        report["fid"] = MetricValue(value=fid_value, n_samples=n)
        if eval_cfg.nfid_normalizer is not None:
            report["nfid"] = MetricValue(value=nfid(fid_value, eval_cfg.nfid_normalizer), n_samples=n)

    if eval_cfg.diversity and features is not None and n >= 2:
        report["diversity"] = MetricValue(value=mean_pairwise_distance(features), n_samples=n)

    if eval_cfg.ssim:
        masks = [load_mask(r.mask_path, eval_cfg.mask_threshold) for r in records]
        report["ssim"] = _morphology(images, masks, eval_cfg, seed)

    if eval_cfg.clip and backend.supports(Capability.EMBED_IMAGE, Capability.EMBED_TEXT):
        text_vec = backend.embed_text(prompt)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            image_vecs = list(pool.map(backend.embed_image, images))
        scores = [clip_score(v, text_vec) for v in image_vecs]
        report["clip_score"] = MetricValue(value=float(np.mean(scores)), n_samples=n)

    if eval_cfg.entropy:
        report["entropy_bits"] = MetricValue(value=float(np.mean([shannon_entropy(img) for img in images])), n_samples=n)

    result = MetricReport(**report)
    logger.info("evaluate manifest=%s records=%d %s", manifest.path, n, " ".join(
        f"{k}={v:.4g}" for k, v in result.flat().items() if v is not None and not k.endswith("_n")
    ))
    return result


def evaluate_manifest(
    manifest_path: str | Path,
    backend: DenoiseBackend,
    eval_cfg: EvalConfig = EvalConfig(),
    prompt: str = DEFAULT_PROMPT,
    seed: int = 0,
    workers: int = 1,
) -> MetricReport:
    return evaluate_records(read_manifest(manifest_path), backend, eval_cfg, prompt, seed, workers)
