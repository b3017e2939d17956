"""Per-pixel random forest that recovers a mask from a generated image."""

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.ndimage import uniform_filter
from sklearn.ensemble import RandomForestClassifier

from ..errors import DegenerateLabelsError, DimensionError, InsufficientDataError
from ..imagecore import BinaryMask, ImageRGB
from .ssim import ssim


@dataclass(frozen=True)
class FeatureSpec:
    """RGB plus local mean and std of each channel over a square window."""
    window: int = 5

    @property
    def n_features(self) -> int:
        return 9


@dataclass(frozen=True)
class MaskClassifier:
    model: RandomForestClassifier
    feature_spec: FeatureSpec
    training_meta: dict = field(default_factory=dict)


def pixel_features(image: ImageRGB, spec: FeatureSpec = FeatureSpec()) -> np.ndarray:
    """(H*W, 9) array: R, G, B, local means, local stds."""
    size = (spec.window, spec.window, 1)
    pixels = image.pixels
    mean = uniform_filter(pixels, size=size, mode="reflect")
    sq_mean = uniform_filter(pixels * pixels, size=size, mode="reflect")
    std = np.sqrt(np.clip(sq_mean - mean * mean, 0.0, None))
    return np.concatenate([pixels, mean, std], axis=2).reshape(-1, spec.n_features)


def train_mask_classifier(
    pairs: Sequence[tuple[ImageRGB, BinaryMask]],
    seed: int = 0,
    n_estimators: int = 50,
    max_depth: int = 12,
    pixel_budget: int = 20_000,
    feature_spec: FeatureSpec = FeatureSpec(),
) -> MaskClassifier:
    """Fit a forest on subsampled pixels; mask bits are the labels."""
    if not pairs:
        raise InsufficientDataError("Need at least one (image, mask) pair to train")

    rng = np.random.default_rng(seed)
    features, labels = [], []
    for image, mask in pairs:
        if image.shape != mask.shape:
            raise DimensionError(f"Image {image.shape} and mask {mask.shape} differ in size")
        x = pixel_features(image, feature_spec)
        y = mask.values.reshape(-1)
        if x.shape[0] > pixel_budget:
            keep = rng.choice(x.shape[0], size=pixel_budget, replace=False)
            x, y = x[keep], y[keep]
        features.append(x)
        labels.append(y)

    x_all = np.concatenate(features)
    y_all = np.concatenate(labels)
    if np.unique(y_all).size < 2:
        raise DegenerateLabelsError("Training masks contain a single class; nothing to separate")

    model = RandomForestClassifier(
        n_estimators=n_estimators,
        max_depth=max_depth,
        random_state=seed % 2**32,
        n_jobs=1,
    )
    model.fit(x_all, y_all)
    return MaskClassifier(
        model=model,
        feature_spec=feature_spec,
        training_meta={
            "pairs": len(pairs),
            "pixels": int(y_all.size),
            "foreground_fraction": float(y_all.mean()),
            "seed": seed,
            "n_estimators": n_estimators,
            "max_depth": max_depth,
        },
    )


def predict_mask(clf: MaskClassifier, image: ImageRGB) -> BinaryMask:
    labels = clf.model.predict(pixel_features(image, clf.feature_spec))
    return BinaryMask(labels.reshape(image.height, image.width).astype(np.uint8))


def morphology_similarity(
    generated: ImageRGB,
    gt_mask: BinaryMask,
    clf: MaskClassifier | None,
    mode: Literal["predicted", "literal"] = "predicted",
) -> float:
    """SSIM between the recovered mask and the ground truth.

    ``mode="literal"`` instead compares the generated image's luma to the mask
    directly, without a classifier.
    """
    if mode == "literal":
        if generated.shape != gt_mask.shape:
            raise DimensionError(f"Image {generated.shape} and mask {gt_mask.shape} differ in size")
        return ssim(generated.to_gray(), gt_mask.values.astype(np.float64))
    if clf is None:
        raise ValueError("A trained MaskClassifier is required in predicted mode")
    return ssim(predict_mask(clf, generated), gt_mask)
