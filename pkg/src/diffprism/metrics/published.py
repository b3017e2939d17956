"""Published reference values (nFID-10k, CLIP score, SSIM) for plot overlays and sanity checks.

These were measured with a pretrained SD1.5, CLIP ViT-B/32 and an Inception
extractor at 10 000 images per setting; they are not reproducible at desk scale.
"""

from typing import NamedTuple


class PublishedRow(NamedTuple):
    nfid: float
    clip_score: float
    ssim: float
    noise_sigma: float | None = None


BENCHMARK = {
    "SD1.5": PublishedRow(0.6039, 28.73, 0.9692),
    "ControlNet (best)": PublishedRow(0.8531, 27.97, 0.9801),
    "Uni-ControlNet": PublishedRow(0.8311, 28.01, 0.9378),
    "Fully random (strength 1.0)": PublishedRow(0.8893, 27.77, 0.5067),
    "Prism sigma=0.01": PublishedRow(0.5238, 28.78, 0.9697, 0.01),
    "Prism sigma=0.05": PublishedRow(0.4594, 29.42, 0.9636, 0.05),
    "Prism sigma=0.1": PublishedRow(0.4444, 29.47, 0.9566, 0.1),
    "Prism sigma=0.5": PublishedRow(0.4241, 29.40, 0.9254, 0.5),
    "Prism sigma=1.0": PublishedRow(0.4887, 29.19, 0.9254, 1.0),
}

ABLATION = {
    "none": PublishedRow(0.6039, 28.73, 0.9692),
    "noise": PublishedRow(0.5330, 28.78, 0.9718),
    "chroma": PublishedRow(0.5727, 29.03, 0.9726),
    "noise+chroma": PublishedRow(0.4241, 29.47, 0.9697),
}

# sigma grid of the noise-amount sweep
SWEEP_SIGMAS = (0.0, 0.01, 0.05, 0.1, 0.5, 1.0)
