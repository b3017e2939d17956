"""diffprism: training-free mask-to-image augmentation with diffusion img2img.

A binary mask is rendered into a noisy, styled RGB image (the Prism transform)
and handed to an image-to-image denoiser at moderate strength, so the mask's
morphology survives while background detail varies from seed to seed.
"""

__version__ = "1.0.0"
