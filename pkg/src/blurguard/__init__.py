"""Robust adversarial image protection via learnable per-region Gaussian blur.

The perturbation is blurred region by region with intensities fitted to keep
the protected image's radial power spectrum close to the original's, then
optimized with l2-normalized PGD. A purification suite and a worst-case
evaluation harness measure how much protection survives.
"""

from .blur import SIGMA_MAX, SIGMA_MIN, BlurKernel, adjoint_blur, apply_blur, build_kernel, kernel_sigma_grad
from .compose import RegionBlurState, compose, compose_grads
from .image import MaskSet, canonicalize_masks, load_image, load_masks, save_image
from .metrics import EvalReport, evaluate, protection_strength, psnr, ssim
from .objectives import PoolObjective, RefEncoder, parse_objective
from .protect import ProtectConfig, ProtectResult, protect, stage1_fit_omega, stage2_pgd
from .purify import DEFAULT_BATTERY, jpeg_like, parse_op, purify, rescale
from .spectrum import SpectrumProfile, forward_spectrum, l_freq, l_freq_grad, rapsd

__version__ = "0.1.0"
