"""Differentiable Gaussian blur of a perturbation.

The blur is a separable depthwise convolution with reflect padding (numpy's
``"reflect"``, i.e. mirrored without repeating the edge sample). Everything is
written against a 1-D primitive so the adjoint and the derivative with
respect to ``sigma`` fall out of the same code path.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

SIGMA_MIN = 0.05
SIGMA_MAX = 10.0
DEFAULT_RADIUS = 7


def gaussian_1d(sigma, k):
    """Unnormalized ``G(z) = exp(-z^2 / 2 sigma^2) / (sigma sqrt(2 pi))`` for z in -k..k."""
    z = np.arange(-k, k + 1, dtype=np.float64)
    return np.exp(-(z * z) / (2.0 * sigma * sigma)) / (sigma * math.sqrt(2.0 * math.pi))


def gaussian_1d_dsigma(sigma, k):
    z = np.arange(-k, k + 1, dtype=np.float64)
    return gaussian_1d(sigma, k) * (z * z / sigma**3 - 1.0 / sigma)


def kernel_weights_1d(sigma, k, normalize=True):
    """1-D kernel and its derivative in sigma (quotient rule when normalized)."""
    g = gaussian_1d(sigma, k)
    dg = gaussian_1d_dsigma(sigma, k)
    if not normalize:
        return g, dg
    s = g.sum()
    w = g / s
    return w, (dg - w * dg.sum()) / s


@dataclass(frozen=True)
class BlurKernel:
    sigma: float
    k: int
    w1d: np.ndarray
    normalized: bool = True

    @property
    def weights(self):
        return np.outer(self.w1d, self.w1d)

    @property
    def size(self):
        return 2 * self.k + 1


def build_kernel(sigma, k=DEFAULT_RADIUS, normalize=True):
    sigma = float(sigma)
    if not (SIGMA_MIN <= sigma <= SIGMA_MAX) or not math.isfinite(sigma):
        raise ValueError(f"sigma={sigma} outside [{SIGMA_MIN}, {SIGMA_MAX}]")
    if int(k) != k or k < 1:
        raise ValueError(f"kernel radius must be a positive integer, got {k}")
    k = int(k)
    w, _ = kernel_weights_1d(sigma, k, normalize)
    w.setflags(write=False)
    return BlurKernel(sigma=sigma, k=k, w1d=w, normalized=normalize)


def reflect_index(n, k):
    """Source index of every sample of a length-``n`` axis reflect-padded by ``k``."""
    p = np.arange(-k, n + k)
    if n == 1:
        return np.zeros_like(p)
    period = 2 * (n - 1)
    m = np.mod(p, period)
    return np.where(m >= n, period - m, m)


@lru_cache(maxsize=128)
def _fold_matrix(n, k):
    """``(n, n + 2k)`` 0/1 matrix summing padded samples back onto their sources."""
    fold = np.zeros((n, n + 2 * k))
    fold[reflect_index(n, k), np.arange(n + 2 * k)] = 1.0
    fold.setflags(write=False)
    return fold


def _correlate_axis(x, w, axis):
    """Reflect-padded 1-D correlation of `x` with taps `w` along `axis`."""
    k = (len(w) - 1) // 2
    n = x.shape[axis]
    xp = np.moveaxis(x, axis, 0).take(reflect_index(n, k), axis=0)
    out = np.zeros((n,) + xp.shape[1:])
    for j, wj in enumerate(w):
        out += wj * xp[j : j + n]
    return np.moveaxis(out, 0, axis)


def _correlate_axis_adjoint(g, w, axis):
    k = (len(w) - 1) // 2
    n = g.shape[axis]
    g0 = np.moveaxis(g, axis, 0)
    gp = np.zeros((n + 2 * k,) + g0.shape[1:])
    for j, wj in enumerate(w):
        gp[j : j + n] += wj * g0
    out = np.tensordot(_fold_matrix(n, k), gp, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def _separable(x, wr, wc):
    return _correlate_axis(_correlate_axis(x, wr, 0), wc, 1)


def apply_blur(delta, kernel):
    """Blur each channel of an ``(H, W, C)`` array; output has the input's shape."""
    delta = np.asarray(delta, dtype=np.float64)
    if delta.size == 0:
        raise ValueError("cannot blur an empty array")
    return _separable(delta, kernel.w1d, kernel.w1d)


def adjoint_blur(upstream, kernel):
    """Adjoint of :func:`apply_blur` (gradient w.r.t. the blurred input)."""
    g = np.asarray(upstream, dtype=np.float64)
    w = kernel.w1d
    return _correlate_axis_adjoint(_correlate_axis_adjoint(g, w, 1), w, 0)


def blur_sigma_derivative(delta, sigma, k=DEFAULT_RADIUS, normalize=True):
    """Elementwise derivative of ``apply_blur(delta)`` with respect to sigma."""
    w, dw = kernel_weights_1d(sigma, k, normalize)
    delta = np.asarray(delta, dtype=np.float64)
    return _separable(delta, dw, w) + _separable(delta, w, dw)


def kernel_sigma_grad(delta, sigma, k, upstream, normalize=True):
    """dL/dsigma given ``upstream = dL/d apply_blur(delta)``."""
    d = blur_sigma_derivative(delta, sigma, k, normalize)
    return float(np.sum(d * np.asarray(upstream, dtype=np.float64)))
