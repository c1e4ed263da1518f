"""Radially averaged power spectra and the log-ratio spectrum penalty.

Conventions: channels are averaged before the transform; the forward DFT is
unnormalized (``numpy.fft.fft2``). The penalty is a ratio of spectra, so the
normalization cancels.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEFAULT_BANDS = 32
LOG_EPS = 1e-12


@dataclass(frozen=True)
class SpectrumProfile:
    values: np.ndarray
    band_sizes: np.ndarray
    r_max: float

    @property
    def band_count(self):
        return len(self.values)

    def band_edges(self):
        b = np.arange(self.band_count + 1)
        return b * self.r_max / self.band_count


def forward_spectrum(img):
    img = np.asarray(img, dtype=np.float64)
    plane = img.mean(axis=2) if img.ndim == 3 else img
    return np.fft.fft2(plane)


def _radii(h, w):
    fu = np.fft.fftfreq(h) * h
    fv = np.fft.fftfreq(w) * w
    return np.sqrt(fu[:, None] ** 2 + fv[None, :] ** 2)


@lru_cache(maxsize=64)
def band_index(h, w, bands):
    """``(H, W)`` map of band ids in DFT (uncentered) layout, plus band sizes and r_max.

    A coordinate at centered radius ``r`` lands in ``min(floor(r * B / r_max), B - 1)``
    with ``r_max = sqrt((H/2)^2 + (W/2)^2)``.
    """
    if bands < 1:
        raise ValueError("band count must be positive")
    r_max = float(np.hypot(h / 2.0, w / 2.0))
    idx = np.minimum(np.floor(_radii(h, w) * bands / r_max).astype(np.int64), bands - 1)
    sizes = np.bincount(idx.ravel(), minlength=bands)
    if np.any(sizes == 0):
        empty = np.flatnonzero(sizes == 0).tolist()
        raise ValueError(f"{bands} bands on a {h}x{w} grid leaves bands {empty} empty")
    idx.setflags(write=False)
    sizes.setflags(write=False)
    return idx, sizes, r_max


def max_bands(h, w):
    """Largest band count for which no band is empty on an ``h x w`` grid."""
    b = 1
    while True:
        try:
            band_index(h, w, b + 1)
        except ValueError:
            return b
        b += 1


def rapsd(f, bands=DEFAULT_BANDS):
    f = np.asarray(f)
    idx, sizes, r_max = band_index(f.shape[0], f.shape[1], bands)
    power = np.bincount(idx.ravel(), weights=np.abs(f).ravel() ** 2, minlength=bands)
    return SpectrumProfile(values=power / sizes, band_sizes=sizes, r_max=r_max)


def log_ratio(xhat, x, bands=DEFAULT_BANDS):
    p_hat = rapsd(forward_spectrum(xhat), bands).values
    p = rapsd(forward_spectrum(x), bands).values
    return np.log((p_hat + LOG_EPS) / (p + LOG_EPS))


def l_freq(xhat, x, bands=DEFAULT_BANDS):
    """Max over bands of ``|log((RAPSD(xhat) + eps) / (RAPSD(x) + eps))|``."""
    xhat = np.asarray(xhat, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if xhat.shape != x.shape:
        raise ValueError(f"shape mismatch {xhat.shape} vs {x.shape}")
    return float(np.max(np.abs(log_ratio(xhat, x, bands))))


def l_freq_grad(xhat, x, bands=DEFAULT_BANDS):
    """Subgradient of :func:`l_freq` w.r.t. `xhat`.

    Taken at the first band attaining the maximum; zero when the maximum is
    exactly zero (no preferred direction at the identity).
    """
    xhat = np.asarray(xhat, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if xhat.shape != x.shape:
        raise ValueError(f"shape mismatch {xhat.shape} vs {x.shape}")
    h, w = xhat.shape[:2]
    idx, sizes, _ = band_index(h, w, bands)

    f_hat = forward_spectrum(xhat)
    p_hat = np.bincount(idx.ravel(), weights=np.abs(f_hat).ravel() ** 2, minlength=bands) / sizes
    p = rapsd(forward_spectrum(x), bands).values
    ratios = np.log((p_hat + LOG_EPS) / (p + LOG_EPS))
    b = int(np.argmax(np.abs(ratios)))
    if ratios[b] == 0.0:
        return np.zeros_like(xhat)

    # d|f|^2 summed over band b, back through fft2 (adjoint = H*W*ifft2) and the channel mean
    coef = np.sign(ratios[b]) / ((p_hat[b] + LOG_EPS) * sizes[b])
    weighted = np.where(idx == b, f_hat, 0.0)
    g_plane = 2.0 * coef * np.real(np.fft.ifft2(weighted)) * (h * w)
    c = xhat.shape[2] if xhat.ndim == 3 else 1
    if xhat.ndim == 2:
        return g_plane
    return np.repeat((g_plane / c)[:, :, None], c, axis=2)
