"""Synthetic test images with natural-looking spectra.

Textures are spectrally shaped noise with power falling off as ``1/f^beta``
(``beta = 2`` is the classic natural-image law). All randomness comes from
:mod:`blurguard.rng`, so a seed pins a fixture exactly.
"""

import numpy as np

from . import rng


def fractal_noise(seed, shape, beta=2.0):
    """Zero-mean, unit-std 2-D noise with power spectrum ~ ``1/f^beta``."""
    h, w = shape
    white = rng.gaussian(seed, h * w).reshape(h, w)
    fu = np.fft.fftfreq(h)[:, None]
    fv = np.fft.fftfreq(w)[None, :]
    f = np.sqrt(fu**2 + fv**2)
    f[0, 0] = 1.0
    amp = f ** (-beta / 2.0)
    amp[0, 0] = 0.0
    out = np.real(np.fft.ifft2(np.fft.fft2(white) * amp))
    return out / out.std()


def _rescale(a, lo, hi):
    a = a - a.min()
    return lo + (hi - lo) * a / max(a.max(), 1e-12)


def smooth_fixture(size=64, channels=3):
    """Radial gradient: bright centre fading to the corners."""
    yy, xx = np.mgrid[0:size, 0:size] + 0.5
    r = np.hypot(yy - size / 2, xx - size / 2) / (size / np.sqrt(2))
    base = 0.85 - 0.6 * r
    tints = np.array([1.0, 0.9, 0.75])[:channels]
    return np.clip(base[:, :, None] * tints, 0.0, 1.0)


def texture_image(seed, size=64, channels=3, beta=2.0):
    """Colour fractal texture in [0.1, 0.9] with correlated channels."""
    shared = fractal_noise(seed, (size, size), beta)
    img = np.empty((size, size, channels))
    for c in range(channels):
        own = fractal_noise(seed * 7919 + c + 1, (size, size), beta)
        img[:, :, c] = 0.8 * shared + 0.2 * own
    return _rescale(img, 0.1, 0.9)


def disk_mask(size, center, radius):
    yy, xx = np.mgrid[0:size, 0:size] + 0.5
    return np.hypot(yy - center[0], xx - center[1]) <= radius


def texture_fixture(seed, size=64):
    """A rough textured disk on a smoother textured background.

    Returns ``(image, raw_masks)`` where the single raw mask covers the disk;
    the background becomes its own region after canonicalization.
    """
    u = rng.uniform(seed + 1_000_003, 3)
    center = (size * (0.35 + 0.3 * u[0]), size * (0.35 + 0.3 * u[1]))
    radius = size * (0.2 + 0.1 * u[2])
    disk = disk_mask(size, center, radius)
    fg = texture_image(seed, size, beta=1.6)
    bg = texture_image(seed + 500_009, size, beta=2.8)
    img = np.where(disk[:, :, None], fg, 0.25 + 0.5 * bg)
    return np.clip(img, 0.0, 1.0), [disk]


def fixture_suite(n=20, size=64, start=0):
    return [texture_fixture(seed, size) for seed in range(start, start + n)]
