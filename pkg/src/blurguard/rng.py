"""Portable seeded random streams.

Everything random in this package (encoder weights, the Stage-1 noise draw,
the Gaussian-noise purifier, test fixtures) is drawn from a SplitMix64 stream
so results are reproducible bit-for-bit across platforms and implementations.

Stream layout
-------------
For seed ``s`` the i-th 64-bit word (i = 0, 1, ...) is::

    z = s + (i + 1) * 0x9E3779B97F4A7C15          (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

Uniforms use the top 53 bits. Gaussians are produced in Box-Muller pairs from
consecutive words ``(w0, w1)``: ``u1 = ((w0 >> 11) + 1) / 2**53`` in (0, 1],
``u2 = (w1 >> 11) / 2**53``, giving ``r cos(2 pi u2)`` then ``r sin(2 pi u2)``
with ``r = sqrt(-2 ln u1)``.
"""

import numpy as np

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TWO53 = float(2**53)


def splitmix64(seed, n, offset=0):
    """Return words ``offset .. offset+n-1`` of the stream for `seed` as uint64."""
    seed = np.uint64(int(seed) % 2**64)
    idx = np.arange(offset + 1, offset + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = seed + idx * GOLDEN_GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def uniform(seed, n):
    """``n`` uniforms in [0, 1)."""
    w = splitmix64(seed, n)
    return (w >> np.uint64(11)).astype(np.float64) / _TWO53


def gaussian(seed, n):
    """``n`` standard normal samples (Box-Muller over consecutive word pairs)."""
    pairs = (n + 1) // 2
    w = splitmix64(seed, 2 * pairs)
    u1 = ((w[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) / _TWO53
    u2 = (w[1::2] >> np.uint64(11)).astype(np.float64) / _TWO53
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:n]


def gaussian_like(seed, shape, scale=1.0):
    shape = tuple(shape)
    return scale * gaussian(seed, int(np.prod(shape))).reshape(shape)
