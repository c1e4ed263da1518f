"""Adversarial objectives.

An objective is anything with ``value(xhat)``, ``grad(xhat)`` and
``encode(img)``; the protection loop only uses ``value``/``grad`` and the
evaluation harness uses ``encode`` to measure latent displacement.

Two deterministic encoders are provided: :class:`RefEncoder`, a small seeded
tanh CNN, and :class:`PoolObjective`, block average pooling whose gradient is
closed-form.
"""

import numpy as np

from . import rng

# (in_channels, out_channels) per layer; all layers are 3x3, stride 2, pad 1, tanh.
REF_LAYERS = ((3, 8), (8, 16), (16, 16))


def _patches(x):
    """Zero-pad by 1 and gather the nine stride-2 taps: ``(Ho, Wo, C, 3, 3)``."""
    h, w, c = x.shape
    ho, wo = h // 2, w // 2
    xp = np.zeros((h + 2, w + 2, c))
    xp[1:-1, 1:-1] = x
    out = np.empty((ho, wo, c, 3, 3))
    for a in range(3):
        for b in range(3):
            out[:, :, :, a, b] = xp[a : a + 2 * ho : 2, b : b + 2 * wo : 2]
    return out


def _patches_adjoint(gp, shape):
    h, w, c = shape
    ho, wo = gp.shape[:2]
    xp = np.zeros((h + 2, w + 2, c))
    for a in range(3):
        for b in range(3):
            xp[a : a + 2 * ho : 2, b : b + 2 * wo : 2] += gp[:, :, :, a, b]
    return xp[1:-1, 1:-1]


def ref_encoder_weights(seed, layers=REF_LAYERS):
    """He-scaled gaussian weights drawn in layer, filter, in-channel, row, column order."""
    sizes = [cout * cin * 9 for cin, cout in layers]
    draws = rng.gaussian(seed, sum(sizes))
    weights, pos = [], 0
    for (cin, cout), n in zip(layers, sizes):
        std = np.sqrt(2.0 / (cin * 9))
        w = (std * draws[pos : pos + n]).reshape(cout, cin, 3, 3)
        w.setflags(write=False)
        weights.append(w)
        pos += n
    return tuple(weights)


class RefEncoder:
    """Seeded three-layer conv/tanh encoder with zero biases.

    Maps an ``(H, W, 3)`` image with H, W divisible by 8 to an
    ``(H/8, W/8, 16)`` latent. ``value`` is the squared distance of the latent
    to ``target`` (zero by default).
    """

    def __init__(self, seed=0, target=None):
        self.seed = int(seed)
        self.weights = ref_encoder_weights(self.seed)
        self.target = target

    def __repr__(self):
        return f"RefEncoder(seed={self.seed})"

    @property
    def spec(self):
        return f"ref_encoder:seed={self.seed}"

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[2] != 3:
            raise ValueError(f"reference encoder needs an (H, W, 3) image, got {x.shape}")
        if x.shape[0] % 8 or x.shape[1] % 8:
            raise ValueError(f"image size {x.shape[:2]} is not divisible by 8")
        return x

    def _forward(self, x):
        cache = []
        a = x
        for w in self.weights:
            p = _patches(a)
            a_next = np.tanh(np.einsum("hwcab,ocab->hwo", p, w))
            cache.append((a.shape, p, a_next))
            a = a_next
        return a, cache

    def encode(self, x):
        return self._forward(self._check(x))[0]

    def _residual(self, z):
        return z if self.target is None else z - self.target

    def value(self, x):
        z = self.encode(x)
        return float(np.sum(self._residual(z) ** 2))

    def grad(self, x):
        x = self._check(x)
        z, cache = self._forward(x)
        g = 2.0 * self._residual(z)
        for w, (shape, p, out) in zip(reversed(self.weights), reversed(cache)):
            g = g * (1.0 - out * out)
            g = _patches_adjoint(np.einsum("hwo,ocab->hwcab", g, w), shape)
        return g


class PoolObjective:
    """Squared norm of per-channel ``block x block`` average pooling."""

    def __init__(self, block=8):
        if int(block) != block or block < 1:
            raise ValueError(f"block must be a positive integer, got {block}")
        self.block = int(block)

    def __repr__(self):
        return f"PoolObjective(block={self.block})"

    @property
    def spec(self):
        return f"pool:block={self.block}"

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            x = x[:, :, None]
        if x.shape[0] % self.block or x.shape[1] % self.block:
            raise ValueError(f"image size {x.shape[:2]} is not divisible by block {self.block}")
        return x

    def encode(self, x):
        x = self._check(x)
        h, w, c = x.shape
        b = self.block
        return x.reshape(h // b, b, w // b, b, c).mean(axis=(1, 3))

    def value(self, x):
        return float(np.sum(self.encode(x) ** 2))

    def grad(self, x):
        x = self._check(x)
        b = self.block
        pooled = self.encode(x)
        return np.repeat(np.repeat(2.0 * pooled / (b * b), b, axis=0), b, axis=1)


def parse_objective(spec):
    """Build an objective from ``ref_encoder[:seed=N]`` or ``pool[:block=N]``."""
    name, _, rest = spec.strip().partition(":")
    params = {}
    for item in filter(None, rest.split(":")):
        key, eq, val = item.partition("=")
        if not eq:
            raise ValueError(f"objective parameter {item!r} must look like key=value")
        params[key.strip()] = int(val)
    allowed = {"ref_encoder": {"seed"}, "pool": {"block"}}
    if name not in allowed:
        raise ValueError(f"unknown objective {name!r} (expected ref_encoder or pool)")
    unknown = set(params) - allowed[name]
    if unknown:
        raise ValueError(f"unknown parameter(s) {sorted(unknown)} for objective {name}")
    if name == "ref_encoder":
        return RefEncoder(seed=params.get("seed", 0))
    return PoolObjective(block=params.get("block", 8))
