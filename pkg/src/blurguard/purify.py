"""Classical purification transforms.

Each transform is a small frozen dataclass that is callable on an image and
knows its own spec string, so ``parse_op(op.spec) == op``. Grammar::

    jpeg:65
    noise:0.05[:seed=9]
    rescale:2[:bilinear|:bicubic]
    blur:1.0            (alias gauss_blur:1.0)
    chain(op, op, ...)
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.fft import dctn, idctn

from . import rng
from .blur import SIGMA_MAX, SIGMA_MIN, apply_blur, build_kernel
from .image import check_valid_image

# fmt: off
LUMA_TABLE = np.array([
    16,  11,  10,  16,  24,  40,  51,  61,
    12,  12,  14,  19,  26,  58,  60,  55,
    14,  13,  16,  24,  40,  57,  69,  56,
    14,  17,  22,  29,  51,  87,  80,  62,
    18,  22,  37,  56,  68, 109, 103,  77,
    24,  35,  55,  64,  81, 104, 113,  92,
    49,  64,  78,  87, 103, 121, 120, 101,
    72,  92,  95,  98, 112, 100, 103,  99,
], dtype=np.int64).reshape(8, 8)

CHROMA_TABLE = np.array([
    17,  18,  24,  47,  99,  99,  99,  99,
    18,  21,  26,  66,  99,  99,  99,  99,
    24,  26,  56,  99,  99,  99,  99,  99,
    47,  66,  99,  99,  99,  99,  99,  99,
    99,  99,  99,  99,  99,  99,  99,  99,
    99,  99,  99,  99,  99,  99,  99,  99,
    99,  99,  99,  99,  99,  99,  99,  99,
    99,  99,  99,  99,  99,  99,  99,  99,
], dtype=np.int64).reshape(8, 8)
# fmt: on


def quality_scale(quality):
    """IJG quality to percentage scale (integer arithmetic)."""
    quality = int(quality)
    if not 1 <= quality <= 100:
        raise ValueError(f"JPEG quality must be in [1, 100], got {quality}")
    return 5000 // quality if quality < 50 else 200 - 2 * quality


def scaled_table(base, quality):
    s = quality_scale(quality)
    return np.clip((base * s + 50) // 100, 1, 255)


def rgb_to_ycbcr(rgb):
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return np.stack([y, cb, cr], axis=-1)


def ycbcr_to_rgb(ycc):
    y, cb, cr = ycc[..., 0], ycc[..., 1] - 128.0, ycc[..., 2] - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return np.stack([r, g, b], axis=-1)


def _quantize_plane(plane, table):
    """Level-shift, blockwise orthonormal DCT-II, quantize, dequantize, invert."""
    h, w = plane.shape
    ph, pw = -(-h // 8) * 8, -(-w // 8) * 8
    p = np.pad(plane, ((0, ph - h), (0, pw - w)), mode="edge") - 128.0
    blocks = p.reshape(ph // 8, 8, pw // 8, 8).transpose(0, 2, 1, 3)
    coef = dctn(blocks, type=2, axes=(2, 3), norm="ortho")
    coef = np.round(coef / table) * table
    rec = idctn(coef, type=2, axes=(2, 3), norm="ortho")
    rec = rec.transpose(0, 2, 1, 3).reshape(ph, pw) + 128.0
    return rec[:h, :w]


def jpeg_like(img, quality=65):
    """The lossy stages of baseline JPEG (4:4:4, no entropy coding)."""
    check_valid_image(img, "jpeg_like input")
    luma = scaled_table(LUMA_TABLE, quality)
    chroma = scaled_table(CHROMA_TABLE, quality)
    x = np.asarray(img, dtype=np.float64) * 255.0
    if x.shape[2] == 1:
        out = _quantize_plane(x[:, :, 0], luma)[:, :, None]
    else:
        ycc = rgb_to_ycbcr(x)
        planes = [_quantize_plane(ycc[:, :, 0], luma)]
        planes += [_quantize_plane(ycc[:, :, c], chroma) for c in (1, 2)]
        out = ycbcr_to_rgb(np.stack(planes, axis=-1))
    return np.clip(out / 255.0, 0.0, 1.0)


def cubic_weight(t, a=-0.5):
    """Keys cubic convolution kernel (Catmull-Rom for a = -0.5)."""
    t = np.abs(t)
    return np.where(
        t <= 1,
        (a + 2) * t**3 - (a + 3) * t**2 + 1,
        np.where(t < 2, a * t**3 - 5 * a * t**2 + 8 * a * t - 4 * a, 0.0),
    )


def resample_matrix(n_in, n_out, method):
    """Dense ``(n_out, n_in)`` interpolation matrix with half-pixel centres.

    Out-of-range taps are clamped to the edge sample. No antialiasing on
    downscaling.
    """
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    mat = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    base = np.floor(src).astype(np.int64)
    frac = src - base
    if method == "bilinear":
        taps = [(0, 1.0 - frac), (1, frac)]
    elif method == "bicubic":
        taps = [(d, cubic_weight(frac - d)) for d in (-1, 0, 1, 2)]
    else:
        raise ValueError(f"unknown resampling method {method!r}")
    for d, wgt in taps:
        np.add.at(mat, (rows, np.clip(base + d, 0, n_in - 1)), wgt)
    return mat


def rescale(img, factor, method="bicubic"):
    img = np.asarray(img, dtype=np.float64)
    if not factor > 0 or not math.isfinite(factor):
        raise ValueError(f"rescale factor must be positive, got {factor}")
    h, w = img.shape[:2]
    ho, wo = int(math.floor(h * factor + 0.5)), int(math.floor(w * factor + 0.5))
    if ho < 1 or wo < 1:
        raise ValueError(f"rescale by {factor} gives a degenerate {ho}x{wo} image")
    mr = resample_matrix(h, ho, method)
    mc = resample_matrix(w, wo, method)
    out = np.einsum("jw,iwc->ijc", mc, np.tensordot(mr, img, axes=(1, 0)))
    return np.clip(out, 0.0, 1.0)


def gauss_noise(img, std, seed=0):
    img = np.asarray(img, dtype=np.float64)
    if std < 0:
        raise ValueError(f"noise std must be nonnegative, got {std}")
    if std == 0:
        return img.copy()
    return np.clip(img + rng.gaussian_like(seed, img.shape, scale=std), 0.0, 1.0)


def gauss_blur(img, sigma):
    if not SIGMA_MIN <= sigma <= SIGMA_MAX:
        raise ValueError(f"blur sigma must be in [{SIGMA_MIN}, {SIGMA_MAX}], got {sigma}")
    k = max(1, int(math.ceil(3.0 * sigma)))
    return np.clip(apply_blur(img, build_kernel(sigma, k)), 0.0, 1.0)


def _num(v):
    return repr(float(v)) if float(v) != int(v) else str(int(v))


@dataclass(frozen=True)
class Jpeg:
    quality: int = 65

    def __post_init__(self):
        quality_scale(self.quality)

    @property
    def spec(self):
        return f"jpeg:{self.quality}"

    def __call__(self, img):
        return jpeg_like(img, self.quality)


@dataclass(frozen=True)
class GaussNoise:
    std: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.std < 0:
            raise ValueError(f"noise std must be nonnegative, got {self.std}")

    @property
    def spec(self):
        return f"noise:{_num(self.std)}:seed={self.seed}"

    def __call__(self, img):
        return gauss_noise(img, self.std, self.seed)


@dataclass(frozen=True)
class Rescale:
    factor: float = 2.0
    method: str = "bicubic"

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError(f"rescale factor must be positive, got {self.factor}")
        if self.method not in ("bilinear", "bicubic"):
            raise ValueError(f"unknown resampling method {self.method!r}")

    @property
    def spec(self):
        return f"rescale:{_num(self.factor)}:{self.method}"

    def __call__(self, img):
        return rescale(img, self.factor, self.method)


@dataclass(frozen=True)
class GaussBlur:
    sigma: float = 1.0

    def __post_init__(self):
        if not SIGMA_MIN <= self.sigma <= SIGMA_MAX:
            raise ValueError(f"blur sigma must be in [{SIGMA_MIN}, {SIGMA_MAX}]")

    @property
    def spec(self):
        return f"gauss_blur:{_num(self.sigma)}"

    def __call__(self, img):
        return gauss_blur(img, self.sigma)


@dataclass(frozen=True)
class Chain:
    ops: tuple

    def __post_init__(self):
        if not self.ops:
            raise ValueError("a chain needs at least one operation")

    @property
    def spec(self):
        return "chain(" + ",".join(op.spec for op in self.ops) + ")"

    def __call__(self, img):
        for op in self.ops:
            img = op(img)
        return img


def purify(img, op):
    check_valid_image(img, "purify input")
    if isinstance(op, str):
        op = parse_op(op)
    out = op(img)
    check_valid_image(out, f"output of {op.spec}")
    return out


def _split_top(text):
    """Split on commas (or semicolons) that are not inside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ValueError(f"unbalanced parentheses in {text!r}")
        if ch in ",;" and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth:
        raise ValueError(f"unbalanced parentheses in {text!r}")
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def parse_op(spec):
    spec = spec.strip()
    if spec.startswith("chain(") and spec.endswith(")"):
        return Chain(tuple(parse_op(s) for s in _split_top(spec[6:-1])))
    name, *args = spec.split(":")
    try:
        if name == "jpeg" and len(args) == 1:
            return Jpeg(int(args[0]))
        if name == "noise" and 1 <= len(args) <= 2:
            seed = 0
            if len(args) == 2:
                key, _, val = args[1].partition("=")
                if key != "seed":
                    raise ValueError(f"unknown noise parameter {key!r}")
                seed = int(val)
            return GaussNoise(float(args[0]), seed)
        if name == "rescale" and 1 <= len(args) <= 2:
            return Rescale(float(args[0]), args[1] if len(args) == 2 else "bicubic")
        if name in ("blur", "gauss_blur") and len(args) == 1:
            return GaussBlur(float(args[0]))
    except ValueError as exc:
        raise ValueError(f"bad purifier spec {spec!r}: {exc}") from None
    raise ValueError(f"bad purifier spec {spec!r}")


def parse_battery(text):
    """Parse a ``;``/``,``-separated list of purifier specs (empty text -> [])."""
    return [parse_op(s) for s in _split_top(text)]


DEFAULT_BATTERY = (
    Jpeg(65),
    Chain((Jpeg(65), Rescale(2.0, "bicubic"), Rescale(0.5, "bicubic"))),
    Chain((GaussNoise(0.05, 0), Rescale(2.0, "bicubic"), Rescale(0.5, "bicubic"))),
    GaussBlur(1.0),
)
