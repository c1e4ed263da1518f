"""Image-quality metrics and the worst-case purification harness."""

from dataclasses import dataclass, field
import csv
import io
import json
import math

import numpy as np
from scipy.ndimage import correlate1d

from .purify import parse_op

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b):
    """PSNR in dB for unit peak intensity; ``math.inf`` when the images are equal."""
    a, b = _pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return -10.0 * math.log10(mse)


def _ssim_window():
    z = np.arange(SSIM_WINDOW) - SSIM_WINDOW // 2
    g = np.exp(-(z * z) / (2 * SSIM_SIGMA**2))
    return g / g.sum()


def _local_mean(x, w):
    # 'valid' filtering: filter everywhere, then drop the half-window border
    r = len(w) // 2
    y = correlate1d(correlate1d(x, w, axis=0, mode="reflect"), w, axis=1, mode="reflect")
    return y[r:-r, r:-r]


def ssim_map(a, b):
    a, b = _pair(a, b)
    if a.ndim == 2:
        a, b = a[:, :, None], b[:, :, None]
    if min(a.shape[:2]) < SSIM_WINDOW:
        raise ValueError(f"SSIM needs both sides >= {SSIM_WINDOW}, got {a.shape[:2]}")
    w = _ssim_window()
    maps = []
    for c in range(a.shape[2]):
        x, y = a[:, :, c], b[:, :, c]
        mx, my = _local_mean(x, w), _local_mean(y, w)
        vx = _local_mean(x * x, w) - mx * mx
        vy = _local_mean(y * y, w) - my * my
        cxy = _local_mean(x * y, w) - mx * my
        num = (2 * mx * my + SSIM_C1) * (2 * cxy + SSIM_C2)
        den = (mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2)
        maps.append(num / den)
    return np.stack(maps, axis=-1)


def ssim(a, b):
    """Mean single-scale SSIM (11x11 gaussian window, sigma 1.5), averaged over channels."""
    return float(np.mean(ssim_map(a, b)))


def protection_strength(x, candidate, objective):
    """Squared latent displacement ``||E(candidate) - E(x)||^2``."""
    x, candidate = _pair(x, candidate)
    d = objective.encode(candidate) - objective.encode(x)
    return float(np.sum(d * d))


@dataclass
class EvalReport:
    per_purifier: dict = field(default_factory=dict)
    pre_purification_strength: float = 0.0
    worst_case_strength: float = 0.0
    robustness_ratio: float = 0.0

    def to_dict(self):
        return {
            "per_purifier": {k: {m: _jsonable(v) for m, v in row.items()} for k, row in self.per_purifier.items()},
            "pre_purification_strength": self.pre_purification_strength,
            "worst_case_strength": self.worst_case_strength,
            "robustness_ratio": self.robustness_ratio,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        cols = ["purifier", "psnr_vs_original", "ssim_vs_original", "protection_strength"]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for name in sorted(self.per_purifier):
            row = self.per_purifier[name]
            writer.writerow([name] + [_jsonable(row[c]) for c in cols[1:]])
        return buf.getvalue()


def _jsonable(v):
    # infinite PSNR is written as the string "inf" so the JSON stays strict
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def evaluate(x, xhat, purifiers, objective):
    """Apply each purifier to `xhat` separately and keep the per-sample worst case.

    With no purifiers the worst case is the unpurified strength.
    """
    x, xhat = _pair(x, xhat)
    ops = [parse_op(p) if isinstance(p, str) else p for p in purifiers]
    pre = protection_strength(x, xhat, objective)
    rows = {}
    for op in ops:
        purified = op(xhat)
        rows[op.spec] = {
            "psnr_vs_original": psnr(purified, x),
            "ssim_vs_original": ssim(purified, x),
            "protection_strength": protection_strength(x, purified, objective),
        }
    worst = min((r["protection_strength"] for r in rows.values()), default=pre)
    ratio = worst / pre if pre > 0 else 0.0
    return EvalReport(per_purifier=rows, pre_purification_strength=pre, worst_case_strength=worst, robustness_ratio=ratio)
