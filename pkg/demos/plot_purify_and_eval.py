"""
Worst case under purification
=============================

Protect an image, push it through the default purifier battery and keep the
weakest remaining protection.
"""

from blurguard import DEFAULT_BATTERY, ProtectConfig, RefEncoder, canonicalize_masks, evaluate, protect
from blurguard.fixtures import texture_fixture

x, raw_masks = texture_fixture(seed=0)
masks = canonicalize_masks(raw_masks, x.shape[:2])
encoder = RefEncoder(seed=0)

for label, cfg in [("blurred", ProtectConfig()), ("plain", ProtectConfig(lam=0.0, fixed_sigma=0.05))]:
    xhat = protect(x, masks, encoder, cfg).xhat
    report = evaluate(x, xhat, DEFAULT_BATTERY, encoder)
    print(f"\n{label}: strength before purification {report.pre_purification_strength:.2f}")
    for spec, row in report.per_purifier.items():
        print(f"  {spec:55s} psnr {row['psnr_vs_original']:6.2f}  strength {row['protection_strength']:.2f}")
    print(f"  worst case {report.worst_case_strength:.2f}, robustness ratio {report.robustness_ratio:.3f}")
