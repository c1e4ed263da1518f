"""
Radial power spectra
====================

Smooth images keep their power at low radius, textures spread it out. The
protection penalty compares these profiles band by band.
"""

import numpy as np

from blurguard.fixtures import smooth_fixture, texture_image
from blurguard.spectrum import forward_spectrum, l_freq, rapsd

smooth = smooth_fixture()
texture = texture_image(seed=1)

for name, img in [("smooth", smooth), ("texture", texture)]:
    prof = rapsd(forward_spectrum(img), 32)
    print(f"{name:8s} log10 power, every 4th band:", np.round(np.log10(prof.values[::4] + 1e-12), 2))

###############################################################################
# White noise of amplitude 4/255 barely matters for the smooth image's low bands
# but dominates its high bands, which is what the penalty picks up.

noise = 4 / 255 * np.random.default_rng(0).standard_normal(smooth.shape)
print("L_freq smooth + noise: %.3f" % l_freq(np.clip(smooth + noise, 0, 1), smooth))
print("L_freq texture + noise: %.3f" % l_freq(np.clip(texture + noise, 0, 1), texture))
