#!/usr/bin/env python3
"""Metric behaviors worth knowing before trusting a number.

Three metrics, three conventions: PSNR caps at 100 dB so "identical"
doesn't print as infinity; the spectral angle ignores pixels with no
spectral direction and is invariant to positive per-pixel rescaling; SSIM
is computed band by band over fully-supported 11x11 windows.  The shared
evaluation protocol crops the image border first, because wrap-around
boundary effects are an artifact of the simulation, not the reconstruction.
"""

import numpy as np

from snapspec import evaluate, psnr, sam, ssim

rng = np.random.default_rng(0)
x = rng.uniform(size=(64, 64, 6)) + 0.05

# PSNR: the cap, and the textbook offset case
print("psnr(x, x)            = %.1f dB (capped, not infinite)" % psnr(x, x))
print("psnr(x + 0.1, x)      = %.13f dB (10*log10(1/0.01))" % psnr(x + 0.1, x))

# spectral angle: direction only, magnitude ignored
field = 0.5 + rng.uniform(size=(64, 64))
ref = rng.uniform(size=x.shape) + 0.05
print("\nsam(x, ref)           = %.6f rad" % sam(x, ref))
print("sam(x * field, ref)   = %.6f rad (per-pixel positive rescale: no change)"
      % sam(x * field[:, :, None], ref))
orth_a = np.zeros((4, 4, 2))
orth_b = np.zeros((4, 4, 2))
orth_a[:, :, 0] = 1.0
orth_b[:, :, 1] = 1.0
print("orthogonal spectra    = %.6f rad (pi/2 = %.6f)" % (sam(orth_a, orth_b), np.pi / 2))

# SSIM: exact self-similarity by construction
print("\nssim(x, x)            = %r (exactly one)" % ssim(x, x))
noisy = x + rng.normal(0, 0.05, size=x.shape)
print("ssim(x + noise, x)    = %.4f" % ssim(noisy, x))

# the crop protocol: border damage inside the crop margin is invisible
damaged = x.copy()
damaged[:10, :, :] += 3.0
with_crop = evaluate(damaged, x, crop=16)
without = evaluate(damaged, x, crop=0)
print("\nborder-damaged cube, crop 16: psnr %.1f dB (damage cropped away)"
      % with_crop.psnr_db)
print("border-damaged cube, crop 0:  psnr %.1f dB (damage measured)"
      % without.psnr_db)
print("\nreport as JSON line:", with_crop.to_json())
