"""Deterministic synthetic inputs: smooth scenes, rotating PSF stacks, responses.

Nothing here is calibrated against hardware; these generators exist so
tests, demos, and benchmarks can build self-contained problem instances
with realistic structure (spatially and spectrally smooth scenes, PSFs
whose shape varies monotonically with wavelength, overlapping response
curves).
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .optics import OpticalSystem


def smooth_cube(height: int, width: int, n_bands: int, seed: int = 0) -> np.ndarray:
    """Random spectral cube in [0, 1], smooth in space and across bands.

    White noise is low-passed with a wrap-around spatial Gaussian (so the
    scene has no seam under circular boundary handling) and a mild spectral
    blur, then min-max normalized.  Deterministic per seed.
    """
    if height < 4 or width < 4 or n_bands < 1:
        raise ParameterError("scene needs height, width >= 4 and n_bands >= 1")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((height, width, n_bands))
    spatial = max(2.0, min(height, width) / 12.0)
    cube = ndimage.gaussian_filter(noise, sigma=(spatial, spatial, 1.0), mode="wrap")
    lo = cube.min()
    hi = cube.max()
    if hi - lo < 1e-12:
        return np.full_like(cube, 0.5)
    return (cube - lo) / (hi - lo)


def rotating_psf_stack(n_bands: int, kernel_size: int, radius: float | None = None,
                       spot_std: float | None = None) -> np.ndarray:
    """Unit-sum PSF stack whose two lobes rotate with band index.

    Each kernel is a pair of Gaussian spots placed symmetrically about the
    center at an angle that sweeps 150 degrees across the bands, the kind
    of wavelength-coded blur a rotating-lobe diffractive element produces.
    Returns shape (n_bands, kernel_size, kernel_size).
    """
    if n_bands < 1:
        raise ParameterError("n_bands must be >= 1")
    if kernel_size < 3 or kernel_size % 2 == 0:
        raise ParameterError("kernel_size must be odd and >= 3, got %r" % kernel_size)
    half = kernel_size // 2
    if radius is None:
        radius = 0.55 * half
    if spot_std is None:
        spot_std = max(0.7, 0.12 * kernel_size)
    yy, xx = np.mgrid[-half : half + 1, -half : half + 1].astype(np.float64)
    stack = np.empty((n_bands, kernel_size, kernel_size))
    angles = np.linspace(0.0, 5.0 * np.pi / 6.0, n_bands) if n_bands > 1 else [0.0]
    for i, theta in enumerate(angles):
        cy = radius * np.sin(theta)
        cx = radius * np.cos(theta)
        lobe_a = np.exp(-(((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * spot_std**2)))
        lobe_b = np.exp(-(((yy + cy) ** 2 + (xx + cx) ** 2) / (2.0 * spot_std**2)))
        kernel = lobe_a + lobe_b
        stack[i] = kernel / kernel.sum()
    return stack


def band_wavelengths(n_bands: int, start: float = 450.0, stop: float = 650.0) -> np.ndarray:
    """Evenly spaced band-center wavelengths in nanometers."""
    if n_bands < 1:
        raise ParameterError("n_bands must be >= 1")
    if not stop > start:
        raise ParameterError("need stop > start wavelengths")
    return np.linspace(start, stop, n_bands)


def rgb_response(n_bands: int, baseline: float = 0.02) -> np.ndarray:
    """Overlapping non-negative response curves, rows ordered r, g, b.

    Gaussian bumps centered at 3/4, 1/2, and 1/4 of the band axis with a
    small flat baseline so every band reaches every channel, which keeps
    synthetic systems well-conditioned.  Shape (3, n_bands).
    """
    if n_bands < 1:
        raise ParameterError("n_bands must be >= 1")
    if baseline < 0:
        raise ParameterError("baseline must be >= 0")
    pos = np.linspace(0.0, 1.0, n_bands) if n_bands > 1 else np.array([0.5])
    width = 0.18
    centers = np.array([0.75, 0.5, 0.25])
    response = np.exp(-((pos[None, :] - centers[:, None]) ** 2) / (2.0 * width**2))
    return response + baseline


def synthetic_system(n_bands: int = 8, kernel_size: int = 9) -> OpticalSystem:
    """Convenience bundle: rotating PSF stack plus overlapping RGB response."""
    return OpticalSystem(
        psfs=rotating_psf_stack(n_bands, kernel_size),
        response=rgb_response(n_bands),
    )
