"""Reconstruction quality metrics: PSNR, spectral angle, SSIM, edge-crop protocol.

All three metrics compare a reconstructed cube against a reference of the
same shape.  ``evaluate`` bundles them behind the shared protocol of
cropping a fixed border before measuring, since boundary pixels carry
wrap-around artifacts that say nothing about reconstruction quality.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import DegenerateMetricError, DimensionError, ParameterError

PSNR_CAP_DB = 100.0

# pixels whose spectrum norm falls below this are excluded from the angle mean
SAM_NORM_FLOOR = 1e-12

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
DEFAULT_CROP = 20


def _check_pair(x: np.ndarray, ref: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if x.shape != ref.shape:
        raise DimensionError("shape mismatch: %r vs %r" % (x.shape, ref.shape))
    return x, ref


def psnr(x: np.ndarray, ref: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB over all voxels, capped at 100 dB."""
    x, ref = _check_pair(x, ref)
    if not peak > 0:
        raise ParameterError("peak must be positive, got %r" % peak)
    mse = float(np.mean((x - ref) ** 2))
    if mse < 1e-10 * peak**2:
        return PSNR_CAP_DB
    return 10.0 * float(np.log10(peak**2 / mse))


def sam(x: np.ndarray, ref: np.ndarray) -> float:
    """Mean per-pixel angle between spectra, in radians.

    Pixels where either spectrum has norm below ``SAM_NORM_FLOOR`` carry no
    direction and are skipped; if every pixel is degenerate the metric is
    undefined and an error is raised.
    """
    x, ref = _check_pair(x, ref)
    if x.ndim != 3:
        raise DimensionError("expected (H, W, bands) cubes, got shape %r" % (x.shape,))
    nx = np.linalg.norm(x, axis=2)
    nr = np.linalg.norm(ref, axis=2)
    valid = (nx >= SAM_NORM_FLOOR) & (nr >= SAM_NORM_FLOOR)
    if not np.any(valid):
        raise DegenerateMetricError("all pixel spectra are degenerate; angle undefined")
    dots = np.sum(x * ref, axis=2)
    cos = np.clip(dots[valid] / (nx[valid] * nr[valid]), -1.0, 1.0)
    return float(np.mean(np.arccos(cos)))


def _ssim_window() -> np.ndarray:
    half = SSIM_WINDOW // 2
    g = np.exp(-np.arange(-half, half + 1) ** 2 / (2.0 * SSIM_SIGMA**2))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(x: np.ndarray, ref: np.ndarray, peak: float = 1.0) -> float:
    """Mean structural similarity, computed per band and averaged.

    Single-scale SSIM with an 11 x 11 Gaussian window (sigma 1.5) and
    stability constants (0.01 peak)^2 and (0.03 peak)^2.  Local statistics
    use only fully-supported windows, so both spatial extents must be at
    least the window size.
    """
    x, ref = _check_pair(x, ref)
    if x.ndim == 2:
        x = x[:, :, None]
        ref = ref[:, :, None]
    if x.ndim != 3:
        raise DimensionError("expected (H, W, bands) cubes, got shape %r" % (x.shape,))
    if x.shape[0] < SSIM_WINDOW or x.shape[1] < SSIM_WINDOW:
        raise DimensionError(
            "image extent %r smaller than the %d-pixel window"
            % (x.shape[:2], SSIM_WINDOW)
        )
    if not peak > 0:
        raise ParameterError("peak must be positive, got %r" % peak)
    win = _ssim_window()
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2

    def local_mean(img: np.ndarray) -> np.ndarray:
        return signal.fftconvolve(img, win, mode="valid")

    scores = []
    for band in range(x.shape[2]):
        a = x[:, :, band]
        b = ref[:, :, band]
        mu_a = local_mean(a)
        mu_b = local_mean(b)
        var_a = local_mean(a * a) - mu_a * mu_a
        var_b = local_mean(b * b) - mu_b * mu_b
        cov = local_mean(a * b) - mu_a * mu_b
        num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
        den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
        scores.append(np.mean(num / den))
    return float(np.mean(scores))


@dataclass(frozen=True)
class MetricReport:
    """PSNR (dB), mean spectral angle (radians), SSIM, and the crop applied."""

    psnr_db: float
    sam_rad: float
    ssim: float
    crop: int

    @property
    def sam_deg(self) -> float:
        return float(np.degrees(self.sam_rad))

    def to_json(self) -> str:
        return json.dumps(
            {
                "psnr_db": self.psnr_db,
                "sam_rad": self.sam_rad,
                "ssim": self.ssim,
                "crop": self.crop,
            }
        )


def evaluate(recon: np.ndarray, gt: np.ndarray, crop: int = DEFAULT_CROP) -> MetricReport:
    """Crop ``crop`` pixels from every edge of both cubes, then measure.

    The default border of 20 pixels discards boundary-condition artifacts.
    """
    recon, gt = _check_pair(recon, gt)
    if crop < 0:
        raise ParameterError("crop must be >= 0, got %r" % crop)
    if 2 * crop >= min(recon.shape[0], recon.shape[1]):
        raise ParameterError(
            "crop %d leaves no pixels on extent %r" % (crop, recon.shape[:2])
        )
    if crop:
        recon = recon[crop:-crop, crop:-crop]
        gt = gt[crop:-crop, crop:-crop]
    return MetricReport(
        psnr_db=psnr(recon, gt),
        sam_rad=sam(recon, gt),
        ssim=ssim(recon, gt),
        crop=int(crop),
    )
