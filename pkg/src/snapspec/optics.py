"""Optical system model: PSF stacks, spectral response, and the coded-image
forward operator in both spatial and frequency form.

A scene cube I (H, W, bands) is encoded into an RGB image by convolving each
band with its wavelength-dependent PSF and weighting by the sensor response:

    J[x, y, c] = sum_i (I[:, :, i] * p_i)[x, y] * response[c, i]

Per color channel and band this is one 2-D convolution with the "unified"
kernel ``response[c, i] * p_i``.  Under circular boundary conditions the
whole operator diagonalizes per spatial frequency into a 3 x bands complex
matrix, which is what the reconstruction solver exploits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, signal

from .errors import DimensionError, ValidationError

PSF_SUM_TOL = 1e-9

# Default sensor noise profile (calibrated shot + read noise).
DEFAULT_GAUSSIAN_SIGMA = 7e-5
DEFAULT_POISSON_BITS = 14


@dataclass(frozen=True)
class OpticalSystem:
    """Normalized per-band PSFs plus the sensor's spectral response.

    ``psfs`` has shape (bands, k, k) with k odd and each kernel summing to 1.
    ``response`` has shape (3, bands) with non-negative entries.  The unified
    kernels ``response[c, i] * psfs[i]`` are derived once at construction.
    """

    psfs: np.ndarray
    response: np.ndarray
    unified: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        psfs = np.ascontiguousarray(self.psfs, dtype=np.float64)
        response = np.ascontiguousarray(self.response, dtype=np.float64)
        if psfs.ndim != 3 or psfs.shape[1] != psfs.shape[2]:
            raise DimensionError("psfs must have shape (bands, k, k), got %r" % (psfs.shape,))
        if psfs.shape[1] % 2 != 1:
            raise ValidationError("kernel size must be odd, got %d" % psfs.shape[1])
        if response.shape != (3, psfs.shape[0]):
            raise DimensionError(
                "response shape %r does not match %d bands" % (response.shape, psfs.shape[0])
            )
        if np.any(response < 0):
            raise ValidationError("spectral response must be non-negative")
        sums = psfs.sum(axis=(1, 2))
        if np.any(np.abs(sums - 1.0) > PSF_SUM_TOL):
            worst = int(np.argmax(np.abs(sums - 1.0)))
            raise ValidationError(
                "psf %d sums to %.12g, expected 1 within %g" % (worst, sums[worst], PSF_SUM_TOL)
            )
        object.__setattr__(self, "psfs", psfs)
        object.__setattr__(self, "response", response)
        object.__setattr__(self, "unified", response[:, :, None, None] * psfs[None, :, :, :])

    @property
    def n_bands(self) -> int:
        return self.psfs.shape[0]

    @property
    def kernel_size(self) -> int:
        return self.psfs.shape[1]


@dataclass(frozen=True)
class FrequencyOperator:
    """Per-frequency 3 x bands transfer matrices of an optical system.

    ``transfer[c, i, u, v]`` is the 2-D DFT (unnormalized forward transform)
    of the unified kernel for channel c and band i, zero-embedded into the
    image grid with the kernel center at index (0, 0).  The DC entry of a
    unit-sum kernel therefore equals ``response[c, i]``.
    """

    transfer: np.ndarray
    height: int
    width: int

    @property
    def n_bands(self) -> int:
        return self.transfer.shape[1]


@dataclass(frozen=True)
class NoiseModel:
    """Sensor noise: photon shot noise against a full well of ``2**poisson_bits``
    counts, followed by additive Gaussian read noise.

    ``poisson_bits = 0`` disables the Poisson stage; otherwise the bit depth
    must lie in [8, 16].  Sampling is deterministic per ``seed``.
    """

    gaussian_sigma: float = DEFAULT_GAUSSIAN_SIGMA
    poisson_bits: int = DEFAULT_POISSON_BITS
    seed: int = 0

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise ValidationError("gaussian_sigma must be >= 0")
        if self.poisson_bits != 0 and not 8 <= self.poisson_bits <= 16:
            raise ValidationError("poisson_bits must be 0 or in [8, 16]")


def embed_kernel(kernel: np.ndarray, height: int, width: int) -> np.ndarray:
    """Zero-embed a k x k kernel into (height, width) with its center at (0, 0)."""
    k = kernel.shape[-1]
    if k > height or k > width:
        raise DimensionError("kernel size %d exceeds image extent (%d, %d)" % (k, height, width))
    emb = np.zeros(kernel.shape[:-2] + (height, width), dtype=np.float64)
    emb[..., :k, :k] = kernel
    return np.roll(emb, (-(k // 2), -(k // 2)), axis=(-2, -1))


def forward_encode(cube: np.ndarray, system: OpticalSystem, boundary: str = "circular") -> np.ndarray:
    """Encode a spectral cube (H, W, bands) into a coded RGB image.

    ``boundary="circular"`` wraps indices and keeps the (H, W) extent.
    ``boundary="valid-crop"`` keeps only pixels whose kernel support never
    leaves the grid, shrinking each spatial extent by k - 1; it equals the
    circular output with (k - 1) / 2 pixels cropped per edge.  No noise is
    added here.
    """
    cube = np.asarray(cube, dtype=np.float64)
    if cube.ndim != 3 or cube.shape[2] != system.n_bands:
        raise DimensionError(
            "cube shape %r does not match %d bands" % (cube.shape, system.n_bands)
        )
    height, width = cube.shape[:2]
    k = system.kernel_size
    if boundary == "circular":
        if k > height or k > width:
            raise DimensionError("kernel size %d exceeds image extent" % k)
        out = np.zeros((height, width, 3))
        for c in range(3):
            for i in range(system.n_bands):
                out[:, :, c] += ndimage.convolve(cube[:, :, i], system.unified[c, i], mode="wrap")
        return out
    if boundary == "valid-crop":
        if height <= k or width <= k:
            raise DimensionError("valid-crop needs image extent > kernel size %d" % k)
        out = np.zeros((height - k + 1, width - k + 1, 3))
        for c in range(3):
            for i in range(system.n_bands):
                out[:, :, c] += signal.convolve2d(cube[:, :, i], system.unified[c, i], mode="valid")
        return out
    raise ValueError("boundary must be 'circular' or 'valid-crop', got %r" % boundary)


def build_frequency_operator(system: OpticalSystem, height: int, width: int) -> FrequencyOperator:
    """DFT the unified kernels into per-frequency 3 x bands transfer matrices."""
    if system.kernel_size > height or system.kernel_size > width:
        raise DimensionError(
            "kernel size %d exceeds image extent (%d, %d)"
            % (system.kernel_size, height, width)
        )
    transfer = np.fft.fft2(embed_kernel(system.unified, height, width))
    return FrequencyOperator(transfer=transfer, height=height, width=width)


def _check_cube(op: FrequencyOperator, cube: np.ndarray) -> np.ndarray:
    cube = np.asarray(cube, dtype=np.float64)
    if cube.shape != (op.height, op.width, op.n_bands):
        raise DimensionError(
            "cube shape %r does not match operator %r"
            % (cube.shape, (op.height, op.width, op.n_bands))
        )
    return cube


def _check_image(op: FrequencyOperator, image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.shape != (op.height, op.width, 3):
        raise DimensionError(
            "image shape %r does not match operator %r"
            % (image.shape, (op.height, op.width, 3))
        )
    return image


def apply_forward_frequency(op: FrequencyOperator, cube: np.ndarray) -> np.ndarray:
    """Apply the forward operator via per-frequency matrix products.

    Equals :func:`forward_encode` with circular boundary up to FFT roundoff.
    """
    cube = _check_cube(op, cube)
    spectra = np.fft.fft2(cube.transpose(2, 0, 1))
    coded = np.einsum("cihw,ihw->chw", op.transfer, spectra)
    return np.fft.ifft2(coded).real.transpose(1, 2, 0)


def apply_adjoint(op: FrequencyOperator, image: np.ndarray) -> np.ndarray:
    """Apply the adjoint of the forward operator to a coded image.

    Per frequency this multiplies by the conjugate transpose (bands x 3)
    matrix, so the inner-product identity <A x, y> == <x, A^T y> holds.
    """
    image = _check_image(op, image)
    spectra = np.fft.fft2(image.transpose(2, 0, 1))
    bands = np.einsum("cihw,chw->ihw", np.conj(op.transfer), spectra)
    return np.fft.ifft2(bands).real.transpose(1, 2, 0)


def add_noise(image: np.ndarray, model: NoiseModel) -> np.ndarray:
    """Apply the sensor noise model: Poisson (shot) first, then Gaussian (read).

    Negative intensities are clamped to zero before Poisson sampling.  With
    ``gaussian_sigma == 0`` and ``poisson_bits == 0`` the image is returned
    unchanged (copied).
    """
    image = np.asarray(image, dtype=np.float64)
    rng = np.random.default_rng(model.seed)
    out = image.copy()
    if model.poisson_bits:
        full_well = float(2 ** model.poisson_bits)
        out = rng.poisson(np.clip(out, 0.0, None) * full_well).astype(np.float64) / full_well
    if model.gaussian_sigma > 0:
        out = out + rng.normal(0.0, model.gaussian_sigma, size=out.shape)
    return out
