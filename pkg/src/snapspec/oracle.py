"""Dense brute-force reference for the coded-image forward model.

Materializes the forward operator as an explicit (3n) x (n N) matrix of
stacked 2-D circulant blocks, n the pixel count and N the band count, built
from direct index arithmetic on the unified kernels with no FFTs anywhere.
Subproblem solutions then come from Cholesky factorizations of the dense
normal equations.  Everything here is O(n^2 N^2) memory and worse in time,
which is the point: it shares no code path with the production solver, so
agreement between the two is evidence rather than tautology.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DimensionError, ParameterError
from .optics import OpticalSystem

# dense Phi is (3n) x (nN); past this the quadratic memory blows up
MAX_DENSE_UNKNOWNS = 4096


def vec_cube(cube: np.ndarray) -> np.ndarray:
    """Flatten (H, W, N) to length nN, band index slowest."""
    return np.asarray(cube).transpose(2, 0, 1).reshape(-1)


def unvec_cube(v: np.ndarray, height: int, width: int, n_bands: int) -> np.ndarray:
    return np.asarray(v).reshape(n_bands, height, width).transpose(1, 2, 0)


def vec_image(image: np.ndarray) -> np.ndarray:
    """Flatten (H, W, 3) to length 3n, channel index slowest."""
    return np.asarray(image).transpose(2, 0, 1).reshape(-1)


def unvec_image(v: np.ndarray, height: int, width: int) -> np.ndarray:
    return np.asarray(v).reshape(3, height, width).transpose(1, 2, 0)


def _circulant_block(kernel: np.ndarray, height: int, width: int) -> np.ndarray:
    """n x n matrix of center-anchored circular convolution by ``kernel``.

    Output and input pixels are indexed row-major; the entry pairing output
    (x, y) with input (u, v) is the kernel tap at wrapped displacement
    (x - u, y - v) from the center, zero off the support.  Built by
    scattering kernel taps into an H x W displacement table, so wrap-around
    overlap for kernels larger than the grid accumulates correctly.
    """
    k = kernel.shape[0]
    c = k // 2
    table = np.zeros((height, width))
    for si in range(k):
        for sj in range(k):
            table[(si - c) % height, (sj - c) % width] += kernel[si, sj]
    rows_x, cols_u = np.divmod(np.arange(height * width)[:, None], width)
    # displacement (x - u, y - v) wrapped into the table
    dx = (rows_x - rows_x.T) % height
    dy = (cols_u - cols_u.T) % width
    return table[dx, dy]


@dataclass(frozen=True)
class DenseSystem:
    """Explicit matrix form of a coded-image forward operator."""

    phi: np.ndarray
    height: int
    width: int
    n_bands: int

    @classmethod
    def from_system(cls, system: OpticalSystem, height: int, width: int) -> "DenseSystem":
        n = height * width
        n_bands = system.n_bands
        if n * n_bands > MAX_DENSE_UNKNOWNS:
            raise ParameterError(
                "dense oracle limited to %d unknowns, got %d"
                % (MAX_DENSE_UNKNOWNS, n * n_bands)
            )
        phi = np.zeros((3 * n, n_bands * n))
        for ch in range(3):
            for band in range(n_bands):
                block = _circulant_block(system.unified[ch, band], height, width)
                phi[ch * n : (ch + 1) * n, band * n : (band + 1) * n] = block
        return cls(phi=phi, height=height, width=width, n_bands=n_bands)

    def forward(self, cube: np.ndarray) -> np.ndarray:
        self._check_cube(cube)
        return unvec_image(self.phi @ vec_cube(cube), self.height, self.width)

    def adjoint(self, image: np.ndarray) -> np.ndarray:
        self._check_image(image)
        return unvec_cube(self.phi.T @ vec_image(image), self.height, self.width, self.n_bands)

    def ridge_solve(self, coded: np.ndarray, anchor: np.ndarray, gamma: float) -> np.ndarray:
        """Minimize 1/2 ||Phi x - j||^2 + gamma/2 ||x - t||^2 by dense Cholesky."""
        if not gamma > 0:
            raise ParameterError("gamma must be positive, got %r" % gamma)
        self._check_image(coded)
        self._check_cube(anchor)
        normal = self.phi.T @ self.phi + gamma * np.eye(self.phi.shape[1])
        rhs = self.phi.T @ vec_image(coded) + gamma * vec_cube(anchor)
        x = cho_solve(cho_factor(normal), rhs)
        return unvec_cube(x, self.height, self.width, self.n_bands)

    def tikhonov_solve(self, coded: np.ndarray, weight: float) -> np.ndarray:
        """Minimize 1/2 ||Phi x - j||^2 + weight/2 ||x||^2.

        ``weight == 0`` degrades to minimum-norm least squares.
        """
        if weight < 0:
            raise ParameterError("weight must be >= 0, got %r" % weight)
        if weight == 0:
            self._check_image(coded)
            x, *_ = np.linalg.lstsq(self.phi, vec_image(coded), rcond=None)
            return unvec_cube(x, self.height, self.width, self.n_bands)
        return self.ridge_solve(
            coded, np.zeros((self.height, self.width, self.n_bands)), weight
        )

    def _check_cube(self, cube: np.ndarray) -> None:
        expected = (self.height, self.width, self.n_bands)
        if np.shape(cube) != expected:
            raise DimensionError("cube shape %r, expected %r" % (np.shape(cube), expected))

    def _check_image(self, image: np.ndarray) -> None:
        expected = (self.height, self.width, 3)
        if np.shape(image) != expected:
            raise DimensionError("image shape %r, expected %r" % (np.shape(image), expected))


def build_dense_phi(system: OpticalSystem, height: int, width: int) -> DenseSystem:
    """Materialize the forward operator of ``system`` on an H x W grid."""
    return DenseSystem.from_system(system, height, width)


def dense_ridge_solve(
    dense: DenseSystem, coded: np.ndarray, anchor: np.ndarray, gamma: float
) -> np.ndarray:
    return dense.ridge_solve(coded, anchor, gamma)


def dense_tikhonov_solve(dense: DenseSystem, coded: np.ndarray, weight: float) -> np.ndarray:
    return dense.tikhonov_solve(coded, weight)
