"""Exact frequency-domain solver for the measurement-consistency subproblem.

The subproblem anchored at a cube ``T`` with penalty weight ``gamma`` is

    minimize_X  1/2 ||A X - J||^2  +  gamma/2 ||X - T||^2,

where A is the coded-image forward operator.  Under circular boundary
conditions A diagonalizes per spatial frequency into a 3 x N complex matrix
H_f (N = band count), so the normal equations split into independent N x N
systems.  Rather than inverting N x N per frequency, the solution is
rearranged through the push-through identity so only the 3 x 3 Hermitian
matrix  A_f = I + (1/gamma) H_f H_f^*  needs inverting:

    U_f = T_f + (1/gamma) H_f^* [ V_f - A_f^{-1} ((1/gamma) H_f H_f^* V_f + H_f T_f) ]

with V the coded-image spectrum and T_f the anchor spectrum.  The 3 x 3
inverses are computed by a two-level Schur-complement recursion that only
ever divides by scalars bounded below by 1, one set of scalars per
frequency bin.

``fidelity_solve_naive`` solves the untransformed per-frequency N x N
systems directly and exists to cross-validate the rearrangement;
``gdm_fidelity_step`` is the plain gradient-descent baseline the closed
form replaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError, SingularPivotError
from .optics import FrequencyOperator, apply_adjoint, apply_forward_frequency

_PIVOT_FLOOR = 1e-300


@dataclass(frozen=True)
class FidelityProblem:
    """One measurement-consistency subproblem instance.

    ``coded_spectrum`` is the per-channel forward DFT of the coded image,
    shape (3, H, W) complex.  ``gamma`` is the positive anchor weight.
    """

    op: FrequencyOperator
    coded_spectrum: np.ndarray
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ParameterError("gamma must be positive, got %r" % self.gamma)
        expected = (3, self.op.height, self.op.width)
        if self.coded_spectrum.shape != expected:
            raise DimensionError(
                "coded_spectrum shape %r, expected %r" % (self.coded_spectrum.shape, expected)
            )

    @classmethod
    def from_coded_image(cls, op: FrequencyOperator, coded: np.ndarray, gamma: float):
        coded = np.asarray(coded, dtype=np.float64)
        if coded.shape != (op.height, op.width, 3):
            raise DimensionError(
                "coded image shape %r does not match operator" % (coded.shape,)
            )
        return cls(op=op, coded_spectrum=np.fft.fft2(coded.transpose(2, 0, 1)), gamma=gamma)

    def coded_image(self) -> np.ndarray:
        return np.fft.ifft2(self.coded_spectrum).real.transpose(1, 2, 0)

    def with_gamma(self, gamma: float) -> "FidelityProblem":
        return FidelityProblem(op=self.op, coded_spectrum=self.coded_spectrum, gamma=gamma)


def block_inverse_3x3(a: np.ndarray) -> np.ndarray:
    """Invert Hermitian 3 x 3 matrices of the form identity-plus-PSD.

    ``a`` has shape (..., 3, 3); leading axes are typically frequency bins.
    The recursion eliminates entry (0, 0) first via the inner Schur
    complement, inverts the top-left 2 x 2 block, then forms the outer
    Schur complement against entry (2, 2).  All divisions are by scalars
    that are >= 1 for identity-plus-PSD input; a guard trips if any pivot
    underflows regardless.
    """
    a = np.asarray(a)
    if a.shape[-2:] != (3, 3):
        raise DimensionError("expected trailing 3x3 blocks, got %r" % (a.shape,))
    a00 = a[..., 0, 0]
    a01 = a[..., 0, 1]
    a02 = a[..., 0, 2]
    a10 = a[..., 1, 0]
    a11 = a[..., 1, 1]
    a12 = a[..., 1, 2]
    a20 = a[..., 2, 0]
    a21 = a[..., 2, 1]
    a22 = a[..., 2, 2]

    if np.any(np.abs(a00) < _PIVOT_FLOOR):
        raise SingularPivotError("leading pivot underflow")
    inv00 = 1.0 / a00

    # inner Schur complement eliminating the (0, 0) entry
    c_den = a11 - a10 * inv00 * a01
    if np.any(np.abs(c_den) < _PIVOT_FLOOR):
        raise SingularPivotError("inner Schur pivot underflow")
    c = 1.0 / c_den
    b00 = inv00 + inv00 * a01 * c * a10 * inv00
    b01 = -inv00 * a01 * c
    b10 = -c * a10 * inv00
    b11 = c

    # outer Schur complement of the 2x2 block against the (2, 2) entry
    t0 = b00 * a02 + b01 * a12
    t1 = b10 * a02 + b11 * a12
    s0 = a20 * b00 + a21 * b10
    s1 = a20 * b01 + a21 * b11
    d_den = a22 - (a20 * t0 + a21 * t1)
    if np.any(np.abs(d_den) < _PIVOT_FLOOR):
        raise SingularPivotError("outer Schur pivot underflow")
    d = 1.0 / d_den

    out = np.empty(a.shape, dtype=np.result_type(a.dtype, np.complex128))
    out[..., 0, 0] = b00 + t0 * d * s0
    out[..., 0, 1] = b01 + t0 * d * s1
    out[..., 0, 2] = -t0 * d
    out[..., 1, 0] = b10 + t1 * d * s0
    out[..., 1, 1] = b11 + t1 * d * s1
    out[..., 1, 2] = -t1 * d
    out[..., 2, 0] = -d * s0
    out[..., 2, 1] = -d * s1
    out[..., 2, 2] = d
    return out


def _anchor_spectrum(prob: FidelityProblem, anchor: np.ndarray) -> np.ndarray:
    anchor = np.asarray(anchor, dtype=np.float64)
    expected = (prob.op.height, prob.op.width, prob.op.n_bands)
    if anchor.shape != expected:
        raise DimensionError("anchor shape %r, expected %r" % (anchor.shape, expected))
    return np.fft.fft2(anchor.transpose(2, 0, 1))


def fidelity_solve(prob: FidelityProblem, anchor: np.ndarray) -> np.ndarray:
    """Exact minimizer of the anchored subproblem via 3 x 3 block inversion.

    Cost per call: one FFT per band and channel plus pointwise 3 x 3
    algebra over frequency bins.  The gradient of the subproblem objective
    vanishes at the output up to floating-point roundoff.
    """
    transfer = prob.op.transfer
    g = 1.0 / prob.gamma
    anchor_spec = _anchor_spectrum(prob, anchor)
    coded_spec = prob.coded_spectrum

    gram = g * np.einsum("aihw,bihw->hwab", transfer, np.conj(transfer))
    a = gram + np.eye(3)
    a_inv = block_inverse_3x3(a)

    mixed = np.einsum("hwab,bhw->ahw", gram, coded_spec)
    mixed += np.einsum("cihw,ihw->chw", transfer, anchor_spec)
    resid = coded_spec - np.einsum("hwab,bhw->ahw", a_inv, mixed)
    u = anchor_spec + g * np.einsum("cihw,chw->ihw", np.conj(transfer), resid)
    return np.fft.ifft2(u).real.transpose(1, 2, 0)


def fidelity_solve_naive(prob: FidelityProblem, anchor: np.ndarray) -> np.ndarray:
    """Solve the same subproblem by direct per-frequency N x N Hermitian solves.

    Memory scales with bands^2 per frequency; intended for test scales to
    validate the 3 x 3 rearrangement, not for production use.
    """
    transfer = prob.op.transfer
    n_bands = prob.op.n_bands
    anchor_spec = _anchor_spectrum(prob, anchor)

    normal = np.einsum("cihw,cjhw->hwij", np.conj(transfer), transfer)
    normal += prob.gamma * np.eye(n_bands)
    rhs = np.einsum("cihw,chw->hwi", np.conj(transfer), prob.coded_spectrum)
    rhs += prob.gamma * anchor_spec.transpose(1, 2, 0)
    u = np.linalg.solve(normal, rhs[..., None])[..., 0]
    return np.fft.ifft2(u.transpose(2, 0, 1)).real.transpose(1, 2, 0)


def subproblem_objective(prob: FidelityProblem, x: np.ndarray, anchor: np.ndarray) -> float:
    """Value of 1/2 ||A x - J||^2 + gamma/2 ||x - anchor||^2."""
    coded = prob.coded_image()
    resid = apply_forward_frequency(prob.op, x) - coded
    return 0.5 * float(np.sum(resid**2)) + 0.5 * prob.gamma * float(np.sum((x - anchor) ** 2))


def subproblem_gradient(prob: FidelityProblem, x: np.ndarray, anchor: np.ndarray) -> np.ndarray:
    """Gradient A^T (A x - J) + gamma (x - anchor) of the subproblem objective."""
    coded = prob.coded_image()
    resid = apply_forward_frequency(prob.op, x) - coded
    return apply_adjoint(prob.op, resid) + prob.gamma * (x - anchor)


def gdm_fidelity_step(
    prob: FidelityProblem,
    anchor: np.ndarray,
    current: np.ndarray,
    step: float,
    iters: int,
) -> np.ndarray:
    """Gradient-descent baseline for the subproblem.

    Runs ``iters`` fixed-step gradient iterations from ``current``, applying
    the forward operator and its adjoint in the frequency domain each step.
    With step <= 1/(L + gamma), L the largest per-frequency squared singular
    value of the transfer matrices, the iterates converge to the closed-form
    solution linearly; the point of the baseline is how slowly.
    """
    if not step > 0:
        raise ParameterError("step must be positive, got %r" % step)
    if iters < 0:
        raise ParameterError("iters must be >= 0")
    x = np.array(current, dtype=np.float64, copy=True)
    if iters == 0:
        return x
    anchor = np.asarray(anchor, dtype=np.float64)
    coded = prob.coded_image()
    for _ in range(iters):
        resid = apply_forward_frequency(prob.op, x) - coded
        x -= step * (apply_adjoint(prob.op, resid) + prob.gamma * (x - anchor))
    return x


def lipschitz_bound(op: FrequencyOperator) -> float:
    """Largest per-frequency eigenvalue of H_f H_f^*; equals ||A||^2."""
    gram = np.einsum("aihw,bihw->hwab", op.transfer, np.conj(op.transfer))
    return float(np.linalg.eigvalsh(gram)[..., -1].max())
