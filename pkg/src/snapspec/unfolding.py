"""Unrolled ADMM/HQS reconstruction with pluggable priors and initializers.

Splitting the regularized inverse problem

    minimize_I  1/2 ||A I - J||^2 + sigma R(I)

over a consensus pair (I, Z) gives the three-step stage recipe: an exact
measurement-consistency solve for I, a denoiser standing in for the prior
proximal step on Z, and a scaled multiplier update.  The stage count is
fixed up front and every per-stage knob (gamma, zeta, sigma_tilde) lives in
a StageSchedule, so a run is fully described by (schedule, denoiser,
initializer, mode).

Stage numbering: Z(1) is the initializer output; stages 2..K each apply one
solve / denoise / multiplier triple.  A schedule with K = 1 therefore
returns the initialization untouched.  HQS mode is ADMM with the multiplier
update rate forced to zero, sharing the exact same code path so the
degeneration is bit-for-bit.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DimensionError, ParameterError
from .fidelity import (
    FidelityProblem,
    fidelity_solve,
    gdm_fidelity_step,
    lipschitz_bound,
)
from .optics import FrequencyOperator, apply_adjoint, apply_forward_frequency


def default_gamma_schedule(n_stages: int, gamma0: float = 0.01, ratio: float = 4.0) -> np.ndarray:
    """Geometric penalty ramp gamma0 * ratio**k, one weight per stage.

    Small early weights let the data term pull the iterate around; large
    late weights lock stages together.  A non-increasing ramp defeats that,
    so ratio must exceed 1.  The defaults are a starting point, not a tuned
    setting.
    """
    if n_stages < 1:
        raise ParameterError("n_stages must be >= 1, got %r" % n_stages)
    if not gamma0 > 0:
        raise ParameterError("gamma0 must be positive, got %r" % gamma0)
    if not ratio > 1:
        raise ParameterError(
            "schedule ratio must exceed 1 (flat or decaying penalty ramps "
            "destabilize late stages), got %r" % ratio
        )
    return gamma0 * ratio ** np.arange(n_stages, dtype=np.float64)


def _as_stage_array(values, n_stages: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=np.float64))
    if arr.ndim != 1 or arr.shape[0] != n_stages:
        raise ParameterError("%s must have one entry per stage (%d)" % (name, n_stages))
    return arr


@dataclass(frozen=True)
class StageSchedule:
    """Per-stage knobs: anchor weights, multiplier rates, denoiser noise levels.

    All three arrays have one entry per stage; a K-stage run consumes the
    first K - 1 entries (the final stage is the returned Z, which gets no
    solve of its own).  ``sigma_tilde`` is the noise level sqrt(sigma/gamma)
    handed to denoisers that accept one.
    """

    gamma: np.ndarray
    zeta: np.ndarray
    sigma_tilde: np.ndarray

    def __post_init__(self):
        n = np.atleast_1d(np.asarray(self.gamma)).shape[0]
        gamma = _as_stage_array(self.gamma, n, "gamma")
        zeta = _as_stage_array(self.zeta, n, "zeta")
        sigma_tilde = _as_stage_array(self.sigma_tilde, n, "sigma_tilde")
        if not np.all(gamma > 0):
            raise ParameterError("all gamma entries must be positive")
        if np.any(zeta < 0):
            raise ParameterError("zeta entries must be >= 0")
        if np.any(sigma_tilde < 0):
            raise ParameterError("sigma_tilde entries must be >= 0")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "sigma_tilde", sigma_tilde)

    @property
    def n_stages(self) -> int:
        return self.gamma.shape[0]

    @classmethod
    def from_gammas(cls, gamma, prior_weight: float = 0.0, zeta: float = 1.0) -> "StageSchedule":
        """Schedule from explicit anchor weights plus a global prior weight.

        ``sigma_tilde`` is derived as sqrt(prior_weight / gamma) per stage.
        """
        gamma = np.atleast_1d(np.asarray(gamma, dtype=np.float64))
        if not np.all(gamma > 0):
            raise ParameterError("all gamma entries must be positive")
        if prior_weight < 0:
            raise ParameterError("prior_weight must be >= 0")
        if zeta < 0:
            raise ParameterError("zeta must be >= 0")
        return cls(
            gamma=gamma,
            zeta=np.full(gamma.shape[0], float(zeta)),
            sigma_tilde=np.sqrt(prior_weight / gamma),
        )

    @classmethod
    def geometric(
        cls,
        n_stages: int,
        gamma0: float = 0.01,
        ratio: float = 4.0,
        prior_weight: float = 0.0,
        zeta: float = 1.0,
    ) -> "StageSchedule":
        return cls.from_gammas(
            default_gamma_schedule(n_stages, gamma0, ratio), prior_weight, zeta
        )

    @classmethod
    def constant(
        cls, n_stages: int, gamma: float, prior_weight: float = 0.0, zeta: float = 1.0
    ) -> "StageSchedule":
        if n_stages < 1:
            raise ParameterError("n_stages must be >= 1, got %r" % n_stages)
        return cls.from_gammas(np.full(n_stages, float(gamma)), prior_weight, zeta)


# ---------------------------------------------------------------------------
# denoisers (prior proximal stand-ins)


class Denoiser(ABC):
    """A named prior: maps an intermediate cube to a cleaner one.

    ``noise_level`` is the schedule's sigma_tilde for the current stage;
    denoisers without a noise-level parameter ignore it.
    """

    name: str = "?"

    @abstractmethod
    def denoise(self, cube: np.ndarray, noise_level: float) -> np.ndarray: ...


class IdentityDenoiser(Denoiser):
    name = "identity"

    def denoise(self, cube: np.ndarray, noise_level: float) -> np.ndarray:
        return cube


class GaussianDenoiser(Denoiser):
    """Per-band spatial Gaussian smoothing with a fixed std in pixels."""

    name = "gaussian"

    def __init__(self, spatial_std: float = 1.0):
        if not spatial_std > 0:
            raise ParameterError("spatial_std must be positive, got %r" % spatial_std)
        self.spatial_std = float(spatial_std)

    def denoise(self, cube: np.ndarray, noise_level: float) -> np.ndarray:
        return ndimage.gaussian_filter(cube, sigma=(self.spatial_std, self.spatial_std, 0.0))


class TotalVariationDenoiser(Denoiser):
    """Anisotropic total-variation proximal smoothing, band by band."""

    name = "tv"

    def __init__(self, weight: float = 0.01, iters: int = 30):
        if weight < 0:
            raise ParameterError("tv weight must be >= 0, got %r" % weight)
        if iters < 1:
            raise ParameterError("tv iters must be >= 1, got %r" % iters)
        self.weight = float(weight)
        self.iters = int(iters)

    def denoise(self, cube: np.ndarray, noise_level: float) -> np.ndarray:
        return tv_denoise(cube, self.weight, self.iters)


class QuadraticDenoiser(Denoiser):
    """Exact proximal step of the squared-norm prior 1/2 ||Z||^2.

    Solves argmin_Z 1/2 ||Z - x||^2 / sigma_tilde^2 + 1/2 ||Z||^2 in closed
    form: Z = x / (1 + sigma_tilde^2).  The prior weight enters purely
    through the noise level, so this denoiser has no knobs of its own.
    """

    name = "quadratic"

    def denoise(self, cube: np.ndarray, noise_level: float) -> np.ndarray:
        return cube / (1.0 + noise_level**2)


def _tv_adjoint_grad(qh: np.ndarray, qv: np.ndarray) -> np.ndarray:
    # adjoint of the forward-difference gradient with Neumann boundary
    out = np.zeros_like(qh)
    out[:, 0] = -qh[:, 0]
    out[:, 1:] = qh[:, :-1] - qh[:, 1:]
    out[0, :] -= qv[0, :]
    out[1:, :] += qv[:-1, :] - qv[1:, :]
    return out


def tv_denoise(cube: np.ndarray, weight: float, iters: int) -> np.ndarray:
    """Approximate prox of weight * TV_aniso at ``cube``, each band separately.

    Solves the dual box-constrained problem by projected gradient ascent
    with the safe step 1/8 (the gradient operator's squared norm bound in
    2-D).  Forward differences use a Neumann boundary, so constants pass
    through unchanged; ``weight == 0`` returns the input exactly.
    """
    cube = np.asarray(cube, dtype=np.float64)
    if cube.ndim == 2:
        return tv_denoise(cube[:, :, None], weight, iters)[:, :, 0]
    if cube.ndim != 3:
        raise DimensionError("expected (H, W, bands) cube, got shape %r" % (cube.shape,))
    if weight < 0:
        raise ParameterError("weight must be >= 0, got %r" % weight)
    if iters < 1:
        raise ParameterError("iters must be >= 1, got %r" % iters)
    if weight == 0:
        return cube.copy()

    tau = 0.125
    qh = np.zeros_like(cube)
    qv = np.zeros_like(cube)
    for _ in range(iters):
        z = cube - _tv_adjoint_grad(qh, qv)
        qh[:, :-1] = np.clip(qh[:, :-1] + tau * (z[:, 1:] - z[:, :-1]), -weight, weight)
        qv[:-1, :] = np.clip(qv[:-1, :] + tau * (z[1:, :] - z[:-1, :]), -weight, weight)
    return cube - _tv_adjoint_grad(qh, qv)


# ---------------------------------------------------------------------------
# initializers


class Initializer(ABC):
    """Named strategy producing the first prior iterate Z(1) from the coded image."""

    name: str = "?"

    @abstractmethod
    def initialize(self, coded: np.ndarray, op: FrequencyOperator) -> np.ndarray: ...


class ZeroInitializer(Initializer):
    name = "zero"

    def initialize(self, coded: np.ndarray, op: FrequencyOperator) -> np.ndarray:
        return np.zeros((op.height, op.width, op.n_bands))


class RandInitializer(Initializer):
    """Uniform [0, 1) start, seeded for reproducibility."""

    name = "rand"

    def __init__(self, seed: int = 0):
        self.seed = int(seed)

    def initialize(self, coded: np.ndarray, op: FrequencyOperator) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return rng.uniform(size=(op.height, op.width, op.n_bands))


class MeanInitializer(Initializer):
    """Every band starts as the per-pixel mean over the coded image's channels."""

    name = "mean"

    def initialize(self, coded: np.ndarray, op: FrequencyOperator) -> np.ndarray:
        mean = np.asarray(coded, dtype=np.float64).mean(axis=2)
        return np.repeat(mean[:, :, None], op.n_bands, axis=2)


class AdjointInitializer(Initializer):
    """Back-projection start: the forward operator's adjoint applied to the image."""

    name = "adjoint"

    def initialize(self, coded: np.ndarray, op: FrequencyOperator) -> np.ndarray:
        return apply_adjoint(op, np.asarray(coded, dtype=np.float64))


# ---------------------------------------------------------------------------
# the stage loop


@dataclass(frozen=True)
class StageTrace:
    """Diagnostics for one stage of a reconstruction run.

    ``data_fidelity`` is 1/2 ||A Z - J||^2 at the stage's prior iterate.
    ``delta`` is the iterate movement ||Z(k) - Z(k-1)||, the oscillation
    diagnostic; ``primal_residual`` is the consensus gap ||I(k) - Z(k)||.
    Both are NaN on stage 1, which has no predecessor and no fidelity solve,
    as is ``gamma``.
    """

    stage: int
    data_fidelity: float
    delta: float
    gamma: float
    primal_residual: float


@dataclass(frozen=True)
class ReconstructionResult:
    cube: np.ndarray
    trace: list[StageTrace] = field(default_factory=list)


def reconstruct(
    coded: np.ndarray,
    op: FrequencyOperator,
    schedule: StageSchedule,
    denoiser: Denoiser,
    initializer: Initializer,
    mode: str = "admm",
    trace: bool = False,
    solver: str = "exact",
    gdm_iters: int = 10,
) -> ReconstructionResult:
    """Run the unrolled stage loop and return the final prior iterate.

    ``mode`` selects ADMM or HQS (multiplier rates forced to zero).  The
    measurement-consistency step uses the exact frequency-domain solver by
    default; ``solver="gdm"`` swaps in ``gdm_iters`` warm-started gradient
    steps instead, as a baseline.  With ``trace=True`` the result carries
    one StageTrace per stage.
    """
    if mode not in ("admm", "hqs"):
        raise ParameterError("mode must be 'admm' or 'hqs', got %r" % mode)
    if solver not in ("exact", "gdm"):
        raise ParameterError("solver must be 'exact' or 'gdm', got %r" % solver)
    coded = np.asarray(coded, dtype=np.float64)
    if coded.shape != (op.height, op.width, 3):
        raise DimensionError(
            "coded image shape %r does not match operator %r"
            % (coded.shape, (op.height, op.width, 3))
        )
    zeta = np.zeros_like(schedule.zeta) if mode == "hqs" else schedule.zeta

    z = np.asarray(initializer.initialize(coded, op), dtype=np.float64)
    if z.shape != (op.height, op.width, op.n_bands):
        raise DimensionError(
            "initializer produced shape %r, expected %r"
            % (z.shape, (op.height, op.width, op.n_bands))
        )
    beta = np.zeros_like(z)

    problem = FidelityProblem.from_coded_image(op, coded, gamma=schedule.gamma[0])
    lipschitz = lipschitz_bound(op) if solver == "gdm" else 0.0

    records: list[StageTrace] = []

    def fidelity_of(cube: np.ndarray) -> float:
        resid = apply_forward_frequency(op, cube) - coded
        return 0.5 * float(np.sum(resid**2))

    if trace:
        records.append(StageTrace(1, fidelity_of(z), float("nan"), float("nan"), float("nan")))

    for k in range(schedule.n_stages - 1):
        gamma = schedule.gamma[k]
        prob_k = problem.with_gamma(gamma)
        anchor = z - beta
        if solver == "exact":
            i_next = fidelity_solve(prob_k, anchor)
        else:
            i_next = gdm_fidelity_step(
                prob_k, anchor, z, step=1.0 / (lipschitz + gamma), iters=gdm_iters
            )
        z_next = denoiser.denoise(i_next + beta, schedule.sigma_tilde[k])
        beta = beta + zeta[k] * (i_next - z_next)
        if trace:
            records.append(
                StageTrace(
                    k + 2,
                    fidelity_of(z_next),
                    float(np.linalg.norm(z_next - z)),
                    float(gamma),
                    float(np.linalg.norm(i_next - z_next)),
                )
            )
        z = z_next

    return ReconstructionResult(cube=z, trace=records)


# registries used by the CLI and config parsing

DENOISERS = {
    "identity": IdentityDenoiser,
    "gaussian": GaussianDenoiser,
    "tv": TotalVariationDenoiser,
    "quadratic": QuadraticDenoiser,
}

INITIALIZERS = {
    "zero": ZeroInitializer,
    "rand": RandInitializer,
    "mean": MeanInitializer,
    "adjoint": AdjointInitializer,
}
