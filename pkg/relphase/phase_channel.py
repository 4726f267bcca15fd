"""
The phase-averaging channel rho -> integral dphi P(phi) exp(-i phi n) rho exp(i phi n).

Observables commuting with the photon number cannot tell priors apart; this module applies the
channel under any CircularPrior and measures how far expectations move between priors.
"""
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import List, Sequence, Tuple

import numpy as np

from relphase.config import DEFAULT_RESOLUTION, DEFAULT_TOLERANCES, Tolerances
from relphase.exceptions import InvalidStateError, ResolutionError
from relphase.fock_core import (
    DensityMatrix,
    check_hermitian,
    coherent_amplitudes,
    expectation,
    purity,
    trace_distance,
)
from relphase.priors import CircularPrior, quadrature

logger = logging.getLogger(__name__)

COMMUTATION_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PhaseAverageReport:
    input_descriptor: str
    prior: CircularPrior
    output: DensityMatrix
    offdiag_norm: float
    purity: float

    def __post_init__(self):
        lower = 1 / self.output.dim - 1e-10
        if not lower <= self.purity <= 1 + 1e-10:
            raise InvalidStateError(
                f"Purity {self.purity!r} outside [{lower!r}, 1] for dimension {self.output.dim}"
            )


def phase_kernel(
    prior: CircularPrior, dim: int, resolution: int = DEFAULT_RESOLUTION
) -> np.ndarray:
    """
    The Schur multiplier K[n, m] = sum_k w_k exp(-i phi_k (n - m)) of the channel.

    The averaged state is the elementwise product ``rho * K``.
    """
    if prior.kind == "flat":
        return np.eye(dim, dtype=complex)
    points, weights = quadrature(prior, resolution)
    offsets = np.arange(-(dim - 1), dim)
    characteristic = np.exp(-1j * np.outer(offsets, points)) @ weights
    n = np.arange(dim)
    return characteristic[(n[:, None] - n[None, :]) + dim - 1]


def phase_average(
    state: DensityMatrix,
    prior: CircularPrior,
    resolution: int = DEFAULT_RESOLUTION,
    *,
    input_descriptor: str = "state",
) -> PhaseAverageReport:
    """
    Average a photon-number-basis state over the global phase under ``prior``.

    A flat prior zeroes every off-diagonal entry exactly; other priors go through quadrature.

    Args:
        state: The input state in the fock basis
        prior: Distribution of the unknown phase
        resolution: Quadrature points for smooth priors; must be at least 2 * dim
        input_descriptor: Free-form description carried into the report

    Returns:
        PhaseAverageReport

    Raises:
        InvalidStateError: the state is not in the photon-number basis
        ResolutionError: a smooth prior with resolution below 2 * dim
    """
    if state.basis_label != "fock":
        raise InvalidStateError(
            f"Phase averaging needs a photon-number basis state, got basis {state.basis_label!r}"
        )
    dim = state.dim
    if prior.is_smooth and resolution < 2 * dim:
        raise ResolutionError(
            f"Resolution {resolution} is too low for {prior} on dimension {dim}; need at least "
            f"{2 * dim}"
        )

    averaged = state.entries * phase_kernel(prior, dim, resolution)
    output = DensityMatrix(averaged, "fock", state.tolerances)
    off_diagonal = np.abs(averaged - np.diag(np.diag(averaged)))
    report = PhaseAverageReport(
        input_descriptor=input_descriptor,
        prior=prior,
        output=output,
        offdiag_norm=float(off_diagonal.max()),
        purity=purity(output),
    )
    logger.debug(
        f"Phase average of {input_descriptor} under {prior}: "
        f"offdiag={report.offdiag_norm:.3e} purity={report.purity:.12f}"
    )
    return report


def is_phase_insensitive(
    obs: np.ndarray, *, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> Tuple[bool, float]:
    """
    Whether an observable commutes with the photon number.

    Returns:
        (insensitive, residual) where residual is max |[obs, n]| entrywise
    """
    obs = check_hermitian(obs, tolerances=tolerances)
    n = np.arange(obs.shape[0])
    # [O, n]_ij = O_ij (j - i)
    residual = float(np.max(np.abs(obs * (n[None, :] - n[:, None])))) if obs.size else 0.0
    return residual <= COMMUTATION_TOL, residual


def prior_expectations(
    state: DensityMatrix,
    obs: np.ndarray,
    priors: Sequence[CircularPrior],
    resolution: int = DEFAULT_RESOLUTION,
) -> List[float]:
    """Expectation of ``obs`` after phase averaging under each prior, in order."""
    return [
        expectation(obs, phase_average(state, prior, resolution).output)
        for prior in priors
    ]


def max_pairwise_deviation(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return max(abs(a - b) for a, b in combinations(values, 2))


def prior_independence_check(
    state: DensityMatrix,
    obs: np.ndarray,
    priors: Sequence[CircularPrior],
    resolution: int = DEFAULT_RESOLUTION,
) -> float:
    """
    The largest difference between expectations of ``obs`` across phase-averaged states.

    For an observable that commutes with the photon number this is zero up to rounding whatever
    the priors; a non-zero value is data, not an error.
    """
    values = prior_expectations(state, obs, priors, resolution)
    deviation = max_pairwise_deviation(values)
    logger.debug(
        f"Prior expectations {dict(zip(map(str, priors), values))}, deviation {deviation:.3e}"
    )
    return deviation


def poisson_mixture(
    alpha: complex, cutoff: int, *, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> DensityMatrix:
    """The number-state ensemble sum_n p_n |n><n| with Poisson weights of mean |alpha|^2."""
    amplitudes = coherent_amplitudes(alpha, cutoff, tolerances=tolerances).amplitudes
    return DensityMatrix(np.diag(np.abs(amplitudes) ** 2), "fock", tolerances)


def coherent_phase_ensemble(
    alpha: complex,
    cutoff: int,
    resolution: int = DEFAULT_RESOLUTION,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> DensityMatrix:
    """The equal-weight mixture of coherent states ||alpha| exp(-i phi_k)> on a uniform grid."""
    amplitudes = coherent_amplitudes(abs(alpha), cutoff, tolerances=tolerances).amplitudes
    phases = 2 * np.pi * np.arange(resolution) / resolution
    members = amplitudes[:, None] * np.exp(-1j * np.outer(np.arange(cutoff + 1), phases))
    return DensityMatrix(members @ members.conj().T / resolution, "fock", tolerances)


def ensemble_equivalence(
    alpha: complex,
    cutoff: int,
    resolution: int = DEFAULT_RESOLUTION,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """
    Trace distance between the coherent-state phase ensemble and the number-state ensemble.

    The two decompositions describe one and the same mixed state; the distance vanishes up to
    rounding whenever ``resolution > cutoff``.
    """
    distance = trace_distance(
        coherent_phase_ensemble(alpha, cutoff, resolution, tolerances=tolerances),
        poisson_mixture(alpha, cutoff, tolerances=tolerances),
    )
    logger.debug(
        f"Ensemble distance for |alpha|={abs(alpha)} cutoff={cutoff} "
        f"resolution={resolution}: {distance:.3e}"
    )
    return distance
