"""
Relative phase of a two-mode coherent state.

The pipeline builds |alpha, beta>, regroups its amplitudes into blocks of fixed total photon
number N (entries indexed by k = n1, the photons in mode a), identifies every block with a
spin-N/2 coherent state of parameter xi = alpha / beta, and contracts the blocks into a single
relative Fock space. Dropping the coherences between different N is the same as flat averaging
over the overall phase, so the result does not depend on any prior.

Phase convention: amplitudes are written |x| exp(-i phi_x), so phi_x = -arg(x) and the relative
phase is phi_r = phi_alpha - phi_beta = arg(beta) - arg(alpha). The contraction target is then
|alpha| exp(-i phi_r) = (alpha / beta) |beta|.
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import gammaln

from relphase.config import (
    DEFAULT_TOLERANCES,
    Tolerances,
    default_rel_cutoff,
    default_two_mode_cutoff,
)
from relphase.exceptions import (
    DimensionMismatchError,
    EmbeddingLossError,
    InvalidStateError,
    TruncationError,
)
from relphase.fock_core import (
    DensityMatrix,
    FockVector,
    TwoModeState,
    coherent_amplitudes,
    fidelity,
    purity,
    tensor,
    vector_fidelity,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SpinBlockDecomposition:
    """
    Per-N amplitude vectors of a two-mode state.

    ``blocks[N][k]`` is the amplitude of |n1 = k, n2 = N - k>. Blocks with N above
    ``complete_max_N`` straddle the truncation boundary and carry zeros where the two-mode
    state had no entries.
    """

    blocks: Tuple[np.ndarray, ...]
    complete_max_N: int

    def __post_init__(self):
        for n_total, block in enumerate(self.blocks):
            if block.shape != (n_total + 1,):
                raise InvalidStateError(
                    f"Block N={n_total} has {block.size} entries; expected {n_total + 1}"
                )
            block.flags.writeable = False

    @property
    def max_N(self) -> int:
        return len(self.blocks) - 1

    @property
    def block_weights(self) -> np.ndarray:
        """p_N, the squared norm of each block."""
        return np.array([np.vdot(block, block).real for block in self.blocks])


@dataclass(frozen=True)
class SpinCoherentParams:
    xi: complex
    theta: float
    phi_r: float
    mean_N: float


@dataclass(frozen=True, eq=False)
class FactorizationReport:
    alpha: complex
    beta: complex
    fidelity_to_target: float
    rel_state_purity: float
    target_amplitude: complex
    condition_ratio: float
    cutoff: int
    rel_cutoff: int
    embedding_loss: float
    mean_N: float
    number_weights: np.ndarray

    def __post_init__(self):
        for name in ("fidelity_to_target", "rel_state_purity"):
            value = getattr(self, name)
            if not 0 <= value <= 1 + 1e-10:
                raise InvalidStateError(f"{name} {value!r} outside [0, 1]")


def two_mode_coherent(
    alpha: complex,
    beta: complex,
    cutoff: Optional[int] = None,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> TwoModeState:
    """
    |alpha> (x) |beta> truncated at ``cutoff`` photons per mode.

    Raises:
        TruncationError: either Poisson tail, or the boundary mass, exceeds ``tail_tol``
    """
    if cutoff is None:
        cutoff = default_two_mode_cutoff(alpha, beta)
        logger.debug(f"Two-mode cutoff for alpha={alpha}, beta={beta}: {cutoff}")
    state = tensor(
        coherent_amplitudes(alpha, cutoff, tolerances=tolerances),
        coherent_amplitudes(beta, cutoff, tolerances=tolerances),
        tolerances=tolerances,
    )
    if state.boundary_mass > tolerances.tail_tol:
        raise TruncationError(
            f"Two-mode boundary mass {state.boundary_mass:.3e} exceeds tail_tol "
            f"{tolerances.tail_tol:g} at cutoff {cutoff}"
        )
    return state


def to_spin_blocks(state: TwoModeState) -> SpinBlockDecomposition:
    """Regroup c[n1][n2] by total photon number N = n1 + n2; a pure relabeling of entries."""
    cutoff_a, cutoff_b = state.cutoffs
    blocks = []
    for n_total in range(cutoff_a + cutoff_b + 1):
        k = np.arange(max(0, n_total - cutoff_b), min(cutoff_a, n_total) + 1)
        block = np.zeros(n_total + 1, dtype=complex)
        block[k] = state.amplitudes[k, n_total - k]
        blocks.append(block)
    return SpinBlockDecomposition(tuple(blocks), min(cutoff_a, cutoff_b))


def spin_coherent_block(n_total: int, xi: complex) -> np.ndarray:
    """
    Spin-N/2 coherent state in the k = N/2 + M basis:
    binom(N, k)^(1/2) (1 + |xi|^2)^(-N/2) xi^k.

    Binomials are evaluated in log space, so any N is safe from overflow.
    """
    if n_total < 0:
        raise DimensionMismatchError(f"N must be non-negative, got {n_total}")
    xi = complex(xi)
    k = np.arange(n_total + 1)
    if xi == 0:
        block = np.zeros(n_total + 1, dtype=complex)
        block[0] = 1.0
        return block
    log_binomial = gammaln(n_total + 1) - gammaln(k + 1) - gammaln(n_total - k + 1)
    log_modulus = (
        log_binomial / 2 - n_total / 2 * np.log1p(abs(xi) ** 2) + k * np.log(abs(xi))
    )
    return np.exp(log_modulus) * np.exp(1j * k * np.angle(xi))


def spin_coherent_params(alpha: complex, beta: complex) -> SpinCoherentParams:
    """
    Spin-coherent parameters of |alpha, beta>.

    ``theta`` follows |alpha| / <N>^(1/2) = -sin(theta / 2), |beta| / <N>^(1/2) = cos(theta / 2).

    Raises:
        InvalidStateError: beta is zero, so xi is undefined
    """
    if beta == 0:
        raise InvalidStateError("beta must be non-zero to define xi = alpha / beta")
    mean_n = abs(alpha) ** 2 + abs(beta) ** 2
    return SpinCoherentParams(
        xi=complex(alpha) / complex(beta),
        theta=-2 * math.asin(abs(alpha) / math.sqrt(mean_n)),
        phi_r=(np.angle(beta) - np.angle(alpha)) % (2 * math.pi),
        mean_N=mean_n,
    )


def total_number_prefactor(n_total: int, mean_n: float, beta: complex) -> complex:
    """exp(-<N>/2) (<N>^(1/2) exp(-i phi_beta))^N / sqrt(N!)."""
    log_modulus = -mean_n / 2 + n_total / 2 * math.log(mean_n) - gammaln(n_total + 1) / 2
    return complex(np.exp(log_modulus) * np.exp(1j * n_total * np.angle(beta)))


def verify_block_identity(
    alpha: complex,
    beta: complex,
    cutoff: Optional[int] = None,
    *,
    xi_sign: int = 1,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """
    Largest entrywise mismatch between the spin blocks of |alpha, beta> and the spin coherent
    expansion prefactor(N) * spin_coherent_block(N, xi_sign * alpha / beta).

    The expansion is exact with ``xi_sign = 1``. Only blocks untouched by truncation
    (N <= cutoff) are compared.
    """
    params = spin_coherent_params(alpha, beta)
    decomposition = to_spin_blocks(two_mode_coherent(alpha, beta, cutoff, tolerances=tolerances))
    deviation = 0.0
    for n_total in range(decomposition.complete_max_N + 1):
        expected = total_number_prefactor(
            n_total, params.mean_N, beta
        ) * spin_coherent_block(n_total, xi_sign * params.xi)
        deviation = max(
            deviation, float(np.max(np.abs(decomposition.blocks[n_total] - expected)))
        )
    logger.debug(f"Block identity deviation for alpha={alpha}, beta={beta}: {deviation:.3e}")
    return deviation


def contract_block(
    n_total: int, block: np.ndarray, cutoff: Optional[int] = None
) -> FockVector:
    """
    Embed block entry k at Fock index k of a single mode with photon cutoff ``cutoff``
    (default N). Entries beyond the cutoff are dropped and reported as the tail mass.
    """
    block = np.asarray(block, dtype=complex)
    if block.shape != (n_total + 1,):
        raise DimensionMismatchError(
            f"Block N={n_total} must have {n_total + 1} entries, got {block.size}"
        )
    cutoff = n_total if cutoff is None else cutoff
    amplitudes = np.zeros(cutoff + 1, dtype=complex)
    kept = min(cutoff, n_total) + 1
    amplitudes[:kept] = block[:kept]
    dropped = block[kept:]
    return FockVector(amplitudes, float(np.vdot(dropped, dropped).real))


def contraction_fidelity(n_total: int, eta: complex) -> float:
    """Fidelity of the embedded spin block with xi = eta / sqrt(N) against the coherent state eta."""
    if n_total < 1:
        raise DimensionMismatchError(f"Contraction needs N >= 1, got {n_total}")
    block = contract_block(n_total, spin_coherent_block(n_total, eta / math.sqrt(n_total)))
    target = coherent_amplitudes(eta, n_total, strict=False)
    return vector_fidelity(target.amplitudes, block.amplitudes)


class RelativePhaseComponents(NamedTuple):
    state: DensityMatrix
    number_weights: np.ndarray
    embedding_loss: float
    cutoff: int
    rel_cutoff: int


def relative_phase_components(
    alpha: complex,
    beta: complex,
    cutoff: Optional[int] = None,
    rel_cutoff: Optional[int] = None,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> RelativePhaseComponents:
    """relative_phase_state together with the p_N weights, embedding loss and resolved cutoffs."""
    if beta == 0:
        raise InvalidStateError("beta must be non-zero")
    cutoff = default_two_mode_cutoff(alpha, beta) if cutoff is None else cutoff
    rel_cutoff = default_rel_cutoff(alpha) if rel_cutoff is None else rel_cutoff

    decomposition = to_spin_blocks(two_mode_coherent(alpha, beta, cutoff, tolerances=tolerances))
    weights = decomposition.block_weights
    contracted = [
        contract_block(n_total, block, rel_cutoff)
        for n_total, block in enumerate(decomposition.blocks)
    ]
    # Columns carry sqrt(p_N) times the normalized block, so B B^dagger = sum_N p_N |v_N><v_N|.
    members = np.stack([vector.amplitudes for vector in contracted], axis=1)
    embedding_loss = float(sum(vector.tail_mass for vector in contracted))
    logger.debug(
        f"Relative state alpha={alpha}, beta={beta}: cutoff={cutoff}, rel_cutoff={rel_cutoff}, "
        f"embedding loss={embedding_loss:.3e}"
    )
    if embedding_loss > tolerances.tail_tol:
        raise EmbeddingLossError(
            f"rel_cutoff {rel_cutoff} loses {embedding_loss:.3e} of the state, above tail_tol "
            f"{tolerances.tail_tol:g}"
        )
    state = DensityMatrix(members @ members.conj().T, "relative-fock", tolerances)
    return RelativePhaseComponents(state, weights, embedding_loss, cutoff, rel_cutoff)


def relative_phase_state(
    alpha: complex,
    beta: complex,
    cutoff: Optional[int] = None,
    rel_cutoff: Optional[int] = None,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> DensityMatrix:
    """
    The state of the relative-phase mode: the block-diagonal mixture sum_N p_N |block_N><block_N|
    contracted into a Fock space of dimension rel_cutoff + 1.

    Raises:
        InvalidStateError: beta is zero
        TruncationError: the two-mode cutoff is too small
        EmbeddingLossError: rel_cutoff drops more than ``tail_tol``
    """
    return relative_phase_components(
        alpha, beta, cutoff, rel_cutoff, tolerances=tolerances
    ).state


def factorization_fidelity(
    alpha: complex,
    beta: complex,
    cutoff: Optional[int] = None,
    rel_cutoff: Optional[int] = None,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> FactorizationReport:
    """
    How close the relative-phase state is to the pure coherent state (alpha / beta) |beta|.

    The approximation improves as |beta|^2 / |alpha|^2 grows; the report carries that ratio.
    """
    components = relative_phase_components(
        alpha, beta, cutoff, rel_cutoff, tolerances=tolerances
    )
    target_amplitude = complex(alpha) * np.conj(complex(beta)) / abs(beta)
    target = coherent_amplitudes(
        target_amplitude, components.rel_cutoff, tolerances=tolerances
    ).to_density("relative-fock", tolerances=tolerances)
    return FactorizationReport(
        alpha=complex(alpha),
        beta=complex(beta),
        fidelity_to_target=fidelity(components.state, target),
        rel_state_purity=purity(components.state),
        target_amplitude=target_amplitude,
        condition_ratio=abs(beta) ** 2 / abs(alpha) ** 2 if alpha != 0 else math.inf,
        cutoff=components.cutoff,
        rel_cutoff=components.rel_cutoff,
        embedding_loss=components.embedding_loss,
        mean_N=abs(alpha) ** 2 + abs(beta) ** 2,
        number_weights=components.number_weights,
    )
