"""Truncated single- and two-mode bosonic Hilbert-space algebra.

Index conventions are fixed project-wide:

* A single mode is indexed by photon number ``n = 0..cutoff``.
* A composite space ``A (x) B`` is indexed row-major in the first factor: joint index
  ``i * dim_B + j`` for ``|i>_A |j>_B`` (``numpy.kron`` ordering).
* Fidelity is the squared-overlap convention, ``F = |<psi|phi>|^2`` on pure states.
"""
import logging
from dataclasses import dataclass, field
from typing import Literal, Tuple, Union, overload

import numpy as np
from scipy import linalg
from scipy.special import gammaln, pdtrc

from relphase.config import DEFAULT_TOLERANCES, Tolerances
from relphase.exceptions import (
    DimensionMismatchError,
    InvalidStateError,
    TruncationError,
)

logger = logging.getLogger(__name__)

BasisLabel = Literal["fock", "lattice", "rel-center", "relative-fock"]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class FockVector:
    """Amplitudes of a single bosonic mode over photon numbers ``0..cutoff``.

    ``tail_mass`` is the probability mass the state would have above ``cutoff`` had it not been
    truncated. Amplitudes are never renormalized after truncation.
    """

    amplitudes: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        amplitudes = _frozen(self.amplitudes)
        if amplitudes.ndim != 1 or amplitudes.size == 0:
            raise InvalidStateError(
                f"FockVector amplitudes must be a non-empty 1-D sequence, got shape {amplitudes.shape}"
            )
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size - 1

    @property
    def norm(self) -> float:
        """Squared norm, sum over n of |amplitudes[n]|^2."""
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def is_normalized(self, tolerances: Tolerances = DEFAULT_TOLERANCES) -> bool:
        return abs(self.norm - 1) <= tolerances.norm_tol

    def to_density(
        self,
        basis_label: BasisLabel = "fock",
        *,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
    ) -> "DensityMatrix":
        return DensityMatrix.from_vector(
            self.amplitudes, basis_label, tolerances=tolerances
        )


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A Hermitian, positive-semidefinite, unit-trace matrix over a declared basis.

    Invariants are checked on construction, so any instance that exists is valid at the
    tolerances it was built with.

    Raises:
        InvalidStateError: hermiticity, positivity or trace check failed
        DimensionMismatchError: matrix is not square or exceeds ``max_matrix_dim``
    """

    entries: np.ndarray
    basis_label: BasisLabel = "fock"
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False)

    def __post_init__(self):
        entries = _frozen(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.size == 0:
            raise DimensionMismatchError(
                f"Density matrix must be square and non-empty, got shape {entries.shape}"
            )
        if entries.shape[0] > self.tolerances.max_matrix_dim:
            raise DimensionMismatchError(
                f"Density matrix dimension {entries.shape[0]} exceeds max_matrix_dim "
                f"{self.tolerances.max_matrix_dim}"
            )
        object.__setattr__(self, "entries", entries)
        self._check_invariants()

    @classmethod
    def from_vector(
        cls,
        amplitudes: np.ndarray,
        basis_label: BasisLabel = "fock",
        *,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
    ) -> "DensityMatrix":
        """The projector |psi><psi| for an amplitude vector."""
        vector = np.asarray(amplitudes, dtype=complex).ravel()
        return cls(np.outer(vector, vector.conj()), basis_label, tolerances)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def purity(self) -> float:
        return purity(self)

    def _check_invariants(self):
        tol = self.tolerances
        herm_residual = float(np.max(np.abs(self.entries - self.entries.conj().T)))
        if herm_residual > tol.herm_tol:
            raise InvalidStateError(
                f"Density matrix is not Hermitian: max |rho - rho^dagger| = {herm_residual:.3e}"
            )
        trace = np.trace(self.entries)
        if abs(trace - 1) > tol.trace_tol:
            raise InvalidStateError(
                f"Density matrix trace {trace.real:.15g} deviates from 1 by more than "
                f"{tol.trace_tol:g}"
            )
        min_eigenvalue = _min_eigenvalue_if_below(self.entries, -tol.psd_tol)
        if min_eigenvalue is not None:
            raise InvalidStateError(
                f"Density matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}"
            )


def _hermitian_part(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2


def _min_eigenvalue_if_below(matrix: np.ndarray, threshold: float):
    # Cholesky of (H - threshold*I) succeeds iff every eigenvalue of H exceeds threshold.
    hermitian = _hermitian_part(matrix)
    try:
        linalg.cholesky(
            hermitian - threshold * np.eye(hermitian.shape[0]), lower=True
        )
        return None
    except linalg.LinAlgError:
        min_eigenvalue = float(linalg.eigvalsh(hermitian)[0])
        return min_eigenvalue if min_eigenvalue < threshold else None


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Amplitude matrix ``c[n1][n2]`` of two bosonic modes."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = _frozen(self.amplitudes)
        if amplitudes.ndim != 2 or amplitudes.size == 0:
            raise InvalidStateError(
                f"TwoModeState amplitudes must be a non-empty matrix, got shape {amplitudes.shape}"
            )
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def cutoffs(self) -> Tuple[int, int]:
        return self.amplitudes.shape[0] - 1, self.amplitudes.shape[1] - 1

    @property
    def cutoff(self) -> int:
        """The per-mode cutoff; the smaller one if the modes were truncated differently."""
        return min(self.cutoffs)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    @property
    def boundary_mass(self) -> float:
        """Probability on the last row (n1 = cutoff) or last column (n2 = cutoff)."""
        weights = np.abs(self.amplitudes) ** 2
        return float(weights[-1, :].sum() + weights[:-1, -1].sum())

    def vector(self) -> np.ndarray:
        """Joint amplitudes, row-major in mode a."""
        return self.amplitudes.ravel()


def poisson_tail(mean: float, cutoff: int) -> float:
    """P(n > cutoff) for a Poisson distribution with the given mean."""
    if mean == 0:
        return 0.0
    return float(pdtrc(cutoff, mean))


def coherent_amplitudes(
    alpha: complex,
    cutoff: int,
    *,
    strict: bool = True,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> FockVector:
    """
    Fock amplitudes exp(-|alpha|^2/2) alpha^n / sqrt(n!) of a coherent state, n = 0..cutoff.

    The amplitudes are not renormalized. The reported tail mass is ``1 - sum |amp|^2``, evaluated
    through the Poisson survival function so that it stays accurate far below machine epsilon.

    Args:
        alpha: The coherent amplitude
        cutoff: Largest photon number kept
        strict: Raise when the tail mass exceeds ``tail_tol``
        tolerances: Tolerance set

    Returns:
        FockVector

    Raises:
        DimensionMismatchError: negative cutoff or cutoff beyond ``max_dim``
        TruncationError: strict and the tail mass exceeds ``tail_tol``
    """
    if cutoff < 0:
        raise DimensionMismatchError(f"cutoff must be non-negative, got {cutoff}")
    if cutoff + 1 > tolerances.max_dim:
        raise DimensionMismatchError(
            f"cutoff {cutoff} exceeds max_dim {tolerances.max_dim}"
        )
    alpha = complex(alpha)
    n = np.arange(cutoff + 1)
    if alpha == 0:
        amplitudes = np.zeros(cutoff + 1, dtype=complex)
        amplitudes[0] = 1.0
    else:
        modulus = abs(alpha)
        log_modulus = -(modulus**2) / 2 + n * np.log(modulus) - gammaln(n + 1) / 2
        amplitudes = np.exp(log_modulus) * np.exp(1j * n * np.angle(alpha))

    tail_mass = poisson_tail(abs(alpha) ** 2, cutoff)
    logger.debug(f"coherent state alpha={alpha} cutoff={cutoff} tail mass={tail_mass:.3e}")
    if strict and tail_mass > tolerances.tail_tol:
        raise TruncationError(
            f"Cutoff {cutoff} leaves tail mass {tail_mass:.3e} for alpha={alpha}, above tail_tol "
            f"{tolerances.tail_tol:g}"
        )
    return FockVector(amplitudes, tail_mass)


def number_projector(
    n: int,
    dim: int,
    *,
    basis_label: BasisLabel = "fock",
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> DensityMatrix:
    """The rank-1 projector |n><n| in a space of dimension ``dim``."""
    if not 0 <= n < dim:
        raise DimensionMismatchError(f"Basis index {n} out of range for dimension {dim}")
    entries = np.zeros((dim, dim), dtype=complex)
    entries[n, n] = 1.0
    return DensityMatrix(entries, basis_label, tolerances)


@overload
def tensor(
    a: FockVector, b: FockVector, *, tolerances: Tolerances = ...
) -> TwoModeState: ...


@overload
def tensor(
    a: DensityMatrix, b: DensityMatrix, *, tolerances: Tolerances = ...
) -> DensityMatrix: ...


def tensor(
    a: Union[FockVector, DensityMatrix],
    b: Union[FockVector, DensityMatrix],
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
):
    """
    Kronecker composition ``a (x) b``, row-major in the first factor.

    Two single-mode vectors compose into the joint amplitude matrix of a TwoModeState, whose
    ``vector()`` is exactly ``numpy.kron(a, b)``. Two density matrices compose into a density
    matrix of dimension ``dim_a * dim_b``.

    Raises:
        DimensionMismatchError: the joint dimension exceeds the configured guard
        TypeError: operands of different kinds
    """
    if isinstance(a, FockVector) and isinstance(b, FockVector):
        joint_dim = a.amplitudes.size * b.amplitudes.size
        if joint_dim > tolerances.max_dim:
            raise DimensionMismatchError(
                f"Joint dimension {joint_dim} exceeds max_dim {tolerances.max_dim}"
            )
        return TwoModeState(np.outer(a.amplitudes, b.amplitudes))

    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        joint_dim = a.dim * b.dim
        if joint_dim > tolerances.max_matrix_dim:
            raise DimensionMismatchError(
                f"Joint dimension {joint_dim} exceeds max_matrix_dim {tolerances.max_matrix_dim}"
            )
        return DensityMatrix(np.kron(a.entries, b.entries), a.basis_label, tolerances)

    raise TypeError(
        f"Cannot tensor {type(a).__name__} with {type(b).__name__}; operands must be the same kind"
    )


def partial_trace(
    rho: DensityMatrix,
    dims: Tuple[int, int],
    keep: Literal["A", "B"],
    *,
    basis_label: BasisLabel = None,
) -> DensityMatrix:
    """
    Reduce a bipartite state to one factor.

    Args:
        rho: State on A (x) B
        dims: (dim_A, dim_B)
        keep: Which factor survives, "A" or "B"
        basis_label: Label of the reduced state; defaults to rho's label

    Raises:
        DimensionMismatchError: rho's dimension is not dim_A * dim_B
    """
    dim_a, dim_b = dims
    if rho.dim != dim_a * dim_b:
        raise DimensionMismatchError(
            f"State dimension {rho.dim} does not match factor dimensions {dim_a} x {dim_b}"
        )
    blocks = rho.entries.reshape(dim_a, dim_b, dim_a, dim_b)
    if keep == "A":
        reduced = np.einsum("ijkj->ik", blocks)
    elif keep == "B":
        reduced = np.einsum("ijil->jl", blocks)
    else:
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    return DensityMatrix(reduced, basis_label or rho.basis_label, rho.tolerances)


def _psd_eigh(rho: DensityMatrix) -> Tuple[np.ndarray, np.ndarray]:
    eigenvalues, eigenvectors = linalg.eigh(_hermitian_part(rho.entries))
    if eigenvalues[0] < -rho.tolerances.psd_tol:
        raise InvalidStateError(
            f"State is not positive semidefinite: min eigenvalue {eigenvalues[0]:.3e}"
        )
    return np.clip(eigenvalues, 0, None), eigenvectors


def _pure_vector(rho: DensityMatrix):
    eigenvalues, eigenvectors = _psd_eigh(rho)
    if eigenvalues[-1] >= 1 - rho.tolerances.trace_tol:
        return eigenvectors[:, -1] * np.sqrt(eigenvalues[-1])
    return None


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """
    Uhlmann fidelity F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, in [0, 1].

    When either argument is pure this is evaluated as <psi|rho|psi>.

    Raises:
        DimensionMismatchError: the states have different dimensions
        InvalidStateError: an eigenvalue is more negative than ``psd_tol``
    """
    if rho.dim != sigma.dim:
        raise DimensionMismatchError(
            f"Cannot compare states of dimension {rho.dim} and {sigma.dim}"
        )
    psi = _pure_vector(sigma)
    if psi is not None:
        value = np.vdot(psi, rho.entries @ psi).real
    else:
        psi = _pure_vector(rho)
        if psi is not None:
            value = np.vdot(psi, sigma.entries @ psi).real
        else:
            eigenvalues, eigenvectors = _psd_eigh(rho)
            sqrt_rho = (eigenvectors * np.sqrt(eigenvalues)) @ eigenvectors.conj().T
            product = _hermitian_part(sqrt_rho @ sigma.entries @ sqrt_rho)
            product_eigenvalues = linalg.eigvalsh(product)
            if product_eigenvalues[0] < -rho.tolerances.psd_tol:
                raise InvalidStateError(
                    f"Fidelity kernel has eigenvalue {product_eigenvalues[0]:.3e}"
                )
            value = np.sum(np.sqrt(np.clip(product_eigenvalues, 0, None))) ** 2
    return float(np.clip(value, 0.0, 1.0))


def vector_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 for two amplitude vectors of equal length."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Cannot compare vectors of shape {a.shape} and {b.shape}")
    return float(abs(np.vdot(a, b)) ** 2)


def check_hermitian(
    obs: np.ndarray, *, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """Validate an observable and return it as a complex array.

    Raises:
        DimensionMismatchError: the observable is not square
        InvalidStateError: the observable is not Hermitian within ``herm_tol``
    """
    obs = np.asarray(obs, dtype=complex)
    if obs.ndim != 2 or obs.shape[0] != obs.shape[1]:
        raise DimensionMismatchError(f"Observable must be square, got shape {obs.shape}")
    residual = float(np.max(np.abs(obs - obs.conj().T))) if obs.size else 0.0
    if residual > tolerances.herm_tol:
        raise InvalidStateError(
            f"Observable is not Hermitian: max |O - O^dagger| = {residual:.3e}"
        )
    return obs


def expectation(obs: np.ndarray, rho: DensityMatrix) -> float:
    """
    Tr[obs rho] for a Hermitian observable.

    Raises:
        InvalidStateError: obs is not Hermitian, or the trace has an imaginary residue above 1e-10
        DimensionMismatchError: dimensions differ
    """
    obs = check_hermitian(obs, tolerances=rho.tolerances)
    if obs.shape[0] != rho.dim:
        raise DimensionMismatchError(
            f"Observable dimension {obs.shape[0]} does not match state dimension {rho.dim}"
        )
    value = np.einsum("ij,ji->", obs, rho.entries)
    if abs(value.imag) > 1e-10:
        raise InvalidStateError(f"Expectation has imaginary residue {value.imag:.3e}")
    return float(value.real)


def purity(rho: DensityMatrix) -> float:
    """Tr[rho^2]."""
    return float(np.sum(np.abs(rho.entries) ** 2))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the trace norm of rho - sigma."""
    if rho.dim != sigma.dim:
        raise DimensionMismatchError(
            f"Cannot compare states of dimension {rho.dim} and {sigma.dim}"
        )
    difference = _hermitian_part(rho.entries - sigma.entries)
    return float(np.sum(np.abs(linalg.eigvalsh(difference))) / 2)


def von_neumann_entropy(rho: DensityMatrix, base: float = 2) -> float:
    eigenvalues, _ = _psd_eigh(rho)
    eigenvalues = eigenvalues[eigenvalues > 0]
    return float(-np.sum(eigenvalues * np.log(eigenvalues)) / np.log(base))


def number_operator(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=complex))


def annihilation_operator(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)).astype(complex), k=1)


def quadrature_operator(dim: int) -> np.ndarray:
    """The truncated position quadrature (a + a^dagger) / sqrt(2)."""
    a = annihilation_operator(dim)
    return (a + a.conj().T) / np.sqrt(2)
