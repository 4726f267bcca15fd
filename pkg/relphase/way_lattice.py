"""
Particles on the ring Z_d with conserved total momentum.

Joint positions are indexed ``x1 * d + x2``. Relative/center labels are ``x_r = (x1 - x2) mod d``
and ``x_a = (x1 + x2) mod d`` indexed ``x_r * d + x_a``; ``d`` must be odd so that this relabeling
is a bijection. Position operators use the centered labels ``-(d-1)/2 .. (d-1)/2``.
"""
import logging
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from relphase.config import DEFAULT_TOLERANCES, Tolerances
from relphase.exceptions import (
    ConfigurationError,
    DimensionMismatchError,
    InvalidStateError,
)
from relphase.fock_core import (
    DensityMatrix,
    check_hermitian,
    expectation,
    partial_trace,
    purity,
)
from relphase.priors import read_grid_csv

logger = logging.getLogger(__name__)

COMMUTATION_TOL = 1e-10
FACTORIZATION_TOL = 1e-8
WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class LatticeSpace:
    """``particles`` particles (1 or 2) on ``d`` sites, d odd."""

    d: int
    particles: int = 2

    def __post_init__(self):
        if self.d < 1 or self.d % 2 == 0:
            raise ConfigurationError(f"Lattice size d must be a positive odd integer, got {self.d}")
        if self.particles not in (1, 2):
            raise ConfigurationError(f"Only 1 or 2 particles are supported, got {self.particles}")

    @property
    def dim(self) -> int:
        return self.d**self.particles

    @property
    def half_inverse(self) -> int:
        """The inverse of 2 mod d."""
        return (self.d + 1) // 2

    def centered_labels(self) -> np.ndarray:
        x = np.arange(self.d)
        return np.where(x <= (self.d - 1) // 2, x, x - self.d)

    def require_pair(self):
        if self.particles != 2:
            raise DimensionMismatchError("Relative/center coordinates need two particles")


def _normalized(amplitudes, expected_dim: int, tolerances: Tolerances) -> np.ndarray:
    amplitudes = np.array(amplitudes, dtype=complex, copy=True).ravel()
    if amplitudes.size != expected_dim:
        raise DimensionMismatchError(
            f"Expected {expected_dim} amplitudes, got {amplitudes.size}"
        )
    norm = float(np.vdot(amplitudes, amplitudes).real)
    if abs(norm - 1) > tolerances.norm_tol:
        raise InvalidStateError(f"Lattice state is not normalized: squared norm {norm!r}")
    amplitudes.flags.writeable = False
    return amplitudes


@dataclass(frozen=True, eq=False)
class LatticeState:
    """Amplitudes over joint positions |x1, x2>, index x1 * d + x2."""

    space: LatticeSpace
    amplitudes: np.ndarray
    tolerances: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self):
        object.__setattr__(
            self, "amplitudes", _normalized(self.amplitudes, self.space.dim, self.tolerances)
        )

    @classmethod
    def position_eigenstate(cls, space: LatticeSpace, *sites: int) -> "LatticeState":
        if len(sites) != space.particles:
            raise DimensionMismatchError(
                f"Need {space.particles} site labels, got {len(sites)}"
            )
        index = 0
        for site in sites:
            index = index * space.d + site % space.d
        amplitudes = np.zeros(space.dim, dtype=complex)
        amplitudes[index] = 1.0
        return cls(space, amplitudes)

    def to_density(self) -> DensityMatrix:
        return DensityMatrix.from_vector(self.amplitudes, "lattice", tolerances=self.tolerances)


@dataclass(frozen=True, eq=False)
class RelCenterState:
    """Amplitudes over |x_r, x_a>, index x_r * d + x_a."""

    space: LatticeSpace
    amplitudes: np.ndarray
    tolerances: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self):
        self.space.require_pair()
        object.__setattr__(
            self, "amplitudes", _normalized(self.amplitudes, self.space.dim, self.tolerances)
        )

    @classmethod
    def product(
        cls, space: LatticeSpace, psi_r: Sequence[complex], psi_a: Sequence[complex]
    ) -> "RelCenterState":
        """|psi_r> (x) |psi_a>; both factors are normalized first."""
        psi_r = np.asarray(psi_r, dtype=complex)
        psi_a = np.asarray(psi_a, dtype=complex)
        return cls(space, np.kron(psi_r / np.linalg.norm(psi_r), psi_a / np.linalg.norm(psi_a)))

    def to_density(self) -> DensityMatrix:
        return DensityMatrix.from_vector(
            self.amplitudes, "rel-center", tolerances=self.tolerances
        )


@dataclass(frozen=True)
class ShiftPrior:
    """A probability distribution over global displacements X in Z_d."""

    weights: Tuple[float, ...]
    label: str = "custom"

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1 or weights.size == 0:
            raise InvalidStateError("Shift prior needs a non-empty weight vector")
        if np.any(weights < 0):
            raise InvalidStateError("Shift prior weights must be non-negative")
        if abs(weights.sum() - 1) > WEIGHT_SUM_TOL:
            raise InvalidStateError(f"Shift prior weights sum to {weights.sum()!r}, not 1")
        object.__setattr__(self, "weights", tuple(weights.tolist()))

    @property
    def d(self) -> int:
        return len(self.weights)

    @classmethod
    def flat(cls, d: int) -> "ShiftPrior":
        return cls(tuple(np.full(d, 1.0 / d)), "flat")

    @classmethod
    def delta(cls, d: int, shift: int) -> "ShiftPrior":
        weights = np.zeros(d)
        weights[shift % d] = 1.0
        return cls(tuple(weights), f"delta:{shift}")

    @classmethod
    def von_mises(cls, d: int, mu: float, kappa: float) -> "ShiftPrior":
        if kappa < 0:
            raise InvalidStateError(f"von Mises kappa must be >= 0, got {kappa}")
        density = np.exp(kappa * (np.cos(2 * np.pi * (np.arange(d) - mu) / d) - 1))
        return cls(tuple(density / density.sum()), f"vonmises:{mu:g},{kappa:g}")

    @classmethod
    def random(cls, d: int, rng: np.random.Generator, label: str = "random") -> "ShiftPrior":
        weights = rng.dirichlet(np.ones(d))
        return cls(tuple(weights / weights.sum()), label)

    def __str__(self) -> str:
        return self.label


def parse_shift_prior(
    spec: str,
    d: int,
    *,
    grid_loader: Callable[[Path], List[Tuple[float, float]]] = None,
) -> ShiftPrior:
    """
    Parse ``flat``, ``delta:<X>``, ``vonmises:<mu>,<kappa>`` or ``grid:<path>`` (CSV of
    ``site,weight`` rows) into a ShiftPrior on Z_d.

    Raises:
        ConfigurationError: the spec cannot be parsed or describes an invalid prior
    """
    grid_loader = grid_loader or read_grid_csv
    kind, _, argument = spec.strip().partition(":")
    try:
        if kind == "flat" and not argument:
            return ShiftPrior.flat(d)
        if kind == "delta":
            return ShiftPrior.delta(d, int(argument))
        if kind == "vonmises":
            mu, kappa = (float(value) for value in argument.split(","))
            return ShiftPrior.von_mises(d, mu, kappa)
        if kind == "grid" and argument:
            weights = np.zeros(d)
            for site, weight in grid_loader(Path(argument)):
                if site != int(site):
                    raise ValueError(f"site {site} is not an integer")
                weights[int(site) % d] += weight
            return ShiftPrior(tuple(weights), spec)
    except (ValueError, InvalidStateError) as ex:
        raise ConfigurationError(f"Invalid shift prior spec {spec!r}: {ex}") from ex
    raise ConfigurationError(
        f"Invalid shift prior spec {spec!r}; expected flat, delta:<X>, vonmises:<mu>,<kappa> or "
        "grid:<path>"
    )


def shift_matrix(d: int, shift: int) -> np.ndarray:
    """Single-site translation S^X with S|x> = |x + 1 mod d>."""
    return np.roll(np.eye(d, dtype=complex), shift % d, axis=0)


def displacement_matrix(space: LatticeSpace, shift: int) -> np.ndarray:
    """D(X) = exp(-i X Pi): every particle moves by X sites."""
    matrix = shift_matrix(space.d, shift)
    for _ in range(space.particles - 1):
        matrix = np.kron(matrix, shift_matrix(space.d, shift))
    return matrix


def displacement(
    shift: int,
    on: Union[LatticeState, DensityMatrix],
    *,
    space: Optional[LatticeSpace] = None,
) -> Union[LatticeState, DensityMatrix]:
    """
    Translate every particle by ``shift`` sites (taken mod d).

    Args:
        shift: The global offset X
        on: A LatticeState, or a DensityMatrix over joint positions
        space: Required when ``on`` is a DensityMatrix
    """
    if isinstance(on, LatticeState):
        grid = on.amplitudes.reshape((on.space.d,) * on.space.particles)
        shifted = np.roll(grid, shift, axis=tuple(range(on.space.particles)))
        return LatticeState(on.space, shifted.ravel(), on.tolerances)

    if space is None:
        raise DimensionMismatchError("Displacing a density matrix needs its LatticeSpace")
    if on.dim != space.dim:
        raise DimensionMismatchError(
            f"State dimension {on.dim} does not match lattice dimension {space.dim}"
        )
    matrix = displacement_matrix(space, shift)
    return DensityMatrix(matrix @ on.entries @ matrix.conj().T, on.basis_label, on.tolerances)


def _fourier_matrix(d: int) -> np.ndarray:
    x = np.arange(d)
    return np.exp(2j * np.pi * np.outer(x, x) / d) / np.sqrt(d)


def total_momentum(space: LatticeSpace) -> np.ndarray:
    """
    The generator Pi of global translations, with displacement_matrix(X) = exp(-i X Pi).

    Pi is diagonal in the joint Fourier basis with eigenvalue 2 pi k_tot / d, where k_tot is the
    sum of the single-particle momenta mod d.
    """
    fourier = _fourier_matrix(space.d)
    k = np.arange(space.d)
    joint_fourier = fourier
    k_total = k
    for _ in range(space.particles - 1):
        joint_fourier = np.kron(joint_fourier, fourier)
        k_total = np.add.outer(k_total, k).ravel() % space.d
    eigenvalues = 2 * np.pi * k_total / space.d
    pi = (joint_fourier * eigenvalues) @ joint_fourier.conj().T
    return (pi + pi.conj().T) / 2


def displacement_average(state: LatticeState, prior: ShiftPrior) -> DensityMatrix:
    """
    rho = sum_X P(X) D(X)|psi><psi|D(X)^dagger.

    Raises:
        DimensionMismatchError: the prior is not defined on the state's Z_d
    """
    if prior.d != state.space.d:
        raise DimensionMismatchError(
            f"Prior over Z_{prior.d} does not match lattice Z_{state.space.d}"
        )
    columns = [
        np.sqrt(weight) * displacement(shift, state).amplitudes
        for shift, weight in enumerate(prior.weights)
        if weight > 0
    ]
    members = np.stack(columns, axis=1)
    return DensityMatrix(members @ members.conj().T, "lattice", state.tolerances)


def rel_center_source(space: LatticeSpace) -> np.ndarray:
    """For each rel/center index ``x_r * d + x_a``, the joint index ``x1 * d + x2`` it relabels."""
    space.require_pair()
    d = space.d
    x_r, x_a = np.divmod(np.arange(d * d), d)
    x1 = ((x_r + x_a) * space.half_inverse) % d
    x2 = ((x_a - x_r) * space.half_inverse) % d
    return x1 * d + x2


def to_rel_center(state: LatticeState) -> RelCenterState:
    return RelCenterState(
        state.space, state.amplitudes[rel_center_source(state.space)], state.tolerances
    )


def from_rel_center(state: RelCenterState) -> LatticeState:
    amplitudes = np.empty(state.space.dim, dtype=complex)
    amplitudes[rel_center_source(state.space)] = state.amplitudes
    return LatticeState(state.space, amplitudes, state.tolerances)


def density_to_rel_center(rho: DensityMatrix, space: LatticeSpace) -> DensityMatrix:
    source = rel_center_source(space)
    return DensityMatrix(rho.entries[np.ix_(source, source)], "rel-center", rho.tolerances)


def density_from_rel_center(rho: DensityMatrix, space: LatticeSpace) -> DensityMatrix:
    source = rel_center_source(space)
    entries = np.empty_like(rho.entries)
    entries[np.ix_(source, source)] = rho.entries
    return DensityMatrix(entries, "lattice", rho.tolerances)


class FactorizationCheck(NamedTuple):
    is_factorized: bool
    rel_factor: DensityMatrix
    center_factor: DensityMatrix
    residual: float
    rel_purity: float


def factorization_check(rho: DensityMatrix, space: LatticeSpace) -> FactorizationCheck:
    """
    Compare a rel/center state with the product of its reduced factors.

    The residual is max |rho - rho_r (x) rho_a|; a residual is data, not an error.
    """
    space.require_pair()
    if rho.basis_label != "rel-center":
        raise InvalidStateError(
            f"Factorization check needs a rel-center basis state, got {rho.basis_label!r}"
        )
    dims = (space.d, space.d)
    rel_factor = partial_trace(rho, dims, "A")
    center_factor = partial_trace(rho, dims, "B")
    residual = float(
        np.max(np.abs(rho.entries - np.kron(rel_factor.entries, center_factor.entries)))
    )
    check = FactorizationCheck(
        is_factorized=residual <= FACTORIZATION_TOL,
        rel_factor=rel_factor,
        center_factor=center_factor,
        residual=residual,
        rel_purity=purity(rel_factor),
    )
    logger.debug(f"Factorization residual {residual:.3e}, rel purity {check.rel_purity:.12f}")
    return check


def sum_gate_rel_center(space: LatticeSpace) -> np.ndarray:
    """|x_r, x_a> -> |x_r, x_a + x_r> in rel/center labels."""
    space.require_pair()
    d = space.d
    x_r, x_a = np.divmod(np.arange(d * d), d)
    gate = np.zeros((d * d, d * d), dtype=complex)
    gate[x_r * d + (x_a + x_r) % d, x_r * d + x_a] = 1.0
    return gate


def sum_gate(space: LatticeSpace) -> np.ndarray:
    """The SUM gate as a unitary on joint positions |x1, x2>."""
    relabel = np.zeros((space.dim, space.dim), dtype=complex)
    relabel[np.arange(space.dim), rel_center_source(space)] = 1.0
    return relabel.T @ sum_gate_rel_center(space) @ relabel


def apply_sum_gate(state: RelCenterState) -> RelCenterState:
    return RelCenterState(
        state.space, sum_gate_rel_center(state.space) @ state.amplitudes, state.tolerances
    )


def entanglement_entropy(state: RelCenterState) -> float:
    """Entanglement between the relative and center factors, in bits."""
    d = state.space.d
    singular_values = np.linalg.svd(state.amplitudes.reshape(d, d), compute_uv=False)
    probabilities = singular_values**2
    probabilities = probabilities[probabilities > 1e-300]
    return float(-np.sum(probabilities * np.log2(probabilities)))


def position_operator(space: LatticeSpace, particle: int = 0) -> np.ndarray:
    """Centered position of one particle, as a diagonal operator on joint positions."""
    if not 0 <= particle < space.particles:
        raise DimensionMismatchError(f"No particle {particle} in a {space.particles}-particle space")
    labels = space.centered_labels()
    diagonal = np.ones(1)
    for index in range(space.particles):
        diagonal = np.kron(diagonal, labels if index == particle else np.ones(space.d))
    return np.diag(diagonal.astype(complex))


def relative_position_operator(space: LatticeSpace) -> np.ndarray:
    """Centered label of (x1 - x2) mod d, on joint positions."""
    space.require_pair()
    x1, x2 = np.divmod(np.arange(space.dim), space.d)
    return np.diag(space.centered_labels()[(x1 - x2) % space.d].astype(complex))


def commuting_polynomial(
    x_r: np.ndarray, pi: np.ndarray, coefficients: Sequence[float]
) -> np.ndarray:
    """
    c0 + c1 x_r + c2 Pi + c3 x_r^2 + c4 Pi^2 + c5 x_r Pi, for commuting Hermitian x_r and Pi.
    """
    identity = np.eye(x_r.shape[0], dtype=complex)
    x_r_pi = (x_r @ pi + pi @ x_r) / 2
    terms = (identity, x_r, pi, x_r @ x_r, pi @ pi, x_r_pi)
    if len(coefficients) != len(terms):
        raise ValueError(f"Expected {len(terms)} coefficients, got {len(coefficients)}")
    return sum(c * term for c, term in zip(coefficients, terms))


def commutator_norm(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a @ b - b @ a)))


class InvarianceResult(NamedTuple):
    commutator_norm: float
    deviation: float
    expectations: Tuple[float, ...]


def expectation_invariance(
    state: LatticeState,
    obs: np.ndarray,
    priors: Sequence[ShiftPrior],
    *,
    momentum: Optional[np.ndarray] = None,
) -> InvarianceResult:
    """
    How much Tr[obs displacement_average(state, P)] moves across the priors.

    Returns both the commutator norm of obs with Pi and the maximum pairwise deviation; the
    deviation is only guaranteed to vanish when the commutator does.
    """
    obs = check_hermitian(obs, tolerances=state.tolerances)
    momentum = total_momentum(state.space) if momentum is None else momentum
    values = tuple(expectation(obs, displacement_average(state, prior)) for prior in priors)
    deviation = max((abs(a - b) for a, b in combinations(values, 2)), default=0.0)
    return InvarianceResult(commutator_norm(obs, momentum), deviation, values)
