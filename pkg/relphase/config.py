import math
from dataclasses import asdict, dataclass
from typing import Dict

DEFAULT_RESOLUTION = 256


@dataclass(frozen=True)
class Tolerances:
    """Numeric tolerances shared by every operation in the package.

    A single instance is threaded through calls as the ``tolerances`` keyword argument and echoed
    into every report, so that a result file is reproducible from its own metadata.
    """

    norm_tol: float = 1e-10
    herm_tol: float = 1e-10
    psd_tol: float = 1e-8
    trace_tol: float = 1e-10
    tail_tol: float = 1e-12
    max_dim: int = 1 << 22
    max_matrix_dim: int = 4096

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()


def default_cutoff(mean: float) -> int:
    """Photon cutoff keeping the Poisson tail of a coherent input far below ``tail_tol``.

    Args:
        mean: The mean photon number of the coherent input.

    Returns:
        ceil(mean + 8*sqrt(mean) + 10)
    """
    if mean < 0:
        raise ValueError(f"Mean photon number must be non-negative, got {mean}")
    return int(math.ceil(mean + 8 * math.sqrt(mean) + 10))


def default_resolution(dim: int) -> int:
    """Quadrature points for smooth priors on a Fock space of dimension ``dim``: at least 2 * dim."""
    return max(DEFAULT_RESOLUTION, 2 * dim)


def default_two_mode_cutoff(alpha: complex, beta: complex) -> int:
    """Per-mode cutoff for a two-mode coherent state, sized from the total mean photon number."""
    return default_cutoff(abs(alpha) ** 2 + abs(beta) ** 2)


def default_rel_cutoff(alpha: complex) -> int:
    """Cutoff of the relative-phase Fock space."""
    return int(math.ceil(abs(alpha) ** 2 + 8 * abs(alpha) + 10))
