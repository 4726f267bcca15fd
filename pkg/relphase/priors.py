"""Circular prior distributions P(phi) on [0, 2pi) and their quadrature grids."""
import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np

from relphase.config import DEFAULT_RESOLUTION
from relphase.exceptions import ConfigurationError, InvalidStateError

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
WEIGHT_SUM_TOL = 1e-12

PriorKind = Literal["flat", "delta", "von_mises", "grid"]


@dataclass(frozen=True)
class CircularPrior:
    """A probability distribution over an angle.

    Build instances through the ``flat``, ``delta``, ``von_mises`` and ``grid`` constructors;
    angles are reduced mod 2pi and grid weights are validated on construction.
    """

    kind: PriorKind
    phi0: float = 0.0
    mu: float = 0.0
    kappa: float = 0.0
    points: Tuple[float, ...] = ()
    weights: Tuple[float, ...] = ()
    label: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("flat", "delta", "von_mises", "grid"):
            raise InvalidStateError(f"Unknown prior kind {self.kind!r}")
        if self.kind == "von_mises" and self.kappa < 0:
            raise InvalidStateError(f"von Mises kappa must be >= 0, got {self.kappa}")
        if self.kind == "grid":
            _check_grid(self.points, self.weights)
        object.__setattr__(self, "phi0", self.phi0 % TWO_PI)
        object.__setattr__(self, "mu", self.mu % TWO_PI)

    @classmethod
    def flat(cls) -> "CircularPrior":
        return cls("flat", label="flat")

    @classmethod
    def delta(cls, phi0: float) -> "CircularPrior":
        return cls("delta", phi0=phi0, label=f"delta:{phi0:g}")

    @classmethod
    def von_mises(cls, mu: float, kappa: float) -> "CircularPrior":
        return cls("von_mises", mu=mu, kappa=kappa, label=f"vonmises:{mu:g},{kappa:g}")

    @classmethod
    def grid(
        cls, points: Iterable[float], weights: Iterable[float], label: str = "grid"
    ) -> "CircularPrior":
        points = tuple(float(p) % TWO_PI for p in points)
        weights = tuple(float(w) for w in weights)
        return cls("grid", points=points, weights=weights, label=label)

    @classmethod
    def random_grid(
        cls, rng: np.random.Generator, size: int = 16, label: str = "grid:random"
    ) -> "CircularPrior":
        """A grid prior with uniformly random points and Dirichlet(1) weights."""
        points = rng.uniform(0, TWO_PI, size)
        weights = rng.dirichlet(np.ones(size))
        weights = weights / weights.sum()
        return cls.grid(points, weights, label=label)

    @property
    def is_smooth(self) -> bool:
        """Whether quadrature resolution limits the accuracy of averages over this prior."""
        return self.kind == "von_mises"

    def __str__(self) -> str:
        return self.label or self.kind


def _check_grid(points: Sequence[float], weights: Sequence[float]):
    if len(points) != len(weights):
        raise InvalidStateError(
            f"Grid prior has {len(points)} points but {len(weights)} weights"
        )
    if not points:
        raise InvalidStateError("Grid prior must have at least one point")
    if any(w < 0 for w in weights):
        raise InvalidStateError("Grid prior weights must be non-negative")
    total = math.fsum(weights)
    if abs(total - 1) > WEIGHT_SUM_TOL:
        raise InvalidStateError(f"Grid prior weights sum to {total!r}, not 1")


def quadrature(
    prior: CircularPrior, resolution: int = DEFAULT_RESOLUTION
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Discretise a prior into quadrature points and weights summing to 1.

    Flat priors give a uniform grid with equal weights, delta priors a single point, von Mises
    priors the trapezoidal rule on a uniform grid (density renormalized on the grid, so no Bessel
    normalizer is needed) and grid priors pass through unchanged.

    Args:
        prior: The prior to discretise
        resolution: Number of uniform grid points for flat and von Mises priors

    Returns:
        (points, weights) as float arrays
    """
    if resolution < 1:
        raise ConfigurationError(f"Quadrature resolution must be >= 1, got {resolution}")

    if prior.kind == "delta":
        return np.array([prior.phi0]), np.array([1.0])
    if prior.kind == "grid":
        return np.array(prior.points), np.array(prior.weights)

    points = TWO_PI * np.arange(resolution) / resolution
    if prior.kind == "flat":
        return points, np.full(resolution, 1.0 / resolution)

    # exp(kappa*(cos - 1)) keeps large kappa from overflowing; the constant cancels below.
    density = np.exp(prior.kappa * (np.cos(points - prior.mu) - 1))
    weights = density / density.sum()
    logger.debug(f"von Mises quadrature kappa={prior.kappa} resolution={resolution}")
    return points, weights


def parse_prior(
    spec: str, *, grid_loader: Callable[[Path], List[Tuple[float, float]]] = None
) -> CircularPrior:
    """
    Parse a prior spec string: ``flat``, ``delta:<phi0>``, ``vonmises:<mu>,<kappa>`` or
    ``grid:<path>`` where path is a CSV of ``point,weight`` rows.

    Raises:
        ConfigurationError: the spec cannot be parsed or describes an invalid prior
    """
    grid_loader = grid_loader or read_grid_csv
    kind, _, argument = spec.strip().partition(":")
    try:
        if kind == "flat" and not argument:
            return CircularPrior.flat()
        if kind == "delta":
            return CircularPrior.delta(float(argument))
        if kind == "vonmises":
            mu, kappa = (float(value) for value in argument.split(","))
            return CircularPrior.von_mises(mu, kappa)
        if kind == "grid" and argument:
            rows = grid_loader(Path(argument))
            return CircularPrior.grid(
                [point for point, _ in rows], [weight for _, weight in rows], label=spec
            )
    except (ValueError, InvalidStateError) as ex:
        raise ConfigurationError(f"Invalid prior spec {spec!r}: {ex}") from ex
    raise ConfigurationError(
        f"Invalid prior spec {spec!r}; expected flat, delta:<phi0>, vonmises:<mu>,<kappa> or "
        "grid:<path>"
    )


def parse_prior_list(specs: str, **kwargs) -> List[CircularPrior]:
    """Parse a comma-separated list of prior specs. ``vonmises:<mu>,<kappa>`` keeps its comma."""
    return [parse_prior(spec, **kwargs) for spec in split_prior_specs(specs)]


def split_prior_specs(specs: str) -> List[str]:
    tokens = [token.strip() for token in specs.split(",") if token.strip()]
    merged = []
    for token in tokens:
        # A bare number continues the preceding vonmises:<mu>,<kappa> spec.
        if merged and merged[-1].startswith("vonmises:") and "," not in merged[-1]:
            merged[-1] = f"{merged[-1]},{token}"
        else:
            merged.append(token)
    return merged


def read_grid_csv(path: Path) -> List[Tuple[float, float]]:
    """Read ``point,weight`` rows; blank lines and ``#`` comments are skipped."""
    if not path.exists():
        raise ConfigurationError(f"Grid prior file {path} does not exist")
    rows = []
    with path.open(mode="r", newline="") as f:
        for record in csv.reader(f):
            if not record or record[0].lstrip().startswith("#"):
                continue
            if len(record) != 2:
                raise ConfigurationError(
                    f"Grid prior file {path} has a row with {len(record)} fields; expected 2"
                )
            rows.append((float(record[0]), float(record[1])))
    return rows
