"""
The acceptance suite run by ``relphase selftest``.

Every check returns plain numbers; randomized checks draw from a generator seeded by
(seed, criterion) so reruns with one seed reproduce the report byte for byte. Timings go to the
DEBUG log only.
"""
import cmath
import logging
import math
import time
from typing import Callable, List, NamedTuple

import numpy as np
from scipy.special import gammaln, i0

from relphase.config import DEFAULT_TOLERANCES, Tolerances
from relphase.fock_core import DensityMatrix, coherent_amplitudes, expectation, fidelity
from relphase.phase_channel import max_pairwise_deviation, phase_average
from relphase.priors import CircularPrior
from relphase.relative_phase import (
    contraction_fidelity,
    factorization_fidelity,
    verify_block_identity,
)
from relphase.report_writer import format_value
from relphase.way_lattice import (
    LatticeSpace,
    LatticeState,
    RelCenterState,
    ShiftPrior,
    apply_sum_gate,
    commutator_norm,
    density_to_rel_center,
    displacement_average,
    entanglement_entropy,
    factorization_check,
    from_rel_center,
    sum_gate,
    total_momentum,
)

CONTRACTION_SIZES = (25, 100, 400, 1600)
FACTORIZATION_BETAS = (2.0, 4.0, 8.0, 16.0)
GAUGE_ANGLES = (0.3, 2.9)


class Check(NamedTuple):
    criterion: str
    description: str
    value: float
    threshold: float
    passed: bool


def _below(criterion: str, description: str, value: float, threshold: float) -> Check:
    return Check(criterion, description, float(value), threshold, bool(value < threshold))


def _at_least(criterion: str, description: str, value: float, threshold: float) -> Check:
    return Check(criterion, description, float(value), threshold, bool(value >= threshold))


def _random_vector(rng: np.random.Generator, size: int) -> np.ndarray:
    vector = rng.normal(size=size) + 1j * rng.normal(size=size)
    return vector / np.linalg.norm(vector)


class AcceptanceSuite:
    """Runs the numbered acceptance checks and collects their results."""

    def __init__(
        self,
        logger: logging.Logger,
        *,
        seed: int = 0,
        d: int = 31,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
    ):
        """
        Args:
            logger: The experiment's logger
            seed: Root seed for the randomized checks
            d: Lattice size for the lattice checks
            tolerances: Tolerances passed to every numeric operation
        """
        self._logger = logger
        self._seed = seed
        self._space = LatticeSpace(d)
        self._tolerances = tolerances

    @property
    def criteria(self) -> List[Callable[[], List[Check]]]:
        return [
            self.check_flat_average_weights,
            self.check_prior_independence,
            self.check_position_eigenstate_average,
            self.check_relative_factor_preserved,
            self.check_sum_gate,
            self.check_block_identity,
            self.check_contraction,
            self.check_factorization_quality,
            self.check_gauge_invariance,
            self.check_determinism,
        ]

    def run(self) -> List[Check]:
        checks = []
        for criterion in self.criteria:
            started = time.perf_counter()
            results = criterion()
            self._logger.debug(f"{criterion.__name__} took {time.perf_counter() - started:.2f}s")
            for check in results:
                if not check.passed:
                    self._logger.warning(
                        f"Acceptance check {check.criterion} failed: {check.description} "
                        f"value={check.value!r} threshold={check.threshold!r}"
                    )
            checks.extend(results)
        return checks

    def _rng(self, criterion: int) -> np.random.Generator:
        return np.random.default_rng([self._seed, criterion])

    def check_flat_average_weights(self) -> List[Check]:
        cutoff = 32
        state = coherent_amplitudes(1.0, cutoff, tolerances=self._tolerances).to_density(
            tolerances=self._tolerances
        )
        report = phase_average(state, CircularPrior.flat())
        n = np.arange(cutoff + 1)
        expected = np.exp(-1.0 - gammaln(n + 1))
        deviation = np.max(np.abs(np.diag(report.output.entries).real - expected))
        return [
            _below(
                "1a",
                "flat phase average of |alpha|=1 coherent state has Poisson weights e^-1/n!",
                deviation,
                1e-10,
            ),
            _below(
                "1b",
                "flat phase average of |alpha|=1 coherent state is diagonal",
                report.offdiag_norm,
                1e-12,
            ),
        ]

    def check_prior_independence(self) -> List[Check]:
        rng = self._rng(2)
        state = coherent_amplitudes(
            cmath.rect(1.3, 0.4), 24, tolerances=self._tolerances
        ).to_density(tolerances=self._tolerances)
        priors = [
            CircularPrior.flat(),
            CircularPrior.delta(0.3),
            CircularPrior.delta(4.0),
            CircularPrior.von_mises(1.0, 5.0),
            CircularPrior.random_grid(rng),
        ]
        outputs = [phase_average(state, prior).output for prior in priors]
        deviation = 0.0
        for _ in range(100):
            obs = np.diag(rng.normal(size=state.dim)).astype(complex)
            values = [expectation(obs, output) for output in outputs]
            deviation = max(deviation, max_pairwise_deviation(values))
        return [
            _below(
                "2",
                "100 random number-diagonal observables agree across five phase priors",
                deviation,
                1e-8,
            )
        ]

    def check_position_eigenstate_average(self) -> List[Check]:
        single = LatticeSpace(self._space.d, particles=1)
        averaged = displacement_average(
            LatticeState.position_eigenstate(single, 0), ShiftPrior.flat(single.d)
        )
        deviation = np.max(np.abs(averaged.entries - np.eye(single.d) / single.d))
        return [
            _below(
                "3",
                f"flat displacement average of a position eigenstate is I/d for d={single.d}",
                deviation,
                1e-12,
            )
        ]

    def check_relative_factor_preserved(self) -> List[Check]:
        rng = self._rng(4)
        space = self._space
        priors = [ShiftPrior.random(space.d, rng, label=f"random:{i}") for i in range(5)]
        purity_loss = 0.0
        fidelity_loss = 0.0
        for _ in range(20):
            psi_r = _random_vector(rng, space.d)
            psi_a = _random_vector(rng, space.d)
            state = from_rel_center(RelCenterState.product(space, psi_r, psi_a))
            target = DensityMatrix.from_vector(psi_r, "rel-center", tolerances=self._tolerances)
            for prior in priors:
                check = factorization_check(
                    density_to_rel_center(displacement_average(state, prior), space), space
                )
                purity_loss = max(purity_loss, 1 - check.rel_purity)
                fidelity_loss = max(fidelity_loss, 1 - fidelity(check.rel_factor, target))
        return [
            _below(
                "4a",
                "relative factor stays pure after displacement averaging (1 - purity)",
                purity_loss,
                1e-8,
            ),
            _below(
                "4b",
                "relative factor equals the input relative state (1 - fidelity)",
                fidelity_loss,
                1e-8,
            ),
        ]

    def check_sum_gate(self) -> List[Check]:
        space = self._space
        commutator = commutator_norm(sum_gate(space), total_momentum(space))
        psi_r = np.zeros(space.d)
        psi_r[[0, 1 % space.d]] = 1.0
        psi_a = np.zeros(space.d)
        psi_a[0] = 1.0
        entropy = entanglement_entropy(apply_sum_gate(RelCenterState.product(space, psi_r, psi_a)))
        return [
            _below("5a", "SUM gate commutes with total momentum", commutator, 1e-10),
            _below(
                "5b",
                "SUM gate gives one bit of relative/center entanglement (|entropy - 1|)",
                abs(entropy - 1.0),
                1e-8,
            ),
        ]

    def check_block_identity(self) -> List[Check]:
        rng = self._rng(6)
        deviation = 0.0
        for _ in range(20):
            alpha = cmath.rect(rng.uniform(0.0, 3.0), rng.uniform(0, 2 * math.pi))
            beta = cmath.rect(rng.uniform(0.5, 3.0), rng.uniform(0, 2 * math.pi))
            deviation = max(
                deviation, verify_block_identity(alpha, beta, tolerances=self._tolerances)
            )
        return [
            _below(
                "6",
                "fixed-N blocks of |alpha, beta> are spin coherent states with xi = alpha/beta",
                deviation,
                1e-10,
            )
        ]

    def check_contraction(self) -> List[Check]:
        values = [contraction_fidelity(n_total, 1.0) for n_total in CONTRACTION_SIZES]
        step = min(b - a for a, b in zip(values, values[1:]))
        return [
            _at_least(
                "7a",
                "contracted spin block fidelity is nondecreasing over N = 25, 100, 400, 1600",
                step,
                0.0,
            ),
            _below(
                "7b", "contracted spin block infidelity at N = 1600", 1 - values[-1], 1e-3
            ),
        ]

    def check_factorization_quality(self) -> List[Check]:
        reports = [
            factorization_fidelity(1.0, beta, tolerances=self._tolerances)
            for beta in FACTORIZATION_BETAS
        ]
        fidelities = [report.fidelity_to_target for report in reports]
        step = min(b - a for a, b in zip(fidelities, fidelities[1:]))
        dephased_purity = math.exp(-2.0) * i0(2.0)
        purity_margin = min(
            report.rel_state_purity - dephased_purity
            for report, beta in zip(reports, FACTORIZATION_BETAS)
            if beta >= 4
        )
        return [
            Check(
                "8a",
                "relative-phase fidelity strictly increases over beta = 2, 4, 8, 16 (min step)",
                float(step),
                0.0,
                bool(step > 0),
            ),
            _at_least("8b", "relative-phase fidelity at alpha=1, beta=16", fidelities[-1], 0.99),
            _at_least(
                "8c",
                "relative-phase purity above the dephased single-mode purity for beta >= 4",
                purity_margin,
                0.5,
            ),
        ]

    def check_gauge_invariance(self) -> List[Check]:
        alpha, beta = 1.0, 4.0
        base = factorization_fidelity(alpha, beta, tolerances=self._tolerances)
        difference = 0.0
        for chi in GAUGE_ANGLES:
            rotation = cmath.exp(1j * chi)
            rotated = factorization_fidelity(
                alpha * rotation, beta * rotation, tolerances=self._tolerances
            )
            difference = max(
                difference,
                abs(rotated.fidelity_to_target - base.fidelity_to_target),
                abs(rotated.rel_state_purity - base.rel_state_purity),
            )
        return [
            _below(
                "9",
                "fidelity and purity unchanged by a common phase on alpha and beta",
                difference,
                1e-10,
            )
        ]

    def check_determinism(self) -> List[Check]:
        def fingerprint() -> List[str]:
            checks = self.check_prior_independence() + self.check_block_identity()
            return [format_value(check.value) for check in checks]

        first, second = fingerprint(), fingerprint()
        mismatches = sum(a != b for a, b in zip(first, second))
        return [
            Check(
                "10",
                "seeded randomized checks reproduce digit for digit (mismatch count)",
                float(mismatches),
                0.0,
                mismatches == 0,
            )
        ]
