import logging
from abc import ABC, abstractmethod
from concurrent.futures import Executor, ThreadPoolExecutor, as_completed
from itertools import combinations
from typing import Any, Callable, Dict, List, Sequence, Tuple, Type, TypeVar

import numpy as np

from relphase.acceptance import AcceptanceSuite, Check
from relphase.config import DEFAULT_TOLERANCES, Tolerances, default_cutoff, default_resolution
from relphase.fock_core import (
    coherent_amplitudes,
    number_operator,
    quadrature_operator,
)
from relphase.phase_channel import (
    ensemble_equivalence,
    is_phase_insensitive,
    phase_average,
    prior_independence_check,
)
from relphase.priors import parse_prior, parse_prior_list, split_prior_specs
from relphase.relative_phase import (
    FactorizationReport,
    factorization_fidelity,
    spin_coherent_params,
)
from relphase.report_writer import Report
from relphase.run_config import RunConfig, parse_complex, parse_range
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
    expectation_invariance,
    factorization_check,
    from_rel_center,
    parse_shift_prior,
    position_operator,
    relative_position_operator,
    sum_gate,
    total_momentum,
)

T = TypeVar("T")
R = TypeVar("R")

SECTION_COLUMNS = ("section", "label", "prior", "value", "residual")
RELPHASE_COLUMNS = (
    "alpha_modulus",
    "alpha_phase",
    "beta_modulus",
    "beta_phase",
    "phi_r",
    "condition_ratio",
    "fidelity",
    "purity",
    "target_re",
    "target_im",
    "embedding_loss",
    "mean_N",
    "cutoff",
    "rel_cutoff",
)


class Experiment(ABC):
    """A base class for the CLI's experiments to define the interface they all must meet."""

    NAME: str
    COLUMNS: Tuple[str, ...] = SECTION_COLUMNS

    def __init__(self, logger: logging.Logger, *, tolerances: Tolerances = DEFAULT_TOLERANCES):
        """
        Args:
            logger: The CLI's logger
            tolerances: Tolerances passed to every numeric operation
        """
        self._logger = logger
        self._tolerances = tolerances

    def run(self, config: RunConfig) -> Report:
        self._logger.info(f"Running {self.NAME}")
        meta = {
            **config.as_meta(),
            **{f"tolerance.{key}": value for key, value in self._tolerances.as_dict().items()},
        }
        summary, rows = self._build(config, meta)
        breaches = self._breaches(summary, rows)
        for breach in breaches:
            self._logger.warning(f"{self.NAME}: tolerance breach in {breach}")
        return Report(meta, summary, self.COLUMNS, rows, breaches)

    @abstractmethod
    def _build(
        self, config: RunConfig, meta: Dict[str, Any]
    ) -> Tuple[Dict[str, Any], List[Tuple[Any, ...]]]:
        """Compute the summary and rows, adding resolved defaults to ``meta`` as ``resolved.*``."""

    def _breaches(self, summary: Dict[str, Any], rows: List[Tuple[Any, ...]]) -> Tuple[str, ...]:
        return ()


class PhaseAverageExperiment(Experiment):
    """Phase-average a coherent state and compare number-diagonal observables across priors."""

    NAME = "phase-average"
    OBSERVABLES: Dict[str, Callable[[int], np.ndarray]] = {
        "number": number_operator,
        "number_squared": lambda dim: number_operator(dim) @ number_operator(dim),
        "identity": lambda dim: np.eye(dim, dtype=complex),
        "quadrature": quadrature_operator,
    }

    def _build(self, config, meta):
        alpha = parse_complex(config.alpha)
        cutoff = default_cutoff(abs(alpha) ** 2) if config.cutoff is None else config.cutoff
        meta["resolved.alpha"] = alpha
        meta["resolved.cutoff"] = cutoff

        vector = coherent_amplitudes(alpha, cutoff, tolerances=self._tolerances)
        state = vector.to_density(tolerances=self._tolerances)
        resolution = (
            default_resolution(state.dim) if config.resolution is None else config.resolution
        )
        meta["resolved.resolution"] = resolution
        prior = parse_prior(config.prior)
        report = phase_average(
            state, prior, resolution, input_descriptor=f"coherent alpha={config.alpha}"
        )
        label = str(prior)
        rows = [
            ("weight", n, label, float(weight), None)
            for n, weight in enumerate(np.diag(report.output.entries).real)
        ]
        rows.append(("summary", "offdiag_norm", label, report.offdiag_norm, None))
        rows.append(("summary", "purity", label, report.purity, None))

        compare = [prior] + [
            other for other in parse_prior_list(config.compare_priors) if str(other) != label
        ]
        compare_label = ";".join(map(str, compare))
        for name, build in self.OBSERVABLES.items():
            obs = build(state.dim)
            _, residual = is_phase_insensitive(obs, tolerances=self._tolerances)
            deviation = prior_independence_check(state, obs, compare, resolution)
            rows.append(("deviation", name, compare_label, deviation, residual))

        distance = ensemble_equivalence(
            alpha, cutoff, resolution, tolerances=self._tolerances
        )
        rows.append(("ensemble", "trace_distance", "flat", distance, None))
        summary = {
            "offdiag_norm": report.offdiag_norm,
            "purity": report.purity,
            "tail_mass": vector.tail_mass,
            "ensemble_trace_distance": distance,
        }
        return summary, rows


class WayDemoExperiment(Experiment):
    """Displacement averaging, relative/center factorization and the SUM gate on Z_d x Z_d."""

    NAME = "way-demo"
    DEMO_LABELS = (0, 2)

    def _build(self, config, meta):
        space = LatticeSpace(config.d)
        priors = [parse_shift_prior(spec, space.d) for spec in split_prior_specs(config.priors)]
        momentum = total_momentum(space)
        state = self._demo_state(space)
        rows = []

        observables = {
            "x_r": relative_position_operator(space),
            "x_1": position_operator(space, 0),
            "identity": np.eye(space.dim, dtype=complex),
        }
        deviations = {}
        for name, obs in observables.items():
            result = expectation_invariance(state, obs, priors, momentum=momentum)
            deviations[name] = result.deviation
            for prior, value in zip(priors, result.expectations):
                rows.append(("invariance", name, str(prior), value, result.commutator_norm))
            for (prior_a, value_a), (prior_b, value_b) in combinations(
                zip(priors, result.expectations), 2
            ):
                rows.append(
                    ("pairwise", name, f"{prior_a}|{prior_b}", abs(value_a - value_b), None)
                )
            rows.append(
                (
                    "deviation",
                    name,
                    ";".join(map(str, priors)),
                    result.deviation,
                    result.commutator_norm,
                )
            )

        single = LatticeSpace(space.d, particles=1)
        averaged = displacement_average(
            LatticeState.position_eigenstate(single, 0), ShiftPrior.flat(space.d)
        )
        eigenstate_deviation = float(np.max(np.abs(averaged.entries - np.eye(space.d) / space.d)))
        rows.append(("eigenstate", "identity_over_d", "flat", eigenstate_deviation, None))

        factorization = {}
        for prior in priors:
            check = factorization_check(
                density_to_rel_center(displacement_average(state, prior), space), space
            )
            factorization[str(prior)] = check.residual
            rows.append(("factorization", "product", str(prior), check.residual, check.rel_purity))
        entangled = self._entangled_state(space)
        check = factorization_check(
            density_to_rel_center(displacement_average(entangled, ShiftPrior.flat(space.d)), space),
            space,
        )
        rows.append(("factorization", "entangled", "flat", check.residual, check.rel_purity))

        gate_commutator = commutator_norm(sum_gate(space), momentum)
        entropy = entanglement_entropy(apply_sum_gate(self._superposed_state(space)))
        rows.append(("sum_gate", "commutator_norm", "", gate_commutator, None))
        rows.append(("sum_gate", "entanglement_entropy_bits", "", entropy, None))

        summary = {
            "x_r_deviation": deviations["x_r"],
            "x_1_deviation": deviations["x_1"],
            "eigenstate_deviation": eigenstate_deviation,
            "max_product_residual": max(factorization.values(), default=0.0),
            "entangled_residual": check.residual,
            "sum_gate_commutator_norm": gate_commutator,
            "sum_gate_entropy_bits": entropy,
        }
        return summary, rows

    def _label_superposition(self, space: LatticeSpace) -> np.ndarray:
        amplitudes = np.zeros(space.d, dtype=complex)
        amplitudes[[label % space.d for label in self.DEMO_LABELS]] = 1.0
        return amplitudes

    def _demo_state(self, space: LatticeSpace) -> LatticeState:
        """A rel/center product whose particle positions stay away from the centered-label cut."""
        superposition = self._label_superposition(space)
        return from_rel_center(RelCenterState.product(space, superposition, superposition))

    def _entangled_state(self, space: LatticeSpace) -> LatticeState:
        amplitudes = np.zeros(space.dim, dtype=complex)
        for label in self.DEMO_LABELS:
            label %= space.d
            amplitudes[label * space.d + label] = 1.0
        return from_rel_center(RelCenterState(space, amplitudes / np.linalg.norm(amplitudes)))

    def _superposed_state(self, space: LatticeSpace) -> RelCenterState:
        psi_r = np.zeros(space.d, dtype=complex)
        psi_r[[0, 1 % space.d]] = 1.0
        psi_a = np.zeros(space.d, dtype=complex)
        psi_a[0] = 1.0
        return RelCenterState.product(space, psi_r, psi_a)


def relphase_row(report: FactorizationReport) -> Tuple[Any, ...]:
    params = spin_coherent_params(report.alpha, report.beta)
    return (
        abs(report.alpha),
        float(np.angle(report.alpha)),
        abs(report.beta),
        float(np.angle(report.beta)),
        float(params.phi_r),
        report.condition_ratio,
        report.fidelity_to_target,
        report.rel_state_purity,
        report.target_amplitude.real,
        report.target_amplitude.imag,
        report.embedding_loss,
        report.mean_N,
        report.cutoff,
        report.rel_cutoff,
    )


class RelphaseExperiment(Experiment):
    """Factorization fidelity of the relative-phase state for one (alpha, beta)."""

    NAME = "relphase-fidelity"
    COLUMNS = RELPHASE_COLUMNS

    def _build(self, config, meta):
        alpha = parse_complex(config.alpha)
        beta = parse_complex(config.beta)
        report = factorization_fidelity(
            alpha, beta, config.cutoff, config.rel_cutoff, tolerances=self._tolerances
        )
        meta["resolved.alpha"] = alpha
        meta["resolved.beta"] = beta
        meta["resolved.cutoff"] = report.cutoff
        meta["resolved.rel_cutoff"] = report.rel_cutoff

        weights = np.asarray(report.number_weights)
        n_total = np.arange(weights.size)
        number_mean = float(weights @ n_total)
        summary = {
            "fidelity": report.fidelity_to_target,
            "purity": report.rel_state_purity,
            "condition_ratio": report.condition_ratio,
            "number_mean": number_mean,
            "number_variance": float(weights @ (n_total - number_mean) ** 2),
        }
        return summary, [relphase_row(report)]


class SweepRunner:
    """Evaluates independent sweep points on a bounded executor, keeping results in input order."""

    def __init__(
        self,
        logger: logging.Logger,
        *,
        executor_class: Type[Executor] = ThreadPoolExecutor,
    ):
        self._logger = logger
        self._executor_class = executor_class

    def map(self, function: Callable[[T], R], points: Sequence[T], jobs: int = 1) -> List[R]:
        results: List[R] = [None] * len(points)
        with self._executor_class(max_workers=jobs) as executor:
            futures = {executor.submit(function, point): index for index, point in enumerate(points)}
            for future in as_completed(futures):
                index = futures[future]
                results[index] = future.result()
                self._logger.info(f"Sweep point {points[index]} done")
        return results


class SweepExperiment(Experiment):
    """Factorization fidelity over a range of beta values, one row per point in ascending order."""

    NAME = "sweep"
    COLUMNS = RELPHASE_COLUMNS

    def __init__(
        self,
        logger: logging.Logger,
        *,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
        sweep_runner_class: Type[SweepRunner] = SweepRunner,
    ):
        super().__init__(logger, tolerances=tolerances)
        self._runner = sweep_runner_class(logger)

    def _build(self, config, meta):
        alpha = parse_complex(config.alpha)
        betas = sorted(set(parse_range(config.beta)))
        meta["resolved.alpha"] = alpha
        meta["resolved.betas"] = betas

        def point(beta: float) -> FactorizationReport:
            return factorization_fidelity(
                alpha, beta, config.cutoff, config.rel_cutoff, tolerances=self._tolerances
            )

        reports = self._runner.map(point, betas, config.jobs)
        fidelities = [report.fidelity_to_target for report in reports]
        summary = {
            "points": len(reports),
            "fidelity_strictly_increasing": all(b > a for a, b in zip(fidelities, fidelities[1:])),
            "min_fidelity": min(fidelities),
            "max_fidelity": max(fidelities),
        }
        return summary, [relphase_row(report) for report in reports]


class SelftestExperiment(Experiment):
    """Runs the acceptance suite; failed checks are reported as tolerance breaches."""

    NAME = "selftest"
    COLUMNS = Check._fields

    def __init__(
        self,
        logger: logging.Logger,
        *,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
        acceptance_suite_class: Type[AcceptanceSuite] = AcceptanceSuite,
    ):
        super().__init__(logger, tolerances=tolerances)
        self._acceptance_suite_class = acceptance_suite_class

    def _build(self, config, meta):
        suite = self._acceptance_suite_class(
            self._logger, seed=config.seed, d=config.d, tolerances=self._tolerances
        )
        checks = suite.run()
        passed = sum(check.passed for check in checks)
        summary = {"checks": len(checks), "passed": passed, "all_passed": passed == len(checks)}
        return summary, [tuple(check) for check in checks]

    def _breaches(self, summary, rows):
        return tuple(f"criterion {row[0]}" for row in rows if not row[-1])


EXPERIMENTS: Dict[str, Type[Experiment]] = {
    experiment.NAME: experiment
    for experiment in (
        PhaseAverageExperiment,
        WayDemoExperiment,
        RelphaseExperiment,
        SweepExperiment,
        SelftestExperiment,
    )
}
