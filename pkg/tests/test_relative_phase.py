import cmath
import math
from unittest import TestCase

import numpy as np
from scipy.special import gammaln, i0

from relphase.config import Tolerances
from relphase.exceptions import (
    DimensionMismatchError,
    EmbeddingLossError,
    InvalidStateError,
    TruncationError,
)
from relphase.fock_core import TwoModeState, coherent_amplitudes, purity, vector_fidelity
from relphase.relative_phase import (
    FactorizationReport,
    contract_block,
    contraction_fidelity,
    factorization_fidelity,
    relative_phase_components,
    relative_phase_state,
    spin_coherent_block,
    spin_coherent_params,
    to_spin_blocks,
    two_mode_coherent,
    verify_block_identity,
)


class TestSpinBlocks(TestCase):
    def test_to_spin_blocks__random_state__preserves_norm(self):
        rng = np.random.default_rng(1)
        amplitudes = rng.normal(size=(6, 9)) + 1j * rng.normal(size=(6, 9))
        state = TwoModeState(amplitudes / np.linalg.norm(amplitudes))
        decomposition = to_spin_blocks(state)
        total = sum(float(np.vdot(block, block).real) for block in decomposition.blocks)
        self.assertAlmostEqual(total, 1.0, places=13)
        self.assertEqual(decomposition.max_N, 5 + 8)
        self.assertEqual(decomposition.complete_max_N, 5)

    def test_to_spin_blocks__coherent_pair__weights_are_poisson_in_total_number(self):
        weights = to_spin_blocks(two_mode_coherent(1.0, 2.0)).block_weights
        n_total = np.arange(31)
        expected = np.exp(-5.0 + n_total * math.log(5.0) - gammaln(n_total + 1))
        np.testing.assert_allclose(weights[:31], expected, rtol=0, atol=1e-10)

    def test_two_mode_coherent__vacuum_amplitude(self):
        state = two_mode_coherent(1.0, 2.0, cutoff=40)
        self.assertAlmostEqual(state.amplitudes[0, 0], math.exp(-2.5), places=14)

    def test_to_spin_blocks__entry_placement(self):
        amplitudes = np.zeros((3, 3), dtype=complex)
        amplitudes[2, 1] = 1.0
        decomposition = to_spin_blocks(TwoModeState(amplitudes))
        np.testing.assert_array_equal(decomposition.blocks[3], [0, 0, 1, 0])

    def test_spin_coherent_block__large_n__normalized(self):
        for n_total in (0, 1, 10, 400, 1000):
            block = spin_coherent_block(n_total, 0.3 - 0.8j)
            self.assertAlmostEqual(np.vdot(block, block).real, 1.0, places=12)

    def test_spin_coherent_block__one_photon_equal_amplitudes__balanced(self):
        np.testing.assert_allclose(spin_coherent_block(1, 1.0), [1 / math.sqrt(2)] * 2, atol=1e-15)

    def test_spin_coherent_block__xi_zero__lowest_state(self):
        np.testing.assert_array_equal(spin_coherent_block(3, 0), [1, 0, 0, 0])

    def test_spin_coherent_block__negative_n__raises(self):
        with self.assertRaises(DimensionMismatchError):
            spin_coherent_block(-1, 0.5)

    def test_spin_coherent_params__theta_and_relative_phase(self):
        alpha = cmath.rect(1.0, 0.2)
        beta = cmath.rect(2.0, 1.1)
        params = spin_coherent_params(alpha, beta)
        self.assertAlmostEqual(params.mean_N, 5.0)
        self.assertAlmostEqual(-math.sin(params.theta / 2), 1 / math.sqrt(5))
        self.assertAlmostEqual(math.cos(params.theta / 2), 2 / math.sqrt(5))
        self.assertAlmostEqual(params.phi_r, 0.9)
        self.assertAlmostEqual(params.xi, alpha / beta)

    def test_spin_coherent_params__beta_zero__raises(self):
        with self.assertRaises(InvalidStateError):
            spin_coherent_params(1.0, 0.0)


class TestBlockIdentity(TestCase):
    def test_verify_block_identity__random_amplitudes__exact(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            alpha = cmath.rect(rng.uniform(0.0, 3.0), rng.uniform(0, 2 * math.pi))
            beta = cmath.rect(rng.uniform(0.5, 3.0), rng.uniform(0, 2 * math.pi))
            self.assertLess(verify_block_identity(alpha, beta), 1e-10)

    def test_verify_block_identity__opposite_xi_sign__fails(self):
        self.assertGreater(verify_block_identity(1.0, 2.0, xi_sign=-1), 1e-3)

    def test_two_mode_coherent__cutoff_too_small__raises_truncation_error(self):
        with self.assertRaises(TruncationError):
            two_mode_coherent(2.0, 2.0, cutoff=5)


class TestContraction(TestCase):
    def test_contract_block__cutoff_below_n__reports_dropped_mass(self):
        block = np.full(5, 1 / math.sqrt(5))
        vector = contract_block(4, block, cutoff=2)
        self.assertEqual(vector.cutoff, 2)
        self.assertAlmostEqual(vector.tail_mass, 0.4, places=14)

    def test_contract_block__wrong_length__raises(self):
        with self.assertRaises(DimensionMismatchError):
            contract_block(4, np.ones(3))

    def test_contract_block__large_n_small_xi__close_to_coherent_state(self):
        vector = contract_block(400, spin_coherent_block(400, 0.05), cutoff=40)
        target = coherent_amplitudes(1.0, 40)
        self.assertGreaterEqual(vector_fidelity(target.amplitudes, vector.amplitudes), 0.999)

    def test_contraction_fidelity__grows_with_n(self):
        values = [contraction_fidelity(n_total, 1.0) for n_total in (25, 100, 400, 1600)]
        self.assertEqual(values, sorted(values))
        self.assertLess(1 - values[-1], 1e-3)

    def test_contraction_fidelity__zero_n__raises(self):
        with self.assertRaises(DimensionMismatchError):
            contraction_fidelity(0, 1.0)


class TestRelativePhaseState(TestCase):
    def test_factorization_fidelity__alpha_zero__exact(self):
        report = factorization_fidelity(0.0, 3.0)
        self.assertAlmostEqual(report.fidelity_to_target, 1.0, places=10)
        self.assertEqual(report.condition_ratio, math.inf)

    def test_factorization_fidelity__beta_eight__close_to_target(self):
        report = factorization_fidelity(1.0, 8.0)
        self.assertIsInstance(report, FactorizationReport)
        self.assertGreater(report.fidelity_to_target, 0.9)
        self.assertLessEqual(report.fidelity_to_target, 1.0)
        self.assertAlmostEqual(report.condition_ratio, 64.0)
        self.assertAlmostEqual(report.mean_N, 65.0)

    def test_factorization_fidelity__increasing_beta__fidelity_strictly_increases(self):
        fidelities = [
            factorization_fidelity(1.0, beta).fidelity_to_target for beta in (2.0, 4.0, 8.0, 16.0)
        ]
        self.assertTrue(all(b > a for a, b in zip(fidelities, fidelities[1:])))
        self.assertGreaterEqual(fidelities[-1], 0.99)

    def test_factorization_fidelity__purity_exceeds_dephased_single_mode(self):
        dephased = math.exp(-2) * i0(2)
        for beta in (4.0, 8.0):
            report = factorization_fidelity(1.0, beta)
            self.assertGreater(report.rel_state_purity - dephased, 0.5)

    def test_factorization_fidelity__global_phase__invariant(self):
        base = factorization_fidelity(1.0, 4.0)
        for chi in (0.3, 2.9):
            rotation = cmath.exp(1j * chi)
            rotated = factorization_fidelity(rotation, 4.0 * rotation)
            self.assertAlmostEqual(rotated.fidelity_to_target, base.fidelity_to_target, places=10)
            self.assertAlmostEqual(rotated.rel_state_purity, base.rel_state_purity, places=10)

    def test_factorization_fidelity__target_follows_relative_phase(self):
        alpha = cmath.rect(1.0, 0.5)
        beta = cmath.rect(6.0, 1.5)
        report = factorization_fidelity(alpha, beta)
        # |alpha| exp(-i phi_r) with phi_r = arg(beta) - arg(alpha) = 1.0
        self.assertAlmostEqual(report.target_amplitude, cmath.rect(1.0, -1.0), places=12)

    def test_relative_phase_components__weights_are_poisson_in_total_number(self):
        components = relative_phase_components(1.0, 2.0)
        n_total = np.arange(components.number_weights.size)
        self.assertAlmostEqual(components.number_weights.sum(), 1.0, places=12)
        self.assertAlmostEqual(float(components.number_weights @ n_total), 5.0, places=8)

    def test_relative_phase_state__beta_eight__nearly_pure(self):
        self.assertGreater(purity(relative_phase_state(1.0, 8.0)), 0.95)

    def test_relative_phase_state__larger_beta__purer(self):
        self.assertLess(
            purity(relative_phase_state(1.0, 2.0)), purity(relative_phase_state(1.0, 8.0))
        )

    def test_relative_phase_state__alpha_zero__vacuum_projector(self):
        state = relative_phase_state(0.0, 3.0)
        vacuum = np.zeros((state.dim, state.dim))
        vacuum[0, 0] = 1.0
        np.testing.assert_allclose(state.entries, vacuum, atol=1e-10)

    def test_relative_phase_state__trace_one(self):
        self.assertAlmostEqual(relative_phase_state(1.0, 4.0).trace, 1.0, places=10)

    def test_relative_phase_state__beta_zero__raises(self):
        with self.assertRaises(InvalidStateError):
            relative_phase_state(1.0, 0.0)

    def test_relative_phase_state__rel_cutoff_too_small__raises_embedding_loss(self):
        with self.assertRaises(EmbeddingLossError):
            relative_phase_state(1.0, 4.0, rel_cutoff=3)

    def test_relative_phase_components__loose_tolerances__small_rel_cutoff_reports_loss(self):
        tolerances = Tolerances(tail_tol=0.1, trace_tol=0.1)
        components = relative_phase_components(1.0, 4.0, rel_cutoff=3, tolerances=tolerances)
        self.assertEqual(components.state.dim, 4)
        self.assertGreater(components.embedding_loss, 1e-3)
        self.assertAlmostEqual(components.state.trace + components.embedding_loss, 1.0, places=10)
