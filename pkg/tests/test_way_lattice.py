from pathlib import Path
from unittest import TestCase

import numpy as np
from scipy.linalg import expm

from relphase.exceptions import ConfigurationError, DimensionMismatchError, InvalidStateError
from relphase.fock_core import DensityMatrix, expectation, fidelity, purity
from relphase.way_lattice import (
    LatticeSpace,
    LatticeState,
    RelCenterState,
    ShiftPrior,
    apply_sum_gate,
    commutator_norm,
    commuting_polynomial,
    density_from_rel_center,
    density_to_rel_center,
    displacement,
    displacement_average,
    displacement_matrix,
    entanglement_entropy,
    expectation_invariance,
    factorization_check,
    from_rel_center,
    parse_shift_prior,
    position_operator,
    relative_position_operator,
    shift_matrix,
    sum_gate,
    sum_gate_rel_center,
    to_rel_center,
    total_momentum,
)


def random_vector(rng: np.random.Generator, size: int) -> np.ndarray:
    vector = rng.normal(size=size) + 1j * rng.normal(size=size)
    return vector / np.linalg.norm(vector)


class TestLatticeSpace(TestCase):
    def test_init__even_d__raises_configuration_error(self):
        with self.assertRaises(ConfigurationError):
            LatticeSpace(4)

    def test_init__three_particles__raises(self):
        with self.assertRaises(ConfigurationError):
            LatticeSpace(5, particles=3)

    def test_half_inverse__is_inverse_of_two(self):
        for d in (3, 5, 7, 31):
            self.assertEqual((2 * LatticeSpace(d).half_inverse) % d, 1)

    def test_centered_labels__symmetric_around_zero(self):
        np.testing.assert_array_equal(LatticeSpace(5).centered_labels(), [0, 1, 2, -2, -1])

    def test_lattice_state__not_normalized__raises(self):
        with self.assertRaises(InvalidStateError):
            LatticeState(LatticeSpace(3), np.ones(9))

    def test_lattice_state__wrong_dimension__raises(self):
        with self.assertRaises(DimensionMismatchError):
            LatticeState(LatticeSpace(3), np.ones(3) / np.sqrt(3))


class TestDisplacement(TestCase):
    def setUp(self):
        self.space = LatticeSpace(5)
        self.rng = np.random.default_rng(17)

    def test_shift_matrix__moves_site_forward(self):
        np.testing.assert_array_equal(shift_matrix(5, 1) @ np.eye(5)[:, 4], np.eye(5)[:, 0])

    def test_displacement__state__moves_both_particles(self):
        state = LatticeState.position_eigenstate(self.space, 1, 3)
        shifted = displacement(3, state)
        np.testing.assert_array_equal(
            shifted.amplitudes, LatticeState.position_eigenstate(self.space, 4, 1).amplitudes
        )

    def test_displacement__density_matrix__matches_state_form(self):
        state = LatticeState(self.space, random_vector(self.rng, 25))
        shifted = displacement(2, state.to_density(), space=self.space)
        expected = displacement(2, state).to_density()
        np.testing.assert_allclose(shifted.entries, expected.entries, atol=1e-14)

    def test_displacement__density_without_space__raises(self):
        with self.assertRaises(DimensionMismatchError):
            displacement(1, DensityMatrix(np.eye(25) / 25, "lattice"))

    def test_total_momentum__generates_displacements(self):
        pi = total_momentum(self.space)
        for shift in (1, 2, 4):
            np.testing.assert_allclose(
                expm(-1j * shift * pi), displacement_matrix(self.space, shift), atol=1e-10
            )

    def test_total_momentum__hermitian(self):
        pi = total_momentum(self.space)
        np.testing.assert_allclose(pi, pi.conj().T, atol=1e-15)

    def test_displacement_average__flat_prior_single_site__identity_over_d(self):
        single = LatticeSpace(31, particles=1)
        averaged = displacement_average(
            LatticeState.position_eigenstate(single, 0), ShiftPrior.flat(31)
        )
        self.assertLess(np.max(np.abs(averaged.entries - np.eye(31) / 31)), 1e-12)

    def test_displacement_average__delta_prior__pure_shifted_state(self):
        state = LatticeState(self.space, random_vector(self.rng, 25))
        averaged = displacement_average(state, ShiftPrior.delta(5, 2))
        self.assertAlmostEqual(purity(averaged), 1.0, places=12)

    def test_displacement_average__prior_on_other_lattice__raises(self):
        state = LatticeState.position_eigenstate(self.space, 0, 0)
        with self.assertRaises(DimensionMismatchError):
            displacement_average(state, ShiftPrior.flat(7))


class TestShiftPrior(TestCase):
    def test_init__weights_not_normalized__raises(self):
        with self.assertRaises(InvalidStateError):
            ShiftPrior((0.5, 0.4))

    def test_von_mises__peaks_at_mu(self):
        prior = ShiftPrior.von_mises(7, 2, 3.0)
        self.assertEqual(int(np.argmax(prior.weights)), 2)
        self.assertAlmostEqual(sum(prior.weights), 1.0, places=12)

    def test_parse_shift_prior__delta__label_and_weight(self):
        prior = parse_shift_prior("delta:5", 31)
        self.assertEqual(str(prior), "delta:5")
        self.assertEqual(prior.weights[5], 1.0)

    def test_parse_shift_prior__grid__accumulates_sites_mod_d(self):
        prior = parse_shift_prior(
            "grid:sites.csv", 5, grid_loader=lambda path: [(1.0, 0.5), (6.0, 0.5)]
        )
        self.assertEqual(prior.weights[1], 1.0)

    def test_parse_shift_prior__fractional_grid_site__raises(self):
        with self.assertRaises(ConfigurationError):
            parse_shift_prior("grid:sites.csv", 5, grid_loader=lambda path: [(1.5, 1.0)])

    def test_parse_shift_prior__unknown__raises(self):
        with self.assertRaises(ConfigurationError):
            parse_shift_prior("uniform", 5)


class TestRelCenter(TestCase):
    def setUp(self):
        self.space = LatticeSpace(7)
        self.rng = np.random.default_rng(23)

    def test_to_rel_center__position_eigenstate__relative_and_center_labels(self):
        state = LatticeState.position_eigenstate(self.space, 4, 1)
        converted = to_rel_center(state)
        # x_r = x1 - x2 = 3, x_a = x1 + x2 = 5
        self.assertEqual(int(np.argmax(np.abs(converted.amplitudes))), 3 * 7 + 5)

    def test_from_rel_center__inverts_to_rel_center(self):
        state = LatticeState(self.space, random_vector(self.rng, 49))
        np.testing.assert_array_equal(from_rel_center(to_rel_center(state)).amplitudes, state.amplitudes)

    def test_density_from_rel_center__inverts_density_to_rel_center(self):
        rho = LatticeState(self.space, random_vector(self.rng, 49)).to_density()
        round_trip = density_from_rel_center(density_to_rel_center(rho, self.space), self.space)
        np.testing.assert_array_equal(round_trip.entries, rho.entries)

    def test_displacement__moves_only_center_coordinate(self):
        state = LatticeState.position_eigenstate(self.space, 4, 1)
        converted = to_rel_center(displacement(2, state))
        # x_a = 5 + 2 * 2
        self.assertEqual(int(np.argmax(np.abs(converted.amplitudes))), 3 * 7 + 2)

    def test_relative_position_operator__commutes_with_momentum(self):
        pi = total_momentum(self.space)
        self.assertLess(commutator_norm(relative_position_operator(self.space), pi), 1e-10)

    def test_position_operator__does_not_commute_with_momentum(self):
        pi = total_momentum(self.space)
        self.assertGreater(commutator_norm(position_operator(self.space, 0), pi), 1e-3)

    def test_position_operator__missing_particle__raises(self):
        with self.assertRaises(DimensionMismatchError):
            position_operator(self.space, 2)

    def test_factorization_check__product_state_any_prior__relative_factor_preserved(self):
        psi_r = random_vector(self.rng, 7)
        psi_a = random_vector(self.rng, 7)
        state = from_rel_center(RelCenterState.product(self.space, psi_r, psi_a))
        target = DensityMatrix.from_vector(psi_r, "rel-center")
        for prior in (ShiftPrior.flat(7), ShiftPrior.random(7, self.rng), ShiftPrior.delta(7, 3)):
            check = factorization_check(
                density_to_rel_center(displacement_average(state, prior), self.space), self.space
            )
            self.assertTrue(check.is_factorized)
            self.assertGreater(check.rel_purity, 1 - 1e-8)
            self.assertGreater(fidelity(check.rel_factor, target), 1 - 1e-8)

    def test_factorization_check__entangled_state__residual_reported(self):
        amplitudes = np.zeros(49, dtype=complex)
        amplitudes[[0 * 7 + 0, 2 * 7 + 2]] = 1 / np.sqrt(2)
        state = from_rel_center(RelCenterState(self.space, amplitudes))
        check = factorization_check(
            density_to_rel_center(displacement_average(state, ShiftPrior.flat(7)), self.space),
            self.space,
        )
        self.assertFalse(check.is_factorized)
        self.assertAlmostEqual(check.residual, 1 / 14, places=12)

    def test_factorization_check__lattice_basis__raises(self):
        rho = LatticeState.position_eigenstate(self.space, 0, 0).to_density()
        with self.assertRaises(InvalidStateError):
            factorization_check(rho, self.space)


class TestSumGate(TestCase):
    def setUp(self):
        self.space = LatticeSpace(7)

    def test_sum_gate__unitary(self):
        gate = sum_gate(self.space)
        np.testing.assert_allclose(gate @ gate.conj().T, np.eye(49), atol=1e-15)

    def test_sum_gate__commutes_with_momentum(self):
        self.assertLess(commutator_norm(sum_gate(self.space), total_momentum(self.space)), 1e-10)

    def test_sum_gate__large_lattice__commutes_with_momentum(self):
        space = LatticeSpace(31)
        self.assertLess(commutator_norm(sum_gate(space), total_momentum(space)), 1e-10)

    def test_sum_gate_rel_center__adds_relative_to_center(self):
        gate = sum_gate_rel_center(self.space)
        basis = np.zeros(49)
        basis[3 * 7 + 5] = 1.0
        self.assertEqual(int(np.argmax(np.abs(gate @ basis))), 3 * 7 + 1)

    def test_apply_sum_gate__two_term_superposition__one_bit(self):
        psi_r = np.zeros(7)
        psi_r[[0, 1]] = 1.0
        psi_a = np.zeros(7)
        psi_a[0] = 1.0
        product = RelCenterState.product(self.space, psi_r, psi_a)
        self.assertAlmostEqual(entanglement_entropy(product), 0.0, places=12)
        self.assertAlmostEqual(entanglement_entropy(apply_sum_gate(product)), 1.0, places=8)


class TestInvariance(TestCase):
    def setUp(self):
        self.space = LatticeSpace(31)
        superposition = np.zeros(31)
        superposition[[0, 2]] = 1.0
        self.state = from_rel_center(
            RelCenterState.product(self.space, superposition, superposition)
        )
        self.priors = [ShiftPrior.flat(31), ShiftPrior.delta(31, 0), ShiftPrior.delta(31, 5)]
        self.momentum = total_momentum(self.space)

    def test_expectation_invariance__relative_position__prior_independent(self):
        result = expectation_invariance(
            self.state, relative_position_operator(self.space), self.priors, momentum=self.momentum
        )
        self.assertLess(result.commutator_norm, 1e-10)
        self.assertLess(result.deviation, 1e-10)

    def test_expectation_invariance__first_position__delta_priors_differ_by_shift(self):
        result = expectation_invariance(
            self.state, position_operator(self.space, 0), self.priors, momentum=self.momentum
        )
        _, at_zero, at_five = result.expectations
        self.assertAlmostEqual(at_five - at_zero, 5.0, places=10)
        self.assertGreater(result.commutator_norm, 1e-3)

    def test_commuting_polynomial__commutes_with_momentum(self):
        space = LatticeSpace(5)
        pi = total_momentum(space)
        x_r = relative_position_operator(space)
        polynomial = commuting_polynomial(x_r, pi, [0.5, 1.0, -0.3, 0.2, 0.1, 0.7])
        self.assertLess(commutator_norm(polynomial, pi), 1e-10)
        rng = np.random.default_rng(4)
        state = LatticeState(space, random_vector(rng, 25))
        values = [
            expectation(polynomial, displacement_average(state, prior))
            for prior in (ShiftPrior.flat(5), ShiftPrior.delta(5, 2), ShiftPrior.random(5, rng))
        ]
        self.assertLess(max(values) - min(values), 1e-10)

    def test_commuting_polynomial__random_coefficients__every_observable_prior_independent(self):
        space = LatticeSpace(7)
        pi = total_momentum(space)
        x_r = relative_position_operator(space)
        rng = np.random.default_rng(12)
        state = LatticeState(space, random_vector(rng, space.dim))
        priors = [ShiftPrior.flat(7), ShiftPrior.delta(7, 3)] + [
            ShiftPrior.random(7, rng) for _ in range(3)
        ]
        for _ in range(100):
            polynomial = commuting_polynomial(x_r, pi, rng.normal(size=6))
            result = expectation_invariance(state, polynomial, priors, momentum=pi)
            self.assertLess(result.commutator_norm, 1e-9)
            self.assertLess(result.deviation, 1e-9)

    def test_commuting_polynomial__wrong_coefficient_count__raises(self):
        space = LatticeSpace(3)
        with self.assertRaises(ValueError):
            commuting_polynomial(
                relative_position_operator(space), total_momentum(space), [1.0, 2.0]
            )
