import logging
from unittest import TestCase
from unittest.mock import Mock, PropertyMock, patch

from relphase.acceptance import AcceptanceSuite, Check


class TestAcceptanceSuite(TestCase):
    def setUp(self):
        self.logger = Mock(logging.Logger)
        self.suite = AcceptanceSuite(self.logger, seed=0, d=7)

    def assert_all_passed(self, checks):
        self.assertTrue(checks)
        for check in checks:
            self.assertIsInstance(check, Check)
            self.assertTrue(check.passed, check)

    def test_check_flat_average_weights__passes(self):
        checks = self.suite.check_flat_average_weights()
        self.assertEqual([check.criterion for check in checks], ["1a", "1b"])
        self.assert_all_passed(checks)

    def test_check_prior_independence__passes(self):
        self.assert_all_passed(self.suite.check_prior_independence())

    def test_check_position_eigenstate_average__passes(self):
        self.assert_all_passed(self.suite.check_position_eigenstate_average())

    def test_check_relative_factor_preserved__passes(self):
        self.assert_all_passed(self.suite.check_relative_factor_preserved())

    def test_check_sum_gate__passes(self):
        self.assert_all_passed(self.suite.check_sum_gate())

    def test_check_block_identity__passes(self):
        self.assert_all_passed(self.suite.check_block_identity())

    def test_check_contraction__passes(self):
        self.assert_all_passed(self.suite.check_contraction())

    def test_check_factorization_quality__passes(self):
        self.assert_all_passed(self.suite.check_factorization_quality())

    def test_check_gauge_invariance__passes(self):
        self.assert_all_passed(self.suite.check_gauge_invariance())

    def test_check_determinism__no_mismatches(self):
        (check,) = self.suite.check_determinism()
        self.assertEqual(check.value, 0.0)
        self.assertTrue(check.passed)

    def test_check_prior_independence__same_seed__identical_value(self):
        other = AcceptanceSuite(Mock(logging.Logger), seed=0, d=7)
        self.assertEqual(
            self.suite.check_prior_independence()[0].value,
            other.check_prior_independence()[0].value,
        )

    def test_criteria__ten_numbered_checks(self):
        self.assertEqual(len(self.suite.criteria), 10)


class TestAcceptanceSuiteRun(TestCase):
    def test_run__default_lattice__every_check_passes(self):
        logger = Mock(logging.Logger)
        checks = AcceptanceSuite(logger, seed=11).run()
        self.assertEqual(
            [check.criterion for check in checks],
            "1a 1b 2 3 4a 4b 5a 5b 6 7a 7b 8a 8b 8c 9 10".split(),
        )
        self.assertTrue(all(check.passed for check in checks), [c for c in checks if not c.passed])
        logger.warning.assert_not_called()
        self.assertEqual(logger.debug.call_count, 10)

    def test_run__failing_check__logged_as_warning(self):
        logger = Mock(logging.Logger)
        suite = AcceptanceSuite(logger, d=7)
        failing = Mock(return_value=[Check("7b", "bad", 2.0, 1.0, False)])
        failing.__name__ = "check_contraction"
        with patch.object(
            AcceptanceSuite, "criteria", new_callable=PropertyMock, return_value=[failing]
        ):
            checks = suite.run()
        self.assertEqual(checks, [Check("7b", "bad", 2.0, 1.0, False)])
        logger.warning.assert_called_once()

