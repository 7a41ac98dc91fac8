import math
import unittest

import numpy as np
import pytest

from src.core import adversary
from src.core.adversary import (
    ConfirmationProbe,
    GeneralFake,
    OutcomeState,
    ParamFake,
    Uniform,
)
from src.core.montecarlo import three_sigma, trial_rng
from src.core.protocol import DatabaseTable, QuerySpec, expected_finals
from src.utils.logger import AdversaryException


class TestFakeStates(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(AdversaryException):
            ParamFake(0.5, 0.5, 0).validate(5)
        with self.assertRaises(AdversaryException):
            ConfirmationProbe(2, 2).state(4)
        with self.assertRaises(AdversaryException):
            GeneralFake((1.0, 1.0)).validate(2)
        with self.assertRaises(AdversaryException):
            OutcomeState(4).state(4)

    def test_confirmation_state_layout(self):
        fake = ConfirmationProbe(1, 3)
        s = fake.state(4)
        self.assertEqual(s.dim, 8)
        self.assertAlmostEqual(s.amps[3].real, 1 / math.sqrt(2))
        self.assertAlmostEqual(s.amps[6].real, 1 / math.sqrt(2))
        self.assertAlmostEqual(fake.flipped(4).amps[3].real, -1 / math.sqrt(2))

    def test_confirmation_state_is_not_a_final_state(self):
        q = QuerySpec.basic(0, 4)
        with self.assertRaises(AdversaryException):
            adversary.detection_probability(ConfirmationProbe(0, 1), q, 4)


class TestDetectionProbability(unittest.TestCase):
    def test_uniform_conceals_basic_form(self):
        for N in range(2, 65):
            q = QuerySpec.basic(N // 2, N)
            self.assertAlmostEqual(adversary.detection_probability(Uniform(), q, N), 0.0, delta=1e-12)

    def test_uniform_against_randomized_form(self):
        q = QuerySpec.randomized(0, [1, 2, 3, 4])
        self.assertAlmostEqual(adversary.detection_probability(Uniform(), q, 10), 0.5, delta=1e-12)
        self.assertAlmostEqual(adversary.policy_detection("uniform", 10, 4), 0.5, delta=1e-12)

    def test_uniform_detection_decreases_with_t(self):
        N = 12
        values = [adversary.detection_probability(Uniform(), QuerySpec.randomized(0, range(1, t + 1)), N)
                  for t in range(1, N)]
        self.assertTrue(all(a > b for a, b in zip(values, values[1:])))
        self.assertTrue(all(v > 1e-9 for v in values[:-1]))
        self.assertAlmostEqual(values[-1], 0.0, delta=1e-12)

    def test_final_state_is_not_detected(self):
        q = QuerySpec.randomized(2, [0, 5])
        plus, _ = expected_finals(q, 6)
        fake = GeneralFake(tuple(plus.amps))
        self.assertAlmostEqual(adversary.detection_probability(fake, q, 6), 0.0, delta=1e-12)

    def test_closed_form_known_values(self):
        self.assertAlmostEqual(adversary.detection_prob_param(1, 1.0, 0.0), 0.0, delta=1e-15)
        self.assertAlmostEqual(adversary.detection_prob_param(4, 1.0, 0.0), 0.75, delta=1e-15)
        with self.assertRaises(AdversaryException):
            adversary.detection_prob_param(0, 1.0, 0.0)

    def test_optimal_fake_dual_path(self):
        fake = adversary.optimal_fake(13, 4)
        q = QuerySpec.randomized(0, [4, 7, 9])
        self.assertAlmostEqual(adversary.detection_probability(fake, q, 13),
                               adversary.detection_prob_param(3, fake.a, fake.b), delta=1e-12)

    @pytest.mark.timeout(30)
    def test_dual_path_random_parameters(self):
        for i in range(1000):
            rng = trial_rng(21, i)
            N = int(rng.integers(2, 129))
            t = int(rng.integers(1, N))
            q = QuerySpec.random(N, rng, t=t)
            fake = ParamFake.from_alpha(rng.uniform(0, math.pi / 2), N, min(q.T))
            self.assertAlmostEqual(adversary.detection_probability(fake, q, N),
                                   adversary.detection_prob_param(t, fake.a, fake.b, N), delta=1e-12)


class TestCheatSensitivity(unittest.TestCase):
    @pytest.mark.timeout(60)
    def test_no_hidden_concealing_fakes(self):
        for i in range(10000):
            rng = trial_rng(31, i)
            N = int(rng.integers(3, 11))
            q = QuerySpec.random(N, rng, t=int(rng.integers(1, N - 1)))
            fake = adversary.random_general_fake(N, rng)
            p = adversary.detection_probability(fake, q, N)
            self.assertAlmostEqual(p, adversary.detection_from_alpha(fake.alpha, q), delta=1e-12)
            if p <= 1e-9:
                self.assertTrue(adversary.has_concealing_structure(fake.alpha, q))

    def test_concealing_structure_has_zero_detection(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            N = int(rng.integers(3, 11))
            q = QuerySpec.random(N, rng, t=int(rng.integers(1, N - 1)))
            alpha = np.zeros(N, dtype=complex)
            alpha[sorted(q.T)] = complex(rng.normal(), rng.normal())
            alpha[q.j] = complex(rng.normal(), rng.normal())
            alpha /= np.linalg.norm(alpha)
            self.assertTrue(adversary.has_concealing_structure(alpha, q))
            self.assertAlmostEqual(adversary.detection_probability(GeneralFake(tuple(alpha)), q, N), 0.0, delta=1e-12)

    def test_fakes_near_concealing_structure_are_detected(self):
        for i in range(500):
            rng = trial_rng(37, i)
            N = int(rng.integers(3, 11))
            q = QuerySpec.random(N, rng, t=int(rng.integers(1, N - 1)))
            T = sorted(q.T)
            base = np.zeros(N, dtype=complex)
            base[T] = complex(rng.normal(), rng.normal())
            base[q.j] = complex(rng.normal(), rng.normal())
            base /= np.linalg.norm(base)
            self.assertTrue(adversary.has_concealing_structure(base, q))
            self.assertLessEqual(adversary.detection_from_alpha(base, q), 1e-12)

            outside = [k for k in range(N) if k != q.j and k not in q.T]
            for eps in (1e-3, 1e-6):
                near = []
                leak = base.copy()
                leak[outside[int(rng.integers(len(outside)))]] = eps * np.exp(1j * rng.uniform(0, 2 * np.pi))
                near.append(leak)
                if q.t >= 2:
                    uneven = base.copy()
                    uneven[T[int(rng.integers(q.t))]] += eps
                    near.append(uneven)
                for alpha in near:
                    alpha = alpha / np.linalg.norm(alpha)
                    p = adversary.detection_probability(GeneralFake(tuple(alpha)), q, N)
                    self.assertFalse(adversary.has_concealing_structure(alpha, q))
                    self.assertGreater(p, eps ** 2 / 4)
                    self.assertAlmostEqual(p, adversary.detection_from_alpha(alpha, q), delta=1e-14)

            alpha[min(q.T)] *= 1.2
            alpha /= np.linalg.norm(alpha)
            if q.t > 1:
                self.assertFalse(adversary.has_concealing_structure(alpha, q))
                self.assertGreater(adversary.detection_probability(GeneralFake(tuple(alpha)), q, N), 1e-9)

    def test_cauchy_schwarz_step(self):
        rng = np.random.default_rng(6)
        for _ in range(500):
            N = int(rng.integers(3, 11))
            q = QuerySpec.random(N, rng, t=int(rng.integers(1, N)))
            alpha = adversary.random_general_fake(N, rng).alpha
            self.assertGreaterEqual(adversary.detection_from_alpha(alpha, q),
                                    adversary.cauchy_schwarz_bound(alpha, q) - 1e-12)

        q = QuerySpec.randomized(0, [1, 2, 3])
        alpha = np.array([0.5, 0.5, 0.5, 0.5])
        self.assertAlmostEqual(adversary.detection_from_alpha(alpha, q),
                               adversary.cauchy_schwarz_bound(alpha, q), delta=1e-9)


class TestDetectionStats(unittest.TestCase):
    def test_from_counts(self):
        stats = adversary.DetectionStats.from_counts(53, 100, 0.5)
        self.assertEqual(stats.trials, 100)
        self.assertEqual(stats.detections, 53)
        self.assertAlmostEqual(stats.p_hat, 0.53, places=15)
        self.assertAlmostEqual(stats.deviation, 0.03, places=12)
        self.assertAlmostEqual(stats.three_sigma, 0.15, places=12)
        self.assertEqual(stats.bound, stats.three_sigma)
        self.assertTrue(stats.within_bound)

    def test_outside_three_sigma(self):
        stats = adversary.DetectionStats.from_counts(70, 100, 0.5)
        self.assertAlmostEqual(stats.deviation, 0.2, places=12)
        self.assertFalse(stats.within_bound)
        wider = adversary.DetectionStats.from_counts(69, 100, 0.5, z=4.0)
        self.assertAlmostEqual(wider.bound, 0.2, places=12)
        self.assertTrue(wider.within_bound)

    def test_degenerate_analytic_value(self):
        clean = adversary.DetectionStats.from_counts(0, 1000, 0.0)
        self.assertEqual(clean.bound, 0.0)
        self.assertTrue(clean.within_bound)
        self.assertFalse(adversary.DetectionStats.from_counts(1, 1000, 0.0).within_bound)
        self.assertEqual(adversary.DetectionStats.from_counts(0, 0, 0.25).p_hat, 0.0)


class TestAttacks(unittest.TestCase):
    def test_confirmation_attack(self):
        trials, hits = 10000, 0
        for i in range(trials):
            rng = trial_rng(41, i)
            A = DatabaseTable.random(12, rng)
            q = QuerySpec.random(12, rng)
            r = adversary.confirmation_attack(A, q, rng)
            hit = r.measured_k == q.j
            hits += hit
            self.assertEqual(r.confirmed_j, hit)
            self.assertTrue(hit or r.measured_k in q.T)
            self.assertFalse(r.detected)
        self.assertLessEqual(abs(hits / trials - 0.5), three_sigma(0.5, trials))

    def test_uniform_concealment_basic_form_never_detected(self):
        for i in range(2000):
            rng = trial_rng(42, i)
            A = DatabaseTable.random(8, rng)
            r = adversary.full_attack(A, QuerySpec.basic(int(rng.integers(8)), 8), "uniform", rng)
            self.assertFalse(r.detected)
            self.assertIn(r.user_answer, (0, 1))

    def test_confirmed_branch_is_safe(self):
        for i in range(2000):
            rng = trial_rng(43, i)
            A = DatabaseTable.random(10, rng)
            r = adversary.full_attack(A, QuerySpec.random(10, rng, t=4), "optimal", rng)
            if r.confirmed_j:
                self.assertFalse(r.detected)
                self.assertIn(r.user_answer, (0, 1))

    def test_unknown_policy(self):
        with self.assertRaises(AdversaryException):
            adversary.resolve_policy("nope")

    @pytest.mark.timeout(600)
    def test_optimal_policy_detection_near_one_quarter(self):
        N, trials = 101, 100000
        detections = 0
        for i in range(trials):
            rng = trial_rng(44, i)
            A = DatabaseTable.random(N, rng)
            detections += adversary.full_attack(A, QuerySpec.random(N, rng), "optimal", rng).detected
        ts, w = adversary.subset_size_weights(N)
        analytic = math.fsum(wi * adversary.policy_detection("optimal", N, int(ti)) for ti, wi in zip(ts, w))
        self.assertLessEqual(abs(analytic - 0.25), 0.03)
        self.assertLessEqual(abs(detections / trials - analytic), three_sigma(analytic, trials))
        self.assertLessEqual(abs(detections / trials - 0.25), 0.03)


class TestOptimalFake(unittest.TestCase):
    def test_parameters(self):
        fake = adversary.optimal_fake(13, 0)
        self.assertAlmostEqual(fake.a, 0.5, places=12)
        self.assertAlmostEqual(fake.b, 0.25, places=12)
        for N in (2, 7, 100, 997):
            fake = adversary.optimal_fake(N, 1)
            self.assertAlmostEqual(fake.a ** 2 + (N - 1) * fake.b ** 2, 1.0, delta=1e-12)
        with self.assertRaises(AdversaryException):
            adversary.optimal_fake(1, 0)

    def test_expected_detection_over_T(self):
        fake = adversary.optimal_fake(2, 0)
        self.assertAlmostEqual(adversary.expected_detection_over_T(2, fake.a, fake.b),
                               adversary.detection_prob_param(1, fake.a, fake.b), delta=1e-12)
        for N, tol in ((20, 0.05), (64, 0.02), (128, 0.02), (997, 0.02)):
            fake = adversary.optimal_fake(N, 0)
            exact = adversary.expected_detection_over_T(N, fake.a, fake.b)
            self.assertLessEqual(abs(exact - (0.5 - 1 / (N + 3))), tol)
            approx = adversary.expected_detection_over_T_approx(N, fake.a, fake.b)
            self.assertLessEqual(abs(exact - approx), tol)

    def test_argmin_matches_optimal_a(self):
        for N in (50, 100, 200):
            self.assertLessEqual(abs(adversary.detection_argmin_over_a(N) - 2 / math.sqrt(N + 3)), 0.005 + 1e-9)

    def test_large_N_weights_do_not_overflow(self):
        fake = adversary.optimal_fake(5000, 0)
        value = adversary.expected_detection_over_T(5000, fake.a, fake.b)
        self.assertTrue(math.isfinite(value))
        self.assertLessEqual(abs(value - 0.5), 0.01)


class TestOptimalT(unittest.TestCase):
    def test_closed_form_matches_quadrature(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            N = int(rng.integers(2, 2001))
            t = int(rng.integers(1, N))
            self.assertAlmostEqual(adversary.expected_detection_over_alpha(N, t),
                                   adversary.expected_detection_over_alpha_quad(N, t), delta=1e-6)
        self.assertAlmostEqual(adversary.expected_detection_over_alpha(2, 1),
                               adversary.expected_detection_over_alpha_quad(2, 1), delta=1e-9)

    def test_range_checks(self):
        with self.assertRaises(AdversaryException):
            adversary.expected_detection_over_alpha(10, 0)
        with self.assertRaises(AdversaryException):
            adversary.expected_detection_over_alpha(10, 10)

    def test_optimal_t(self):
        self.assertAlmostEqual(adversary.optimal_t(101), math.sqrt(101 - 40 / math.pi), places=12)
        self.assertAlmostEqual(adversary.optimal_t(101), 9.395, delta=1e-3)
        self.assertAlmostEqual(adversary.optimal_t(2), math.sqrt(2 - 4 / math.pi), places=12)
        self.assertAlmostEqual(adversary.optimal_t(2), 0.8525, delta=1e-4)
        self.assertEqual(adversary.optimal_t_integer(2), 1)

    def test_argmax_over_integer_t(self):
        for N in (16, 101, 1024):
            best = max(range(1, N), key=lambda t: adversary.expected_detection_over_alpha(N, t))
            self.assertLessEqual(abs(best - round(adversary.optimal_t(N))), 1)
            self.assertEqual(adversary.optimal_t_integer(N), best)

    def test_p_maxi(self):
        self.assertAlmostEqual(adversary.p_maxi(101), 0.4237, delta=1e-4)
        for N in (16, 101, 1024):
            self.assertAlmostEqual(adversary.p_maxi(N),
                                   0.5 * adversary.expected_detection_over_alpha(N, adversary.optimal_t(N)),
                                   delta=1e-9)
        self.assertTrue(0.49 < adversary.p_maxi(10 ** 6) < 0.5)

    def test_p_maxi_against_quadrature_argmax(self):
        N = 101
        best = max(range(1, N), key=lambda t: adversary.expected_detection_over_alpha_quad(N, t))
        self.assertAlmostEqual(0.5 * adversary.expected_detection_over_alpha_quad(N, best),
                               adversary.p_maxi(N), delta=1e-3)


class TestRecoveryAndLeakage(unittest.TestCase):
    def test_recovery_probability(self):
        self.assertAlmostEqual(adversary.recovery_probability(4), 1 / 14 + 1 / 24, delta=1e-12)
        self.assertAlmostEqual(adversary.recovery_probability_enumerated(4), 1 / 14 + 1 / 24, delta=1e-12)
        self.assertEqual(adversary.recovery_probability(2), 1.0)
        self.assertLess(adversary.recovery_probability(30), 1e-7)

    @pytest.mark.timeout(60)
    def test_enumeration_agrees_with_closed_form(self):
        for N in range(2, 13):
            self.assertAlmostEqual(adversary.recovery_probability_enumerated(N),
                                   adversary.recovery_probability(N), delta=1e-12)

    def test_recovery_probability_large_N(self):
        self.assertGreater(adversary.recovery_probability(1000), 0.0)
        with self.assertRaises(AdversaryException):
            adversary.recovery_probability_enumerated(13)

    def test_query_leakage(self):
        for N in (2, 3, 8, 33):
            for confirmed in (False, True):
                self.assertAlmostEqual(adversary.query_leakage_bits(N, confirmed),
                                       adversary.query_leakage_closed_form(N, confirmed), delta=1e-9)
        self.assertAlmostEqual(adversary.query_leakage_bits(2, True), 1.0, delta=1e-9)

    def test_leakage_close_to_half_log_N(self):
        leak = adversary.query_leakage_bits(256, True)
        self.assertAlmostEqual(leak, 8 - 0.5 * math.log2(255), delta=1e-9)
        self.assertAlmostEqual(leak, 4.0028, delta=1e-4)
        self.assertLessEqual(abs(leak - 4.0) / 4.0, 0.005)
        for N in (2, 5, 64):
            self.assertLessEqual(adversary.query_leakage_bits(N, True), math.log2(N) + 1e-12)


if __name__ == "__main__":
    unittest.main()
