import math
import unittest

import numpy as np
from scipy.stats import binom

from ldpnet.domain.circle import ConstantKernel, CosineKernel, PiecewiseKernel
from ldpnet.domain.graph import SparsitySchedule
from ldpnet.domain.ldp import (
	ARC_OCCUPANCY,
	EventSpec,
	arc_count_law,
	brute_force_row_law,
	chernoff_bound,
	exact_event_prob,
	exact_upper_tail,
	ldp_scan,
	mc_event_prob,
	optimal_chernoff,
	poisson_binomial,
	predicted_limit,
	target_label,
	wilson_interval,
)
from ldpnet.errors import CapExceededError

HALF_CIRCLES = [(-math.pi, 0.0), (0.0, math.pi)]


class TestPoissonBinomial(unittest.TestCase):
	def test_equal_probabilities_reduce_to_binomial(self):
		log_pmf = poisson_binomial(np.full(40, 0.3))
		np.testing.assert_allclose(np.exp(log_pmf), binom.pmf(np.arange(41), 40, 0.3), rtol=1e-12, atol=1e-300)

	def test_certain_and_impossible_entries_shift_support(self):
		log_pmf = poisson_binomial(np.array([1.0, 0.0, 0.5]))
		self.assertEqual(log_pmf[0], -np.inf)
		np.testing.assert_allclose(np.exp(log_pmf[1:]), [0.5, 0.5])

	def test_truncation_keeps_the_prefix(self):
		probs = np.random.default_rng(0).uniform(0.0, 0.2, 300)
		full = poisson_binomial(probs)
		np.testing.assert_allclose(poisson_binomial(probs, 5), full[:6], rtol=1e-12)

	def test_deep_tails_stay_finite(self):
		log_pmf = poisson_binomial(np.full(20_000, 0.01), 0)
		self.assertAlmostEqual(log_pmf[0], 20_000 * math.log(0.99), delta=1e-8)


class TestRowLaws(unittest.TestCase):
	def test_dp_matches_brute_force_enumeration(self):
		kernel = PiecewiseKernel([-math.pi / 2, math.pi / 2], [[2.0, 1.0], [0.5, 3.0]])
		for n in (1, 3, 5):
			for j in (-n, 0, n):
				exact = arc_count_law(kernel, n, 0.3, j, HALF_CIRCLES)
				brute = brute_force_row_law(kernel, n, 0.3, j, HALF_CIRCLES)
				for a, b in zip(exact, brute):
					np.testing.assert_allclose(a, b, atol=1e-14)

	def test_arcs_must_partition(self):
		with self.assertRaisesRegex(ValueError, "partition"):
			arc_count_law(ConstantKernel(1.0), 3, 0.5, 0, [(-1.0, 1.0)])

	def test_brute_force_is_capped(self):
		with self.assertRaises(CapExceededError):
			brute_force_row_law(ConstantKernel(1.0), 7, 0.5, 0, HALF_CIRCLES)

	def test_target_label(self):
		self.assertEqual(target_label(10, 0.0), 0)
		self.assertEqual(target_label(10, 3.0), 10)


class TestEventProbabilities(unittest.TestCase):
	def test_self_loop_only_event(self):
		spec = EventSpec(max_count=1)
		result = exact_event_prob(spec, ConstantKernel(1.0), 50, 0.1)
		self.assertAlmostEqual(result.logp, 100 * math.log(0.9), delta=1e-10)

	def test_certain_event(self):
		self.assertEqual(exact_event_prob(EventSpec(max_count=500), ConstantKernel(1.0), 50, 0.1).logp, 0.0)

	def test_zero_kernel_with_zero_threshold_is_empty(self):
		spec = EventSpec(kind=ARC_OCCUPANCY, arcs=((1.0, 2.0),), thresholds=(0.5,))
		self.assertEqual(exact_event_prob(spec, ConstantKernel(0.0, degenerate=True), 5, 0.5).logp, -math.inf)

	def test_arc_event_matches_monte_carlo(self):
		spec = EventSpec(kind=ARC_OCCUPANCY, arcs=((-math.pi / 2, math.pi / 2),), thresholds=(0.7,))
		kernel = CosineKernel(2.0, 1.0)
		exact = exact_event_prob(spec, kernel, 20, 0.2).probability
		estimate = mc_event_prob(spec, kernel, 20, 0.2, 200_000, seed=1)
		self.assertLess(abs(estimate.estimate - exact), 5 * math.sqrt(exact * (1 - exact) / 200_000) + 1e-12)

	def test_enumeration_cap(self):
		spec = EventSpec(kind=ARC_OCCUPANCY, arcs=((-3.0, -1.0), (-1.0, 1.0), (1.0, 3.0)), thresholds=(0.2, 0.2, 0.2))
		with self.assertRaisesRegex(CapExceededError, "enumeration cap"):
			exact_event_prob(spec, ConstantKernel(1.0), 150, 0.5)

	def test_spec_validation(self):
		with self.assertRaises(ValueError):
			EventSpec(mass=1.0, max_count=2)
		with self.assertRaisesRegex(ValueError, "infeasible thresholds"):
			EventSpec(kind=ARC_OCCUPANCY, arcs=((0.0, 1.0), (1.0, 2.0)), thresholds=(0.5, 0.5))


class TestMonteCarlo(unittest.TestCase):
	def test_estimate_does_not_depend_on_threads(self):
		spec = EventSpec(mass=1.0)
		serial = mc_event_prob(spec, ConstantKernel(1.0), 30, 0.2, 35_000, seed=5)
		threaded = mc_event_prob(spec, ConstantKernel(1.0), 30, 0.2, 35_000, seed=5, threads=3)
		self.assertEqual(serial, threaded)

	def test_wilson_interval_contains_estimate(self):
		low, high = wilson_interval(30, 100)
		self.assertLess(low, 0.3)
		self.assertGreater(high, 0.3)
		self.assertAlmostEqual(wilson_interval(0, 10)[0], 0.0, places=12)

	def test_rejects_zero_trials(self):
		with self.assertRaises(ValueError):
			mc_event_prob(EventSpec(mass=1.0), ConstantKernel(1.0), 3, 0.5, 0, seed=0)


class TestChernoff(unittest.TestCase):
	def test_bound_dominates_exact_tail(self):
		kernel = CosineKernel(2.0, 1.0)
		for m_thr in (1.0, 1.5, 2.5):
			exact = exact_upper_tail(kernel, 200, 0.2, 0, m_thr)
			for a in (0.1, 0.5, 1.0, 2.0):
				self.assertGreaterEqual(chernoff_bound(kernel, 200, 0.2, 0, a, m_thr).bound, exact)
			best = optimal_chernoff(kernel, 200, 0.2, 0, m_thr)
			self.assertGreaterEqual(best.bound, exact)
			self.assertLessEqual(best.log_bound, chernoff_bound(kernel, 200, 0.2, 0, 0.5, m_thr).log_bound + 1e-9)

	def test_exponent_must_be_positive(self):
		with self.assertRaises(ValueError):
			chernoff_bound(ConstantKernel(1.0), 10, 0.1, 0, 0.0, 1.0)


class TestScan(unittest.TestCase):
	def test_self_loop_event_approaches_kernel_mass(self):
		spec = EventSpec(max_count=1)
		result = ldp_scan(spec, ConstantKernel(1.0), SparsitySchedule(1.0, 0.5), [100, 1000, 10_000])
		self.assertEqual([row.method for row in result.rows], ["exact"] * 3)
		self.assertAlmostEqual(result.rows[-1].normalized, -1.0, delta=0.01)
		self.assertTrue(result.gaps_decreasing())

	def test_mass_threshold_prediction(self):
		self.assertAlmostEqual(predicted_limit(EventSpec(mass=0.5), ConstantKernel(1.0)), -(0.5 * math.log(0.5) + 0.5))

	def test_grid_must_increase(self):
		with self.assertRaises(ValueError):
			ldp_scan(EventSpec(max_count=1), ConstantKernel(1.0), SparsitySchedule(1.0, 0.5), [100, 50])

	def test_auto_mode_falls_back_to_monte_carlo(self):
		spec = EventSpec(mass=1.0)
		result = ldp_scan(spec, ConstantKernel(1.0), SparsitySchedule(1.0, 0.5), [25_000], mode="auto", trials=200)
		self.assertEqual(result.rows[0].method, "mc")
