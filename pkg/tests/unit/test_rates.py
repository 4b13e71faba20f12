import math
import unittest

import numpy as np
from scipy.special import i0

from ldpnet.domain.circle import CircleDensity, CircleGrid, ConstantKernel, CosineKernel, GridFunction, MassDensity, VonMisesKernel
from ldpnet.domain.fields import make_lift
from ldpnet.domain.rates import (
	NO_DENSITY,
	NoDensity,
	PopulationMeasure,
	arc_event_rate,
	arc_masses,
	kl_bernoulli,
	legendre_gap,
	lift_population,
	lmgf,
	mass_tail_rate,
	optimal_h,
	optimal_scale,
	rate_node,
	rate_plus,
	rate_population,
)

BINS = 1024


def _wavy(bins=BINS):
	theta = CircleGrid(bins).midpoints
	return CircleDensity.normalized(1.0 + 0.4 * np.cos(theta) + 0.2 * np.sin(3 * theta))


class TestRateNode(unittest.TestCase):
	def test_minimizer_has_zero_rate(self):
		kernel = CosineKernel(3.0, 1.2)
		zeta = CircleDensity.normalized(kernel.row(0.7, CircleGrid(BINS)))
		self.assertAlmostEqual(rate_node(kernel, 0.7, zeta).value, 0.0, delta=1e-12)

	def test_rate_is_nonnegative_and_below_mass(self):
		kernel = VonMisesKernel(1.0, 1.0)
		value = rate_node(kernel, 0.0, _wavy())
		self.assertGreater(value.value, 0.0)
		self.assertLess(value.value, value.mass_term)
		self.assertAlmostEqual(value.mass_term, float(i0(1.0)), delta=1e-12)

	def test_no_density_tag_gives_kernel_mass(self):
		self.assertIs(NoDensity(), NO_DENSITY)
		value = rate_node(ConstantKernel(2.0), 0.0, NO_DENSITY)
		self.assertTrue(value.degenerate)
		self.assertAlmostEqual(value.value, 2.0)

	def test_unnormalized_density_is_rejected(self):
		with self.assertRaisesRegex(ValueError, "not normalized"):
			rate_node(ConstantKernel(1.0), 0.0, CircleDensity(np.full(8, 2.0)))

	def test_negative_bins_are_rejected(self):
		with self.assertRaises(ValueError):
			rate_node(ConstantKernel(1.0), 0.0, CircleDensity(np.array([2.0, -1.0, 1.0, 2.0])))

	def test_population_rate_mixes_atoms(self):
		kernel = ConstantKernel(1.5)
		pm = PopulationMeasure((0.0, 1.0), (CircleDensity.uniform(BINS), NO_DENSITY), np.array([0.25, 0.75]))
		self.assertAlmostEqual(rate_population(kernel, pm), 0.75 * 1.5, places=12)
		points, weights = lift_population(pm, make_lift(2, {"name": "circle"}))
		self.assertEqual(points.shape, (2, 2))
		self.assertEqual(weights.tolist(), [0.25, 0.75])


class TestScalarDuality(unittest.TestCase):
	def test_golden_section_agrees_with_closed_form(self):
		for alpha in (-2.0, 0.0, 1.3):
			kernel = CosineKernel(2.5, 1.0)
			result = optimal_scale(kernel, alpha, _wavy())
			self.assertAlmostEqual(result.numeric_a, result.a_star, delta=1e-6)
			self.assertAlmostEqual(result.value, rate_node(kernel, alpha, _wavy()).value, delta=1e-10)

	def test_vanishing_kernel_has_degenerate_scale(self):
		result = optimal_scale(ConstantKernel(0.0, degenerate=True), 0.0, CircleDensity.uniform(64))
		self.assertEqual((result.a_star, result.value, result.numeric_a), (0.0, 0.0, 0.0))
		self.assertEqual(rate_node(ConstantKernel(0.0, degenerate=True), 0.0, CircleDensity.uniform(64)).value, 0.0)


class TestLegendre(unittest.TestCase):
	def test_pairing_is_bounded_by_rate_with_equality_at_optimum(self):
		rng = np.random.default_rng(8)
		kernel = VonMisesKernel(2.0, 0.5)
		for _ in range(50):
			gamma = MassDensity(rng.exponential(1.0, 64) * (rng.random(64) > 0.2))
			h = GridFunction(rng.normal(0.0, 1.0, 64))
			upper = rate_plus(kernel, 0.4, gamma)
			self.assertLessEqual(legendre_gap(kernel, 0.4, gamma, h), upper + 1e-12)
			self.assertAlmostEqual(legendre_gap(kernel, 0.4, gamma, optimal_h(kernel, 0.4, gamma)), upper, delta=1e-10)

	def test_lmgf_of_cosine_is_bessel(self):
		h = GridFunction(np.cos(CircleGrid(BINS).midpoints))
		self.assertAlmostEqual(lmgf(ConstantKernel(1.0), 0.0, h), float(i0(1.0)) - 1.0, delta=1e-12)

	def test_lmgf_overflow_reports_maximum(self):
		with self.assertRaisesRegex(OverflowError, "lmgf overflow"):
			lmgf(ConstantKernel(1.0), 0.0, GridFunction(np.array([0.0, 800.0])))

	def test_mismatched_grids(self):
		with self.assertRaises(ValueError):
			legendre_gap(ConstantKernel(1.0), 0.0, MassDensity(np.ones(4)), GridFunction(np.ones(8)))


class TestMassTail(unittest.TestCase):
	def test_closed_form_pieces(self):
		kernel = ConstantKernel(2.0)
		self.assertAlmostEqual(mass_tail_rate(kernel, 0.0, 0.0), 2.0)
		self.assertAlmostEqual(mass_tail_rate(kernel, 0.0, 1.0), math.log(0.5) - 1.0 + 2.0)
		self.assertEqual(mass_tail_rate(kernel, 0.0, 3.0), 0.0)
		self.assertAlmostEqual(mass_tail_rate(kernel, 0.0, 1e-12), 2.0, places=9)
		with self.assertRaises(ValueError):
			mass_tail_rate(kernel, 0.0, -0.1)


class TestArcEventRate(unittest.TestCase):
	def test_constant_kernel_matches_closed_form(self):
		result = arc_event_rate(ConstantKernel(1.0), 0.0, [(-math.pi / 4, math.pi / 4)], [0.5], bins=256, starts=5)
		expected = 1.0 - math.exp(-kl_bernoulli(0.5, 0.25))
		self.assertAlmostEqual(result.closed_form, expected, places=12)
		self.assertAlmostEqual(result.value, expected, delta=1e-3)
		self.assertGreaterEqual(arc_masses(result.density, [(-math.pi / 4, math.pi / 4)])[0], 0.5 - 1e-6)

	def test_starts_agree_on_active_constraints(self):
		arcs = [(2.0, 3.0), (-3.0, -2.0)]
		result = arc_event_rate(CosineKernel(2.0, 1.0), 0.0, arcs, [0.3, 0.3], bins=128, starts=4)
		for mass in arc_masses(result.density, arcs):
			self.assertGreaterEqual(mass, 0.3 - 1e-9)
		self.assertLess(max(result.start_values) - min(result.start_values), 1e-8)
		self.assertGreater(result.value, 0.0)

	def test_slack_threshold_costs_nothing(self):
		result = arc_event_rate(ConstantKernel(1.0), 0.0, [(-math.pi / 2, math.pi / 2)], [0.2], bins=128, starts=3)
		self.assertAlmostEqual(result.value, 0.0, delta=1e-9)
		self.assertEqual(result.closed_form, 0.0)

	def test_infeasible_thresholds(self):
		with self.assertRaisesRegex(ValueError, "infeasible thresholds"):
			arc_event_rate(ConstantKernel(1.0), 0.0, [(0.0, 1.0), (1.0, 2.0)], [0.6, 0.5], bins=64)

	def test_overlapping_arcs(self):
		with self.assertRaisesRegex(ValueError, "disjoint"):
			arc_event_rate(ConstantKernel(1.0), 0.0, [(0.0, 1.5), (1.0, 2.0)], [0.1, 0.1], bins=64)
