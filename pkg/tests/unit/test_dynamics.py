import math
import unittest
from types import SimpleNamespace

import numpy as np

from ldpnet.domain.circle import ConstantKernel
from ldpnet.domain.dynamics import InitialCondition, euler_order, path_empirical, simulate
from ldpnet.domain.fields import lift_bound, make_fields, make_lift
from ldpnet.domain.graph import GraphSample, sample_graph
from ldpnet.errors import BlowUpError, ContractViolationError


def _complete(n):
	size = 2 * n + 1
	return GraphSample(n, 1.0, 0, "constant", tuple(np.arange(size) for _ in range(size)))


class TestFields(unittest.TestCase):
	def test_unknown_names_are_rejected(self):
		with self.assertRaises(KeyError):
			make_fields(1, {"name": "cubic"}, {"name": "zero"})
		with self.assertRaises(KeyError):
			make_fields(1, {"name": "zero"}, {"name": "kuramoto"})
		with self.assertRaises(KeyError):
			make_lift(1, {"name": "spiral"})

	def test_declared_bounds_hold_on_random_cloud(self):
		cloud = np.random.default_rng(0).normal(scale=5.0, size=(500, 3))
		for drift in ("zero", "constant", "tanh"):
			for coupling in ("zero", "sine", "tanh"):
				fields = make_fields(3, {"name": drift, "params": {}}, {"name": coupling})
				self.assertTrue(fields.check_bounds(cloud), fields.name)

	def test_harmonic_lift_components(self):
		lift = make_lift(2, {"name": "harmonic", "params": {"amplitude": 2.0, "offset": 0.5}})
		values = lift(np.array([0.0, math.pi / 2]))
		self.assertEqual(values.shape, (2, 2))
		self.assertAlmostEqual(values[0, 0], 2.5)
		self.assertAlmostEqual(values[0, 1], 0.5 + 2.0 * math.cos(1.0))
		self.assertAlmostEqual(values[1, 1], 0.5 + 2.0 * math.cos(math.pi + 1.0))

	def test_lift_bound_covers_every_position(self):
		lift = make_lift(1, {"name": "angle"})
		self.assertAlmostEqual(lift_bound(lift), math.pi)
		self.assertEqual(InitialCondition.from_lift(lift, 3000).bound, lift_bound(lift))


class TestInitialCondition(unittest.TestCase):
	def test_bound_is_enforced(self):
		with self.assertRaises(ValueError):
			InitialCondition(np.array([[2.0, 0.0]]), 1.0)

	def test_default_bound_accepts_harmonic_lift_for_every_size(self):
		for dimension in (2, 3):
			lift = make_lift(dimension, {"name": "harmonic"})
			for n in range(1, 400):
				init = InitialCondition.from_lift(lift, n)
				self.assertGreaterEqual(init.bound, float(np.linalg.norm(init.states, axis=1).max()), (dimension, n))

	def test_explicit_bound_below_states_is_rejected(self):
		with self.assertRaisesRegex(ValueError, "exceeds bound"):
			InitialCondition.from_lift(make_lift(1, {"name": "angle"}), 5, bound=1.0)

	def test_distinct_states(self):
		self.assertFalse(InitialCondition(np.array([[1.0], [1.0], [0.0]]), 1.0).has_distinct_states())
		self.assertTrue(InitialCondition(np.array([[1.0], [0.5], [0.0]]), 1.0).has_distinct_states())


class TestSimulate(unittest.TestCase):
	def test_single_node_constant_drift_is_exact(self):
		g = _complete(0)
		fields = make_fields(2, {"name": "constant", "params": {"omega": [1.0, -0.5]}}, {"name": "sine"})
		init = InitialCondition(np.array([[0.25, 0.0]]), 1.0)
		bundle = simulate(g, init, fields, 2.0, 10)
		np.testing.assert_allclose(bundle.terminal()[0], [2.25, -1.0], atol=1e-12)
		self.assertEqual(bundle.scheme, "euler-10")
		self.assertEqual(bundle.steps, 10)

	def test_consensus_decay_matches_closed_form(self):
		g = _complete(1)
		fields = make_fields(1, {"name": "zero"}, {"name": "linear", "params": {"source_weight": 1.0, "target_weight": -1.0, "radius": 4.0}})
		init = InitialCondition(np.array([[-1.0], [0.0], [2.5]]), 4.0)
		bundle = simulate(g, init, fields, 1.0, 400, "rk4")
		mean = init.states.mean()
		expected = mean + (init.states[:, 0] - mean) * math.exp(-1.0)
		np.testing.assert_allclose(bundle.terminal()[:, 0], expected, atol=1e-10)

	def test_permuting_labels_permutes_trajectories(self):
		g = sample_graph(ConstantKernel(1.0), 10, 0.4, seed=2)
		init = InitialCondition.from_lift(make_lift(2, {"name": "circle"}), 10)
		fields = make_fields(2, {"name": "tanh"}, {"name": "sine", "params": {"strength": 2.0}})
		perm = np.random.default_rng(1).permutation(g.size)
		base = simulate(g, init, fields, 1.0, 20)
		moved = simulate(g.permuted(perm), init.permuted(perm), fields, 1.0, 20)
		np.testing.assert_allclose(moved.states[:, perm, :], base.states, atol=1e-12)

	def test_disconnected_vertex_is_rejected(self):
		g = SimpleNamespace(size=1, degrees=np.array([0]), neighbors=(np.empty(0, dtype=np.int64),))
		fields = make_fields(1, {"name": "zero"}, {"name": "zero"})
		with self.assertRaisesRegex(ValueError, "disconnected vertex"):
			simulate(g, InitialCondition(np.array([[0.0]]), 1.0), fields, 1.0, 4)

	def test_blow_up_is_reported(self):
		fields = make_fields(1, {"name": "linear", "params": {"rate": -1e200}}, {"name": "zero"})
		with np.errstate(over="ignore", invalid="ignore"):
			with self.assertRaisesRegex(BlowUpError, "blow-up at step 2"):
				simulate(_complete(0), InitialCondition(np.array([[1.0]]), 1.0), fields, 1.0, 4)

	def test_a_priori_bound_violation_is_reported(self):
		fields = make_fields(1, {"name": "linear", "params": {"rate": -1.0, "radius": 0.1}}, {"name": "zero"})
		with self.assertRaisesRegex(ContractViolationError, "a priori bound"):
			simulate(_complete(0), InitialCondition(np.array([[1.0]]), 1.0), fields, 1.0, 10)

	def test_record_stride_and_csv_rows(self):
		g = _complete(1)
		fields = make_fields(1, {"name": "zero"}, {"name": "sine"})
		init = InitialCondition(np.array([[-1.0], [0.0], [1.0]]), 1.0)
		bundle = simulate(g, init, fields, 1.0, 8, record_stride=4)
		self.assertEqual(bundle.times.tolist(), [0.0, 0.5, 1.0])
		self.assertEqual(bundle.csv_headers(), ["node", "step", "time", "x0"])
		rows = bundle.csv_rows(thinning=2)
		self.assertEqual(len(rows), 6)
		self.assertEqual(rows[0][:3], [-1, 0, "0.0"])
		with self.assertRaises(ValueError):
			simulate(g, init, fields, 1.0, 8, record_stride=3)

	def test_path_empirical_is_uniform(self):
		bundle = simulate(_complete(1), InitialCondition(np.array([[-1.0], [0.0], [1.0]]), 1.0), make_fields(1, {"name": "zero"}, {"name": "zero"}), 1.0, 2)
		measure = path_empirical(bundle)
		self.assertEqual(measure.paths.shape, (3, 3, 1))
		self.assertAlmostEqual(measure.total, 1.0)


class TestEulerOrder(unittest.TestCase):
	def test_errors_halve_with_step_count(self):
		g = sample_graph(ConstantKernel(1.0), 15, 0.3, seed=4)
		init = InitialCondition.from_lift(make_lift(2, {"name": "circle"}), 15)
		fields = make_fields(2, {"name": "tanh", "params": {"rate": 0.5}}, {"name": "sine"})
		result = euler_order(g, init, fields, 1.0, [8, 16, 32, 64])
		for ratio in result.ratios:
			self.assertGreater(ratio, 1.7)
			self.assertLess(ratio, 2.3)
		self.assertAlmostEqual(result.slope, -1.0, delta=0.15)

	def test_coarser_rk4_oracle_gives_the_same_errors(self):
		g = sample_graph(ConstantKernel(1.0), 15, 0.3, seed=4)
		init = InitialCondition.from_lift(make_lift(2, {"name": "circle"}), 15)
		fields = make_fields(2, {"name": "tanh", "params": {"rate": 0.5}}, {"name": "sine"})
		fine = euler_order(g, init, fields, 1.0, [8, 16, 32, 64])
		coarse = euler_order(g, init, fields, 1.0, [8, 16, 32, 64], refinement=32)
		np.testing.assert_allclose(coarse.errors, fine.errors, rtol=1e-6)

	def test_ladder_must_divide_largest(self):
		g = _complete(0)
		fields = make_fields(1, {"name": "zero"}, {"name": "zero"})
		with self.assertRaises(ValueError):
			euler_order(g, InitialCondition(np.array([[0.0]]), 1.0), fields, 1.0, [3, 8])
