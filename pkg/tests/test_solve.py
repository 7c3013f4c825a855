import numpy as np
from django.test import SimpleTestCase

from gapcert.configuration import config
from gapcert.examples import load_bundled, reference_process
from gapcert.exceptions import LayerError, ParameterError
from gapcert.model import check_feasibility
from gapcert.solve import _AugmentedLagrangian, multistart, solve_nlp, transcribe


class TranscriptionTest(SimpleTestCase):
    def setUp(self):
        self.spec = load_bundled('lq')

    def test_layout(self):
        trans = transcribe(self.spec, 'relaxed', 10)
        self.assertEqual(2, trans.R)
        self.assertEqual(10 * 2 + 10 + 1, trans.dim)
        self.assertEqual(10 * 2 + 10 + 2, trans.n_constraints)

        strict = transcribe(self.spec, 'strict', 10, w0_floor=0.2, free_time=False)
        self.assertEqual(10, strict.dim)
        self.assertAlmostEqual(0.8, strict.radius)
        self.assertTrue(np.all(np.abs(strict.upper) <= 0.8))

    def test_options(self):
        with self.assertRaises(ParameterError):
            transcribe(self.spec, 'extended', 4)
        with self.assertRaises(ParameterError):
            transcribe(self.spec, 'strict', 10)
        with self.assertRaises(LayerError):
            transcribe(self.spec, 'extended', 10, w0_floor=0.1)
        with self.assertRaises(LayerError):
            transcribe(self.spec, 'impulsive', 10)

    def test_pack(self):
        ref = reference_process('lq', self.spec, nodes=20)
        trans = transcribe(self.spec, 'extended', 20)
        proc = trans.to_process(trans.pack(ref))
        np.testing.assert_allclose(ref.states, proc.states, atol=1e-12)
        self.assertAlmostEqual(0.0, trans.process_objective(proc), places=12)

    def test_evaluate_batch(self):
        trans = transcribe(self.spec, 'extended', 10)
        Z = np.vstack([trans.initial_guess(), trans.initial_guess(np.random.default_rng(1))])
        f, g, states = trans.evaluate(Z)
        self.assertEqual((2,), f.shape)
        self.assertEqual((2, trans.n_constraints), g.shape)
        self.assertEqual((2, 11, 3), states.shape)
        # w = 0 everywhere: t runs to S = 2 past the target t = 1
        self.assertAlmostEqual(1.0, g[0, trans.groups['target']].max())

    def test_strict_floor(self):
        trans = transcribe(self.spec, 'strict', 10, w0_floor=0.3)
        proc = trans.to_process(trans.upper)
        self.assertEqual('strict', proc.layer)
        self.assertTrue(np.all(proc.w0 >= 0.3 - 1e-12))


class SolveTest(SimpleTestCase):
    def setUp(self):
        self.spec = load_bundled('lq')

    def test_warm_start(self):
        trans = transcribe(self.spec, 'extended', 16)
        report = solve_nlp(trans, reference_process('lq', self.spec, nodes=16))
        self.assertTrue(report.feasible)
        self.assertLessEqual(report.objective, 1e-6)
        self.assertAlmostEqual(report.objective, trans.process_objective(report.process), places=10)

    def test_cold_start(self):
        trans = transcribe(self.spec, 'extended', 16)
        report = solve_nlp(trans)
        self.assertIn(report.status, ('converged', 'stalled', 'infeasible'))
        self.assertGreater(report.evaluations, 0)
        self.assertEqual(report.iterations, len(report.history))
        self.assertEqual(report.objective, trans.process_objective(report.process))

    def test_multistart_deterministic(self):
        trans = transcribe(self.spec, 'extended', 12)
        first = multistart(trans, seeds=3, rng_seed=5, threads_count=2)
        second = multistart(trans, seeds=3, rng_seed=5, threads_count=1)
        self.assertEqual(first.start, second.start)
        self.assertEqual(first.objective, second.objective)
        np.testing.assert_array_equal(first.process.states, second.process.states)

    def test_multistart_seeds(self):
        with self.assertRaises(ParameterError):
            multistart(transcribe(self.spec, 'extended', 10), seeds=0)

    def test_layer_order(self):
        ref = reference_process('lq', self.spec, nodes=16)
        extended = solve_nlp(transcribe(self.spec, 'extended', 16), ref)
        strict = solve_nlp(transcribe(self.spec, 'strict', 16, w0_floor=0.2), ref)
        self.assertTrue(strict.feasible)
        self.assertTrue(np.all(strict.process.w0 >= 0.2))
        self.assertLessEqual(extended.objective, strict.objective + 1e-4)


class AugmentedLagrangianTest(SimpleTestCase):
    def setUp(self):
        self.spec = load_bundled('lq')

    def test_gradient(self):
        trans = transcribe(self.spec, 'extended', 10)
        rng = np.random.default_rng(4)
        z = trans.initial_guess(rng)
        y = rng.uniform(0.0, 1.0, trans.n_constraints)
        function = _AugmentedLagrangian(trans, config.FD_STEP).function(y, 10.0)

        _, grad = function(z)
        central = np.zeros_like(z)
        for i in range(len(z)):
            step = np.zeros_like(z)
            step[i] = 1e-5
            central[i] = (function(z + step)[0] - function(z - step)[0]) / 2e-5
        np.testing.assert_allclose(central, grad, rtol=1e-3, atol=1e-3)

    def test_penalty_nondecreasing(self):
        report = solve_nlp(transcribe(self.spec, 'extended', 16))
        self.assertEqual(report.iterations, len(report.penalties))
        self.assertEqual(config.INITIAL_PENALTY, report.penalties[0])
        self.assertTrue(np.all(np.diff(report.penalties) >= 0))
        self.assertLessEqual(max(report.penalties), config.MAX_PENALTY)

    def test_violation_of_returned_process(self):
        trans = transcribe(self.spec, 'extended', 16)
        for report in (solve_nlp(trans, max_outer=1), solve_nlp(trans, reference_process('lq', self.spec, 16))):
            record = check_feasibility(self.spec, report.process)
            expected = max(record.max_constraint_violation, record.target_distance, record.budget_excess)
            self.assertEqual(expected, report.violation)

        unconstrained = transcribe(self.spec, 'extended', 16, constraints=())
        self.assertEqual(0.0, solve_nlp(unconstrained, max_outer=1).violation)


class Ex51SolveTest(SimpleTestCase):
    def setUp(self):
        self.spec = load_bundled('ex51')
        self.ref = reference_process('ex51', self.spec)

    def test_extended_optimum(self):
        for nodes in (40, 80):
            report = multistart(transcribe(self.spec, 'extended', nodes), seeds=8, init=self.ref)
            self.assertTrue(report.feasible, nodes)
            self.assertLessEqual(abs(report.objective), 5e-3, nodes)

    def test_refinement(self):
        coarse = solve_nlp(transcribe(self.spec, 'extended', 40), self.ref)
        fine = solve_nlp(transcribe(self.spec, 'extended', 80), coarse.process)
        self.assertTrue(fine.feasible)
        self.assertLessEqual(fine.objective, coarse.objective + 1e-3)
