import numpy as np
from django.test import SimpleTestCase

from gapcert.embed import embed_original, invert_embedding, rescale_free_time, simulate_original, time_grid
from gapcert.examples import load_bundled, reference_process
from gapcert.exceptions import ImpulsiveArcError, ParameterError, RangeError
from gapcert.integrator import dynamics_residual
from gapcert.model import check_feasibility, load_problem


def rotation_problem(d: int = 1):
    """
    Smooth unconstrained problem with n = 2, m = 2: x' = A x + g1 u1 + g2 u2, cost |x|^2
    """
    g = [{'j': [1], 'field': {'kind': 'const', 'value': [1.0, 0.0]}},
         {'j': [2], 'field': {'kind': 'affine', 'matrix': [[0.0, 0.0], [0.5, 0.0]], 'offset': [0.0, 1.0]}}]
    if d == 2:
        g.append({'j': [1, 2], 'field': {'kind': 'const', 'value': [0.0, 0.3]}})
    return load_problem({
        'dynamics': {'n': 2, 'm': 2, 'd': d, 'drift': {'kind': 'affine', 'matrix': [[0.0, 1.0], [-1.0, 0.0]]},
                     'g': g},
        'cost': {'psi': {'kind': 'poly', 'terms': [{'coef': 1.0, 'powers': [2, 0]}, {'coef': 1.0, 'powers': [0, 2]}]}},
        'init': {'x0': [0.5, -0.5], 'horizon': 2.0},
    })


class EmbedTest(SimpleTestCase):
    def test_unit_control(self):
        spec = load_bundled('lq')
        orig = simulate_original(spec, np.linspace(0.0, 1.0, 11), np.ones((10, 1)))
        self.assertAlmostEqual(2.0, orig.x[-1, 0])
        np.testing.assert_allclose(orig.grid, orig.v, atol=1e-12)

        proc = embed_original(spec, orig)
        self.assertEqual('strict', proc.layer)
        self.assertAlmostEqual(2.0, proc.S)
        np.testing.assert_allclose(0.5, proc.w0[:, 0])
        np.testing.assert_allclose(0.5, proc.w[:, 0, 0])

        back = invert_embedding(spec, proc)
        self.assertAlmostEqual(1.0, back.T, places=6)
        np.testing.assert_allclose(1.0, back.u[:, 0], atol=1e-6)

    def test_round_trip(self):
        rng = np.random.default_rng(7)
        for trial in range(100):
            d = 1 + trial % 2
            spec = rotation_problem(d)
            M = 20
            grid = np.linspace(0.0, 1.0, M + 1)
            u = rng.uniform(-1.0, 1.0, size=(M, 2))
            orig = simulate_original(spec, grid, u)

            proc = embed_original(spec, orig)
            back = invert_embedding(spec, proc)
            mesh = float(np.max(np.diff(proc.grid)))
            recovered = np.column_stack([np.interp(grid, back.grid, back.x[:, i]) for i in range(2)])
            self.assertLessEqual(np.max(np.abs(recovered - orig.x)), 5 * mesh)
            self.assertAlmostEqual(1.0, back.T, places=12)

            cost_orig = float(spec.cost.value(orig.T, orig.x[-1], orig.v[-1]))
            cost_proc = float(spec.cost.value(proc.y0[-1], proc.y[-1], proc.nu[-1]))
            self.assertAlmostEqual(cost_orig, cost_proc, places=12)

    def test_switching_control(self):
        spec = load_bundled('lq')
        u = np.where(np.arange(10) < 5, 1.0, -1.0)[:, None]
        orig = simulate_original(spec, np.linspace(0.0, 1.0, 11), u)

        proc = embed_original(spec, orig, nodes=25)
        self.assertEqual(30, proc.N)
        self.assertEqual(0.0, dynamics_residual(spec, proc))
        self.assertAlmostEqual(0.0, float(np.min(np.abs(proc.grid - 1.0))), places=12)
        np.testing.assert_allclose([1.0, orig.x[-1, 0], orig.v[-1]], proc.endpoint, atol=1e-12)

        states = proc.states.copy()
        states[5:, 1] += 1e-3
        shifted = type(proc)(proc.layer, proc.grid, proc.w0, proc.w, proc.a_index, proc.weights, states)
        self.assertAlmostEqual(1e-3, dynamics_residual(spec, shifted), places=12)

    def test_refined(self):
        spec = rotation_problem()
        rng = np.random.default_rng(11)
        grid = np.linspace(0.0, 1.0, 21)
        orig = simulate_original(spec, grid, rng.uniform(-1.0, 1.0, size=(20, 2)))

        proc = embed_original(spec, orig, nodes=60)
        self.assertGreaterEqual(proc.N, 60)
        self.assertEqual(0.0, dynamics_residual(spec, proc))

        back = invert_embedding(spec, proc)
        self.assertAlmostEqual(1.0, back.T, places=12)
        recovered = np.column_stack([np.interp(grid, back.grid, back.x[:, i]) for i in range(2)])
        np.testing.assert_allclose(orig.x, recovered, atol=1e-5)

    def test_impulsive_arc(self):
        spec = load_bundled('ex51')
        with self.assertRaises(ImpulsiveArcError) as ctx:
            invert_embedding(spec, reference_process('ex51', spec, nodes=20))
        self.assertListEqual(list(range(10, 20)), ctx.exception.intervals)
        self.assertIn('10-19', str(ctx.exception))

    def test_feasibility_transport(self):
        spec = load_bundled('lq')
        orig = simulate_original(spec, np.linspace(0.0, 1.0, 11), -np.ones((10, 1)))
        record = check_feasibility(spec, embed_original(spec, orig))
        self.assertTrue(record.feasible)


class RescaleTest(SimpleTestCase):
    def test_rescale(self):
        spec = load_bundled('lq')
        proc = reference_process('lq', spec, nodes=10)
        stretched = type(proc)(proc.layer, np.linspace(0.0, 2.2, 11), proc.w0, proc.w, proc.a_index,
                               proc.weights, proc.states)
        image = rescale_free_time(2.0, stretched)
        self.assertAlmostEqual(0.1, float(image.zeta[0]))
        self.assertEqual(2.0, image.grid[-1])
        np.testing.assert_allclose(stretched.grid, image.y_star)
        self.assertAlmostEqual(2.2, image.end_time)
        np.testing.assert_array_equal(stretched.endpoint, image.endpoint)
        self.assertEqual(stretched.y0[-1], image.endpoint[0])

    def test_range(self):
        proc = reference_process('lq', nodes=10)
        with self.assertRaises(RangeError):
            rescale_free_time(1.0, proc)
        with self.assertRaises(ParameterError):
            rescale_free_time(2.0, proc, delta=0.75)

    def test_time_grid(self):
        grids = time_grid(2.0, np.array([0.0, 0.5]), 4)
        np.testing.assert_allclose([[0.0, 0.5, 1.0, 1.5, 2.0], [0.0, 0.75, 1.5, 2.25, 3.0]], grids)
