import numpy as np
from django.test import SimpleTestCase

from gapcert.examples import ex51_trajectory, load_bundled, reference_process
from gapcert.exceptions import DegenerateSampleError, LayerError, ParameterError, SampleError
from gapcert.integrator import integrate
from gapcert.model import SpaceTimeControlSample as Sample
from gapcert.relax import SimplexControlRow, chatter, chatter_error, inner_approximate, integrate_relaxed, \
    schedule_chatter


def averaging_process(spec, intervals=4):
    """
    x' = w mixing w = +1 and w = -1 with equal weights: the relaxed trajectory stays at x0
    """
    row = SimplexControlRow([Sample(0.0, np.array([1.0])), Sample(0.0, np.array([-1.0]))], [0.5, 0.5])
    return integrate_relaxed(spec, [row] * intervals, np.linspace(0.0, 2.0, intervals + 1))


class IntegrateRelaxedTest(SimpleTestCase):
    def test_averaging(self):
        spec = load_bundled('lq')
        relaxed = averaging_process(spec)
        self.assertEqual('relaxed', relaxed.layer)
        np.testing.assert_allclose(1.0, relaxed.y[:, 0], atol=1e-12)
        np.testing.assert_allclose(0.0, relaxed.y0, atol=1e-12)
        np.testing.assert_allclose(relaxed.grid, relaxed.nu, atol=1e-12)

    def test_xi(self):
        relaxed = averaging_process(load_bundled('lq'))
        self.assertAlmostEqual(relaxed.S, float(relaxed.xi[-1].sum()), places=12)
        np.testing.assert_allclose([1.0, 1.0], relaxed.xi[-1], atol=1e-12)

    def test_vertex_collapse(self):
        spec = load_bundled('ex51')
        ref = reference_process('ex51', spec, nodes=40)
        other = Sample(0.0, np.array([0.0, 1.0]))
        rows = [SimplexControlRow([ref.sample(k), other, other, other], [1.0, 0.0, 0.0, 0.0]) for k in range(ref.N)]
        relaxed = integrate_relaxed(spec, rows, ref.grid)
        self.assertLessEqual(np.max(np.abs(relaxed.states - ref.states)), 1e-12)
        self.assertLessEqual(np.max(np.abs(relaxed.states - ex51_trajectory(ref.grid))), 1e-8)

    def test_invalid_rows(self):
        spec = load_bundled('lq')
        grid = np.linspace(0.0, 1.0, 3)
        row = SimplexControlRow([Sample(1.0, np.array([0.0]))], [1.0])
        with self.assertRaises(ParameterError):
            integrate_relaxed(spec, [row], grid)
        bad_weights = SimplexControlRow([Sample(1.0, np.array([0.0])), Sample(0.0, np.array([1.0]))], [0.7, 0.7])
        with self.assertRaises(ParameterError):
            integrate_relaxed(spec, [bad_weights] * 2, grid)
        off_sphere = SimplexControlRow([Sample(0.5, np.array([0.2]))], [1.0])
        with self.assertRaises(SampleError):
            integrate_relaxed(spec, [off_sphere] * 2, grid)


class ChatterTest(SimpleTestCase):
    def setUp(self):
        self.spec = load_bundled('lq')
        self.relaxed = averaging_process(self.spec)

    def test_averaging_bound(self):
        chattered = chatter(self.spec, self.relaxed, 0.1)
        self.assertEqual('extended', chattered.layer)
        self.assertLessEqual(np.max(np.abs(chattered.y[:, 0] - 1.0)), 0.05 + 1e-12)
        self.assertAlmostEqual(0.05, chatter_error(self.spec, self.relaxed, chattered), places=12)

    def test_halving(self):
        coarse = chatter_error(self.spec, self.relaxed, chatter(self.spec, self.relaxed, 0.1))
        fine = chatter_error(self.spec, self.relaxed, chatter(self.spec, self.relaxed, 0.05))
        self.assertGreaterEqual(coarse / fine, 1.6)
        self.assertLessEqual(coarse / fine, 2.5)

    def test_halving_random(self):
        spec = load_bundled('ex51')
        rng = np.random.default_rng(3)
        for _ in range(20):
            rows = []
            for _ in range(40):
                samples = []
                for _ in range(4):
                    w0 = rng.uniform(0.0, 1.0)
                    angle = rng.uniform(0.0, 2 * np.pi)
                    samples.append(Sample(w0, (1.0 - w0) * np.array([np.cos(angle), np.sin(angle)])))
                rows.append(SimplexControlRow(samples, rng.dirichlet(np.ones(4))))
            relaxed = integrate_relaxed(spec, rows, np.linspace(0.0, 1.0, 41))
            coarse = chatter_error(spec, relaxed, chatter(spec, relaxed, 0.025))
            fine = chatter_error(spec, relaxed, chatter(spec, relaxed, 0.0125))
            self.assertGreaterEqual(coarse / fine, 1.6)
            self.assertLessEqual(coarse / fine, 2.5)

    def test_refinement_on_coarse_grid(self):
        spec = load_bundled('ex51')
        rng = np.random.default_rng(5)
        rows = []
        for _ in range(4):
            samples = []
            for _ in range(3):
                w0 = rng.uniform(0.2, 1.0)
                angle = rng.uniform(0.0, 2 * np.pi)
                samples.append(Sample(w0, (1.0 - w0) * np.array([np.cos(angle), np.sin(angle)])))
            rows.append(SimplexControlRow(samples, rng.dirichlet(np.ones(3))))
        relaxed = integrate_relaxed(spec, rows, np.linspace(0.0, 1.0, 5))

        errors = [chatter_error(spec, relaxed, chatter(spec, relaxed, eta)) for eta in (0.2, 0.1, 0.05, 0.025)]
        self.assertTrue(all(fine <= coarse for coarse, fine in zip(errors, errors[1:])), errors)
        self.assertLessEqual(errors[-1], errors[0] / 3)

    def test_vertex_weights_unchanged(self):
        spec = load_bundled('ex51')
        ref = reference_process('ex51', spec, nodes=20)
        rows = [SimplexControlRow([ref.sample(k)], [1.0]) for k in range(ref.N)]
        relaxed = integrate_relaxed(spec, rows, ref.grid)
        chattered = chatter(spec, relaxed, 0.3)
        np.testing.assert_allclose(ref.grid, chattered.grid)
        self.assertLessEqual(np.max(np.abs(chattered.states - ref.states)), 1e-12)

    def test_schedule(self):
        schedule = schedule_chatter(self.relaxed, 0.25)
        # 4 intervals of width 0.5, 2 slices each, 2 rows per slice
        self.assertEqual(17, len(schedule.edges))
        self.assertListEqual([0, 1] * 8, schedule.row.tolist())

    def test_bad_eta(self):
        with self.assertRaises(ParameterError):
            chatter(self.spec, self.relaxed, 0.6)
        with self.assertRaises(LayerError):
            chatter(self.spec, reference_process('lq', self.spec, nodes=10), 0.1)


class InnerApproximationTest(SimpleTestCase):
    def test_shrinks(self):
        spec = load_bundled('ex51')
        ref = reference_process('ex51', spec, nodes=40)
        errors = [inner_approximate(spec, ref, floor).sup_error for floor in (0.2, 0.1, 0.05)]
        self.assertTrue(errors[0] > errors[1] > errors[2] > 0)
        self.assertEqual('strict', inner_approximate(spec, ref, 0.05).process.layer)

    def test_errors(self):
        spec = load_bundled('ex51')
        ref = reference_process('ex51', spec, nodes=10)
        with self.assertRaises(ParameterError):
            inner_approximate(spec, ref, 1.0)

        grid = np.linspace(0.0, 1.0, 3)
        still = integrate(spec, 'extended', grid, np.array([1.0, 0.0]), np.zeros((2, 2)), np.zeros(2, dtype=int))
        with self.assertRaises(DegenerateSampleError):
            inner_approximate(spec, still, 0.1)
