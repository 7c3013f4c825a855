from unittest import mock

import numpy as np
from django.test import SimpleTestCase, override_settings

from gapcert.examples import EXTENDED_SCHEDULE, STRICT_SCHEDULE, ex51_strict_process, load_bundled, reference_process
from gapcert.exceptions import ParameterError
from gapcert.gap import IsolationProbe, Trend, build_report, gap_verdict, infimum_sweep, isolation_probe, layer_warnings
from gapcert.integrator import integrate
from gapcert.model import check_feasibility
from gapcert.pmp import CLASSIFICATIONS
from gapcert.utils import exec_multi_arg_func


def trend(layer, values):
    values = np.array(values, dtype=float)
    points = [{'nodes': 10 * (i + 1)} for i in range(len(values))]
    return Trend(layer, points, values, np.minimum.accumulate(values), ['converged'] * len(values))


def gapfix_violation(start, speed_floor, samples=2001):
    """
    Brute-force defect of the isolation fixture for processes that wait until t = start and then move x
    from 0 to 1 with w0 = speed_floor: largest h along the move plus the distance of (t, x)(S) to (1, 1)
    """
    lapse = speed_floor / (1.0 - speed_floor)
    x = np.linspace(0.0, 1.0, samples)
    t = start + lapse * x
    h = np.maximum(20.0 * x * (1.0 - t), 20.0 * (t - 1.0))
    return max(float(h.max()), 0.0) + abs(t[-1] - 1.0)


class GapVerdictTest(SimpleTestCase):
    def test_gap(self):
        verdict = gap_verdict(trend('strict', [0.5, 0.45, 0.4]), trend('extended', [0.0, 0.0]), spread=0.05)
        self.assertEqual('gap-evidence', verdict.verdict)
        self.assertAlmostEqual(0.4, verdict.differences['extended'])

    def test_no_gap(self):
        verdict = gap_verdict(trend('strict', [1.0, 1.0]), trend('extended', [1.0, 1.0]), solver_tol=0.0)
        self.assertEqual('no-gap-evidence', verdict.verdict)
        self.assertEqual(0.0, verdict.margin)

    def test_small_difference(self):
        verdict = gap_verdict(trend('strict', [0.3, 0.02]), trend('extended', [0.0, 0.0]), solver_tol=0.01)
        # the last strict step still moves by 0.28
        self.assertEqual('no-gap-evidence', verdict.verdict)

    def test_inconclusive(self):
        verdict = gap_verdict(trend('strict', [np.inf, np.inf]), trend('extended', [0.0]))
        self.assertEqual('inconclusive', verdict.verdict)

    def test_relaxed(self):
        verdict = gap_verdict(trend('strict', [1.0]), trend('extended', [1.0]), trend('relaxed', [0.2]),
                              solver_tol=0.01)
        self.assertEqual('gap-evidence', verdict.verdict)
        self.assertSetEqual({'extended', 'relaxed'}, set(verdict.differences))

    def test_layer_warnings(self):
        warnings = layer_warnings(trend('strict', [0.0]), trend('extended', [0.5]), tol=0.01)
        self.assertEqual(1, len(warnings))
        self.assertIn('below extended', warnings[0])

    def test_note_per_classification(self):
        isolated = IsolationProbe(0.2, [0.2], np.array([0.5]), np.array([0.0]), 'isolated-evidence')
        expected = {
            'abnormal': True,
            'nondegenerate-abnormal': True,
            'nondegenerate-normal': True,
            'normal-but-degenerate-possible': True,
            'normal': False,
            'not-extremal': False,
        }
        self.assertSetEqual(set(CLASSIFICATIONS), set(expected))
        for classification, abnormal in expected.items():
            report = build_report(trend('strict', [1.3]), trend('extended', [1.0]), probe=isolated,
                                  classification=classification)
            if abnormal:
                self.assertEqual('isolation evidence together with an abnormal multiplier', report.note)
            else:
                self.assertIn('no abnormal multiplier', report.note)


class InfimumSweepTest(SimpleTestCase):
    def setUp(self):
        self.spec = load_bundled('lq')
        self.ref = reference_process('lq', self.spec, nodes=16)

    def test_sweep(self):
        extended = infimum_sweep(self.spec, 'extended', [{'nodes': 8}, {'nodes': 16}], init=self.ref)
        strict = infimum_sweep(self.spec, 'strict', [{'nodes': 16, 'w0_floor': f} for f in (0.2, 0.1)],
                               init=self.ref)
        self.assertEqual(2, len(extended.statuses))
        self.assertLessEqual(extended.limit, 1e-6)
        self.assertTrue(np.all(np.diff(strict.best_so_far) <= 0))

        report = build_report(strict, extended)
        self.assertEqual('no-gap-evidence', report.verdict.verdict)
        self.assertListEqual([], report.warnings)

    def test_schedule(self):
        with self.assertRaises(ParameterError):
            infimum_sweep(self.spec, 'extended', [])
        with self.assertRaises(ParameterError):
            infimum_sweep(self.spec, 'strict', [{'nodes': 16}])


class IsolationProbeTest(SimpleTestCase):
    def test_oracle(self):
        starts = np.linspace(0.0, 1.5, 1501)
        for floor in (0.2, 0.1, 0.05):
            best = min(gapfix_violation(start, floor) for start in starts)
            lapse = floor / (1.0 - floor)
            self.assertGreaterEqual(best, 0.1)
            self.assertAlmostEqual(5.0 * lapse, best, delta=1e-2)

    def test_extended_optimum(self):
        spec = load_bundled('gapfix')
        ref = reference_process('gapfix', spec, nodes=20)
        self.assertTrue(check_feasibility(spec, ref).feasible)
        self.assertAlmostEqual(1.0, float(ref.nu[-1]))

        # jumping at any other instant violates the constraint
        grid = np.linspace(0.0, 2.0, 21)
        for switch in (6, 14):
            w0 = np.where(np.arange(20) < switch, 1.0, 0.0)
            w0[switch + 10:] = 1.0
            early = integrate(spec, 'extended', grid, w0, (1.0 - w0)[:, None], np.zeros(20, dtype=int))
            self.assertGreater(check_feasibility(spec, early).max_constraint_violation, 1.0)

    def test_isolated(self):
        spec = load_bundled('gapfix')
        ref = reference_process('gapfix', spec, nodes=20)
        probe = isolation_probe(spec, ref, 0.2, [0.2, 0.1, 0.05])
        self.assertListEqual([0.2, 0.1, 0.05], probe.floors_used)
        self.assertTrue(np.all(probe.values >= 0.1))
        self.assertEqual('isolated-evidence', probe.verdict)
        for proc in probe.processes:
            self.assertEqual('strict', proc.layer)

        report = build_report(trend('strict', [1.3]), trend('extended', [1.0]), probe=probe,
                              classification='nondegenerate-abnormal')
        self.assertIn('abnormal multiplier', report.note)

    def test_controllable(self):
        spec = load_bundled('lq')
        probe = isolation_probe(spec, reference_process('lq', spec, nodes=16), 0.2, [0.2])
        self.assertEqual('controllable-evidence', probe.verdict)

    @override_settings(GAPCERT_THREADS=3)
    def test_levels_in_parallel(self):
        spec = load_bundled('lq')
        ref = reference_process('lq', spec, nodes=16)
        with mock.patch('gapcert.gap.exec_multi_arg_func', wraps=exec_multi_arg_func) as pool:
            parallel = isolation_probe(spec, ref, 0.2, [0.2, 0.1])
        pool.assert_called_once()
        self.assertEqual(3, pool.call_args[1]['threads_count'])
        self.assertListEqual([0.2, 0.1], parallel.floors_used)

        with override_settings(GAPCERT_THREADS=1):
            serial = isolation_probe(spec, ref, 0.2, [0.2, 0.1])
        np.testing.assert_array_equal(serial.values, parallel.values)
        np.testing.assert_array_equal(serial.processes[1].states, parallel.processes[1].states)

    def test_infeasible_reference(self):
        spec = load_bundled('gapfix')
        grid = np.linspace(0.0, 2.0, 11)
        proc = integrate(spec, 'extended', grid, np.ones(10), np.zeros((10, 1)), np.zeros(10, dtype=int))
        with self.assertRaises(ParameterError):
            isolation_probe(spec, proc, 0.2, [0.1])


class Ex51SweepTest(SimpleTestCase):
    def setUp(self):
        self.spec = load_bundled('ex51')

    def test_no_gap(self):
        extended = infimum_sweep(self.spec, 'extended', EXTENDED_SCHEDULE, seeds=2,
                                 init=reference_process('ex51', self.spec))
        strict = infimum_sweep(self.spec, 'strict', STRICT_SCHEDULE, seeds=2,
                               init=ex51_strict_process(0.2, self.spec))
        self.assertLessEqual(abs(extended.limit), 5e-3)
        self.assertTrue(np.all(np.diff(strict.best_so_far) <= 0))
        self.assertLessEqual(abs(strict.limit - extended.limit), 2e-2)

        report = build_report(strict, extended)
        self.assertEqual('no-gap-evidence', report.verdict.verdict)
