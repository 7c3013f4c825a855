import io
import os
import tempfile
from contextlib import redirect_stderr, redirect_stdout

import numpy as np
from django.test import SimpleTestCase

from gapcert.cli import dispatch
from gapcert.csvio import emit_process_csv
from gapcert.examples import load_bundled, reference_process
from gapcert.integrator import integrate


class DispatchTest(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = self.tmp.name
        self.stdout = io.StringIO()
        self.stderr = io.StringIO()

    def tearDown(self):
        self.tmp.cleanup()

    def run_cli(self, *argv):
        with redirect_stdout(self.stdout), redirect_stderr(self.stderr):
            return dispatch(list(argv))

    def write_process(self, name, spec, proc):
        path = os.path.join(self.out, name)
        emit_process_csv(spec, proc, path)
        return path

    def test_usage(self):
        self.assertEqual(64, self.run_cli())
        self.assertEqual(64, self.run_cli('frobnicate'))
        self.assertIn('usage: gapcert', self.stderr.getvalue())

    def test_bad_arguments(self):
        self.assertEqual(64, self.run_cli('certify'))
        self.assertEqual(64, self.run_cli('example', 'lq', '--bogus', '--out', self.out))
        self.assertEqual(64, self.run_cli('example', 'lq', '--multistart', '0', '--out', self.out))
        self.assertEqual(64, self.run_cli('example', 'lq', '--tol-feas', '-1', '--out', self.out))

    def test_missing_problem(self):
        spec = load_bundled('lq')
        path = self.write_process('ref.csv', spec, reference_process('lq', spec, nodes=10))
        missing = os.path.join(self.out, 'missing.yaml')
        self.assertEqual(1, self.run_cli('certify', missing, path, '--out', self.out))

    def test_certify_finding(self):
        spec = load_bundled('lq')
        N = 20
        w = np.where(np.arange(N) % 2 == 0, 0.5, -0.5)[:, None]
        proc = integrate(spec, 'extended', np.linspace(0.0, 2.0, N + 1), np.full(N, 0.5), w, np.zeros(N, dtype=int))
        path = self.write_process('alternating.csv', spec, proc)

        self.assertEqual(2, self.run_cli('certify', 'lq', path, '--out', self.out))
        self.assertTrue(os.path.exists(os.path.join(self.out, 'certify.txt')))

    def test_cq(self):
        spec = load_bundled('ex51')
        path = self.write_process('ref.csv', spec, reference_process('ex51', spec, nodes=20))
        self.assertEqual(0, self.run_cli('cq', 'ex51', path, '--sbar', '1', '--out', self.out))
        self.assertIn('constraint qualification: satisfied', self.stdout.getvalue())

        self.assertEqual(64, self.run_cli('cq', 'ex51', path, '--sbar', '0', '--out', self.out))

    def test_example(self):
        self.assertEqual(0, self.run_cli('example', 'lq', '--out', self.out))
        for filename in ('lq_reference.csv', 'lq_certify.txt', 'lq_summary.txt'):
            self.assertTrue(os.path.exists(os.path.join(self.out, filename)), filename)
        self.assertFalse(os.path.exists(os.path.join(self.out, 'lq_cq.txt')))
        self.assertIn('lq: normal', self.stdout.getvalue())

    def test_certify_infeasible(self):
        spec = load_bundled('ex51')
        proc = integrate(spec, 'extended', np.linspace(0.0, 2.0, 11), np.ones(10), np.zeros((10, 2)),
                         np.zeros(10, dtype=int))
        path = self.write_process('idle.csv', spec, proc)
        self.assertEqual(1, self.run_cli('certify', 'ex51', path, '--out', self.out))
        self.assertIn('feasible', self.stderr.getvalue())

    def test_example_ex51_all(self):
        self.assertEqual(0, self.run_cli('example', 'ex51', '--all', '--multistart', '2', '--out', self.out))
        for filename in ('ex51_reference.csv', 'ex51_certify.txt', 'ex51_cq.txt', 'ex51_gap.txt', 'ex51_trends.svg',
                         'ex51_trend_strict.csv', 'ex51_trend_extended.csv', 'ex51_probe.csv', 'ex51_summary.txt'):
            self.assertTrue(os.path.exists(os.path.join(self.out, filename)), filename)
        output = self.stdout.getvalue()
        self.assertIn('ex51: nondegenerate-normal', output)
        self.assertIn('ex51: gap no-gap-evidence', output)
        with open(os.path.join(self.out, 'ex51_summary.txt')) as f:
            self.assertIn('gap = no-gap-evidence', f.read())
