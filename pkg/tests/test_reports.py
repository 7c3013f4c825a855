import os
import tempfile

import numpy as np
from django.test import SimpleTestCase

from gapcert.examples import load_bundled, reference_process
from gapcert.gap import Trend, build_report
from gapcert.pmp import check_cq_h6, classify
from gapcert.reports import cq_report, extremal_report, gap_report, plot_trends, section


def trend(layer, values):
    values = np.array(values, dtype=float)
    return Trend(layer, [{'nodes': 40}, {'nodes': 80}][:len(values)], values, np.minimum.accumulate(values),
                 ['converged'] * len(values))


class SectionTest(SimpleTestCase):
    def test_format(self):
        text = section('solve', [('status', 'converged'), ('objective', 0.1), ('nodes', 40),
                                 ('w', np.array([1.0, -0.5]))])
        self.assertEqual('[solve]\nstatus = converged\nobjective = 0.1\nnodes = 40\nw = 1 -0.5\n', text)

    def test_empty(self):
        self.assertEqual('[note]\n', section('note', []))


class ReportTest(SimpleTestCase):
    def test_extremal(self):
        spec = load_bundled('lq')
        ref = reference_process('lq', spec, nodes=20)
        text = extremal_report(classify(spec, ref), spec, ref)
        self.assertTrue(text.startswith('[certify]\nproblem = lq\n'))
        self.assertIn('classification = normal', text)
        self.assertIn('[witness.normal.csv]\n# layer=multiplier\nnode,s,p_0,p_1,q_0,q_1,mass\n', text)

    def test_cq(self):
        spec = load_bundled('ex51')
        ref = reference_process('ex51', spec, nodes=20)
        text = cq_report(check_cq_h6(spec, ref, 1.0), 1.0)
        self.assertIn('verdict = satisfied', text)
        self.assertIn('branch = w0-positive', text)
        self.assertIn('[cq.witness.0]', text)
        self.assertNotIn('[cq.witness.1]', text)

    def test_gap(self):
        report = build_report(trend('strict', [0.5, 0.5]), trend('extended', [0.0, 0.0]), solver_tol=0.01)
        text = gap_report(report)
        self.assertTrue(text.startswith('[gap]\nverdict = gap-evidence\nmargin = 0.03\ndifference.extended = 0.5\n'))
        self.assertIn('[trend.strict.csv]\n# layer=strict\n', text)
        self.assertNotIn('[probe]', text)
        self.assertNotIn('[warning]', text)


class PlotTest(SimpleTestCase):
    def test_deterministic(self):
        trends = [trend('strict', [0.5, 0.4]), trend('extended', [0.1, 0.0])]
        with tempfile.TemporaryDirectory() as tmp:
            paths = [os.path.join(tmp, name) for name in ('a.svg', 'b.svg')]
            for path in paths:
                plot_trends(trends, path, 'lq')
            with open(paths[0], 'rb') as a, open(paths[1], 'rb') as b:
                first, second = a.read(), b.read()
        self.assertTrue(first.startswith(b'<?xml'))
        self.assertEqual(first, second)
