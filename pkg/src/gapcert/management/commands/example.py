"""
Django command that runs the pipeline of a bundled problem around its reference process
"""
import numpy as np
from django.core.management import CommandParser

from ...csvio import emit_process_csv, emit_probe_csv, emit_trend_csv
from ...examples import (BUNDLED, EXTENDED_SCHEDULE, PROBE_FLOORS, STRICT_SCHEDULE, ex51_strict_process,
                         ex51_trajectory, load_bundled, reference_process)
from ...gap import build_report, infimum_sweep, isolation_probe
from ...pmp import check_cq_h6, classify
from ...reports import cq_report, extremal_report, gap_report, plot_trends, section
from ..base import GapCertCommand


class Command(GapCertCommand):
    help = 'Reproduces the reference pipeline of a bundled problem'

    def add_command_arguments(self, parser: CommandParser) -> None:
        parser.add_argument('example', type=str, choices=BUNDLED, help='Bundled problem name.')
        parser.add_argument('--all', action='store_true', help='Also run the layer sweeps and the isolation probe.')
        parser.add_argument('--multistart', type=int, default=8, help='Starts per sweep point.')
        parser.add_argument('--delta', type=float, default=0.2, help='Tube radius of the isolation probe.')
        parser.add_argument('--sbar', type=float, default=1.0, help='Right end of the constraint qualification check.')

    def run(self, run, **options) -> None:
        name = options['example']
        spec = load_bundled(name)
        ref = reference_process(name, spec)
        emit_process_csv(spec, ref, self.output(run, '%s_reference.csv' % name))

        summary = [('problem', name), ('reference_objective', float(spec.cost.value(*self._end(ref))))]
        if name == 'ex51':
            summary.append(('reference_sup_error', float(np.max(np.abs(ref.states - ex51_trajectory(ref.grid))))))

        report = classify(spec, ref, 'free-impulsive')
        self.write_text(run, '%s_certify.txt' % name, extremal_report(report, spec, ref))
        summary.append(('classification', report.classification))
        self.stdout.write('%s: %s' % (name, report.classification))

        if spec.constrained:
            cq = check_cq_h6(spec, ref, options['sbar'])
            self.write_text(run, '%s_cq.txt' % name, cq_report(cq, options['sbar']))
            summary.append(('cq', cq.verdict))
            self.stdout.write('%s: constraint qualification %s' % (name, cq.verdict))

        if options['all']:
            seeds, seed = options['multistart'], run.seed
            strict_init = ex51_strict_process(STRICT_SCHEDULE[0]['w0_floor'], spec) if name == 'ex51' else None
            extended = infimum_sweep(spec, 'extended', EXTENDED_SCHEDULE, seeds, seed, init=ref)
            strict = infimum_sweep(spec, 'strict', STRICT_SCHEDULE, seeds, seed, init=strict_init)
            probe = isolation_probe(spec, ref, options['delta'], PROBE_FLOORS, 1, seed)
            gap = build_report(strict, extended, None, probe, report.classification)

            for trend in (strict, extended):
                emit_trend_csv(trend, self.output(run, '%s_trend_%s.csv' % (name, trend.layer)))
            emit_probe_csv(probe, self.output(run, '%s_probe.csv' % name))
            if extended.reports[-1] is not None:
                emit_process_csv(spec, extended.reports[-1].process, self.output(run, '%s_extended.csv' % name))
            plot_trends([strict, extended], self.output(run, '%s_trends.svg' % name), name)
            self.write_text(run, '%s_gap.txt' % name, gap_report(gap))
            summary += [('gap', gap.verdict.verdict), ('probe', probe.verdict)]
            self.stdout.write('%s: gap %s, probe %s' % (name, gap.verdict.verdict, probe.verdict))

        self.write_text(run, '%s_summary.txt' % name, section('example', summary))

    @staticmethod
    def _end(proc):
        end = proc.endpoint
        return end[0], end[1:-1], end[-1]
