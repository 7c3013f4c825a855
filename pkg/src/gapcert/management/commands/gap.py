"""
Django command that estimates layer infima, probes isolation of a reference and reports gap evidence
"""
from django.core.management import CommandParser

from ...csvio import emit_probe_csv, emit_trend_csv, read_process_csv
from ...gap import build_report, infimum_sweep, isolation_probe
from ...pmp import MODES, classify
from ...reports import gap_report, plot_trends
from ..base import GapCertCommand


class Command(GapCertCommand):
    help = 'Compares strict, extended and relaxed infima along refinement schedules'
    process_args = ('ref',)

    def add_command_arguments(self, parser: CommandParser) -> None:
        parser.add_argument('problem', type=str, help='Problem file or bundled problem name.')
        parser.add_argument('--nodes', type=int, nargs='+', default=[40, 80],
                            help='Grid sizes of the extended and relaxed sweeps.')
        parser.add_argument('--strict-nodes', type=int, default=80, help='Grid size of the strict sweep.')
        parser.add_argument('--w0-floor', type=float, nargs='+', default=[0.2, 0.1, 0.05],
                            help='Decreasing w0 floors of the strict sweep and the isolation probe.')
        parser.add_argument('--relaxed', action='store_true', help='Also sweep the relaxed layer.')
        parser.add_argument('--multistart', type=int, default=1, help='Starts per sweep point.')
        parser.add_argument('--ref', type=str, default=None, help='Reference process CSV for the isolation probe.')
        parser.add_argument('--delta', type=float, default=0.2, help='Tube radius of the isolation probe.')
        parser.add_argument('--mode', type=str, choices=MODES, default='free-impulsive',
                            help='Mode of the reference classification.')

    def run(self, run, **options) -> None:
        spec = self.load(options['problem'])
        seeds, seed = options['multistart'], run.seed
        schedule = [{'nodes': n} for n in options['nodes']]
        strict_schedule = [{'nodes': options['strict_nodes'], 'w0_floor': f} for f in options['w0_floor']]

        extended = infimum_sweep(spec, 'extended', schedule, seeds, seed)
        strict = infimum_sweep(spec, 'strict', strict_schedule, seeds, seed)
        relaxed = infimum_sweep(spec, 'relaxed', schedule, seeds, seed) if options['relaxed'] else None

        probe, classification = None, None
        if options['ref']:
            ref = read_process_csv(options['ref'], spec)
            probe = isolation_probe(spec, ref, options['delta'], options['w0_floor'], seeds, seed)
            classification = classify(spec, ref, options['mode']).classification
            emit_probe_csv(probe, self.output(run, 'probe.csv'))

        report = build_report(strict, extended, relaxed, probe, classification)
        for trend in (strict, extended, relaxed):
            if trend is not None:
                emit_trend_csv(trend, self.output(run, 'trend_%s.csv' % trend.layer))
        plot_trends([strict, extended, relaxed], self.output(run, 'trends.svg'), spec.name)
        self.write_text(run, 'gap.txt', gap_report(report))
        self.stdout.write('gap verdict: %s (margin %.4g)' % (report.verdict.verdict, report.verdict.margin))
        if report.verdict.verdict == 'gap-evidence':
            self.finding('gap-evidence')
