"""
Django command that solves one layer of a problem by single shooting
"""
from django.core.management import CommandParser

from ...csvio import emit_process_csv, read_process_csv
from ...model import LAYERS
from ...reports import solve_report
from ...solve import multistart, transcribe
from ..base import GapCertCommand


class Command(GapCertCommand):
    help = 'Solves the strict, extended or relaxed problem and writes the best process'

    def add_command_arguments(self, parser: CommandParser) -> None:
        parser.add_argument('problem', type=str, help='Problem file or bundled problem name.')
        parser.add_argument('--layer', type=str, choices=LAYERS, default='extended', help='Control layer to solve.')
        parser.add_argument('--n', dest='nodes', type=int, default=40, help='Number of grid intervals.')
        parser.add_argument('--w0-floor', type=float, default=None, help='Lower bound of w0 on the strict layer.')
        parser.add_argument('--multistart', type=int, default=1, help='Number of starts.')
        parser.add_argument('--fixed-time', action='store_true', help='Keep the horizon fixed.')
        parser.add_argument('--init', type=str, default=None, help='Process CSV used as the first start.')

    def run(self, run, **options) -> None:
        spec = self.load(options['problem'])
        layer = options['layer']
        extra = {'w0_floor': options['w0_floor']} if layer == 'strict' else {}
        trans = transcribe(spec, layer, options['nodes'], free_time=not options['fixed_time'], **extra)
        init = read_process_csv(options['init'], spec) if options['init'] else None

        report = multistart(trans, seeds=options['multistart'], rng_seed=run.seed, init=init)
        self.write_text(run, 'solve_%s.txt' % layer, solve_report(report, spec))
        emit_process_csv(spec, report.process, self.output(run, 'solve_%s.csv' % layer))
        self.stdout.write('%s %s: objective %.10g, violation %.3g'
                          % (layer, report.status, report.objective, report.violation))
        if report.status == 'infeasible':
            self.finding('infeasible')
