"""
Django command that classifies a process by its maximum principle multipliers
"""
from django.core.management import CommandParser

from ...csvio import read_process_csv
from ...pmp import MODES, classify
from ...reports import extremal_report
from ..base import GapCertCommand


class Command(GapCertCommand):
    help = 'Searches maximum principle multipliers of a process and classifies it'
    process_args = ('process',)

    def add_command_arguments(self, parser: CommandParser) -> None:
        parser.add_argument('problem', type=str, help='Problem file or bundled problem name.')
        parser.add_argument('process', type=str, help='Process CSV (strict, extended or relaxed layer).')
        parser.add_argument('--mode', type=str, choices=MODES, default='free-impulsive',
                            help='free-impulsive adds the vanishing Hamiltonian condition.')

    def run(self, run, **options) -> None:
        spec = self.load(options['problem'])
        proc = read_process_csv(options['process'], spec)
        report = classify(spec, proc, options['mode'])
        self.write_text(run, 'certify.txt', extremal_report(report, spec, proc))
        self.stdout.write('classification: %s (%s)' % (report.classification, report.status))
        if report.classification == 'not-extremal':
            self.finding('not-extremal')
