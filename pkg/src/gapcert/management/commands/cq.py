"""
Django command that checks the initial-point constraint qualification
"""
from django.core.management import CommandParser

from ...csvio import read_process_csv
from ...pmp import check_cq_h6
from ...reports import cq_report
from ..base import GapCertCommand


class Command(GapCertCommand):
    help = 'Checks the constraint qualification at the initial point on [0, sbar]'
    process_args = ('process',)

    def add_command_arguments(self, parser: CommandParser) -> None:
        parser.add_argument('problem', type=str, help='Problem file or bundled problem name.')
        parser.add_argument('process', type=str, help='Reference process CSV.')
        parser.add_argument('--sbar', type=float, required=True, help='Right end of the checked interval.')

    def run(self, run, **options) -> None:
        spec = self.load(options['problem'])
        proc = read_process_csv(options['process'], spec)
        report = check_cq_h6(spec, proc, options['sbar'])
        self.write_text(run, 'cq.txt', cq_report(report, options['sbar']))
        self.stdout.write('constraint qualification: %s (margin %.6g)' % (report.verdict, report.margin))
        if report.verdict == 'not-satisfied':
            self.finding('constraint qualification not satisfied')
