"""
Django command that approximates a relaxed process by a chattering extended one
"""
from django.core.management import CommandParser

from ...csvio import emit_process_csv, read_process_csv
from ...relax import chatter, chatter_error
from ...reports import section
from ..base import GapCertCommand


class Command(GapCertCommand):
    help = 'Time-slices a relaxed process into an extended process'
    process_args = ('process',)

    def add_command_arguments(self, parser: CommandParser) -> None:
        parser.add_argument('problem', type=str, help='Problem file or bundled problem name.')
        parser.add_argument('process', type=str, help='Relaxed process CSV.')
        parser.add_argument('--eta', type=float, required=True, help='Slice width.')

    def run(self, run, **options) -> None:
        spec = self.load(options['problem'])
        relaxed = read_process_csv(options['process'], spec)
        chattered = chatter(spec, relaxed, options['eta'])
        error = chatter_error(spec, relaxed, chattered)

        emit_process_csv(spec, chattered, self.output(run, 'chattered.csv'))
        self.write_text(run, 'chatter.txt', section('chatter', [('eta', options['eta']), ('intervals', chattered.N),
                                                                 ('sup_error', error)]))
        self.stdout.write('chattered into %d intervals, sup error %.6g' % (chattered.N, error))
