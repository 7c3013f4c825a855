"""
Django command that maps processes between the original problem and its space-time embedding
"""
from django.core.management import CommandParser

from ...csvio import emit_process_csv, read_process_csv
from ...embed import OriginalProcess, embed_original, invert_embedding
from ..base import GapCertCommand


class Command(GapCertCommand):
    help = 'Embeds an original process, or recovers the original process of a strict or extended one'
    process_args = ('process',)

    def add_command_arguments(self, parser: CommandParser) -> None:
        parser.add_argument('problem', type=str, help='Problem file or bundled problem name.')
        parser.add_argument('process', type=str, help='Process CSV (original, strict or extended layer).')
        parser.add_argument('--nodes', type=int, default=None, help='Intervals of the output grid.')
        parser.add_argument('--w0-min', type=float, default=None,
                            help='Smallest w0 accepted by the inverse embedding.')

    def run(self, run, **options) -> None:
        spec = self.load(options['problem'])
        proc = read_process_csv(options['process'], spec)
        if isinstance(proc, OriginalProcess):
            result = embed_original(spec, proc, options['nodes'])
            path = self.output(run, 'embedded.csv')
            self.stdout.write('embedded %d intervals, S = %.10g' % (result.N, result.S))
        else:
            result = invert_embedding(spec, proc, options['w0_min'], options['nodes'])
            path = self.output(run, 'original.csv')
            self.stdout.write('recovered original process, T = %.10g' % result.T)
        emit_process_csv(spec, result, path)
