"""
Console entry point: `gapcert <subcommand> [options]` dispatches to the gapcert management commands
"""
import sys
from typing import List, Optional

from django.core.management import CommandError, load_command_class

from .exceptions import GapCertError
from .management.base import FINDING, USAGE_ERROR

SUBCOMMANDS = ('solve', 'embed', 'chatter', 'certify', 'cq', 'gap', 'example')

USAGE = 'usage: gapcert {%s} [options]\n' % ','.join(SUBCOMMANDS)


def dispatch(argv: List[str]) -> int:
    """
    Runs one subcommand
    :param argv: Arguments without the program name
    :return: Exit status: 0 success, 2 finding, 1 error, 64 usage error
    """
    if not argv or argv[0] not in SUBCOMMANDS:
        sys.stderr.write(USAGE)
        return USAGE_ERROR

    sub = argv[0]
    command = load_command_class('gapcert', sub)
    parser = command.create_parser('gapcert', sub)
    try:
        options = parser.parse_args(argv[1:])
    except CommandError as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write('gapcert %s: %s\n' % (sub, e))
        return USAGE_ERROR

    kwargs = vars(options)
    args = kwargs.pop('args', ())
    try:
        command.execute(*args, **kwargs)
    except CommandError as e:
        sys.stderr.write('gapcert %s: %s\n' % (sub, e))
        return e.returncode if e.returncode in (FINDING, USAGE_ERROR) else 1
    except (GapCertError, OSError) as e:
        sys.stderr.write('gapcert %s: error: %s\n' % (sub, e))
        return 1
    return 0


def main(argv: Optional[List[str]] = None) -> None:
    sys.exit(dispatch(sys.argv[1:] if argv is None else argv))
