"""
Shared base of gapcert management commands: global flags, run configuration checks and problem loading
"""
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from django.core.management import BaseCommand, CommandError, CommandParser
from django.test.utils import override_settings

from ..configuration import PREFIX, config
from ..examples import problem_path
from ..model import ProblemSpec, load_problem

USAGE_ERROR = 64
FINDING = 2


@dataclass
class RunConfig:
    subcommand: str
    problem: Optional[str]
    processes: List[str]
    options: Dict[str, Any]
    out: str
    seed: int = 0
    tol_feas: Optional[float] = None
    tol_kkt: Optional[float] = None
    overrides: Dict[str, Any] = field(default_factory=dict)

    # option name -> (lower, upper, lower bound inclusive)
    RANGES = {
        'nodes': (8, None, True),
        'w0_floor': (0.0, 1.0, False),
        'eta': (0.0, None, False),
        'delta': (0.0, None, False),
        'sbar': (0.0, None, False),
        'multistart': (1, None, True),
        'w0_min': (0.0, 1.0, False),
    }

    def validate(self) -> None:
        for name, value in self.options.items():
            if name not in self.RANGES or value is None:
                continue
            lower, upper, inclusive = self.RANGES[name]
            for item in value if isinstance(value, list) else [value]:
                too_low = item < lower if inclusive else item <= lower
                if too_low or (upper is not None and item >= upper):
                    raise CommandError('--%s=%s is out of range' % (name.replace('_', '-'), item),
                                       returncode=USAGE_ERROR)
        for name in ('tol_feas', 'tol_kkt'):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise CommandError('--%s must be positive' % name.replace('_', '-'), returncode=USAGE_ERROR)

        os.makedirs(self.out, exist_ok=True)
        if not os.access(self.out, os.W_OK):
            raise CommandError('output directory %s is not writable' % self.out, returncode=USAGE_ERROR)

        if self.tol_feas is not None:
            self.overrides[PREFIX + 'TOL_FEAS'] = self.tol_feas
        if self.tol_kkt is not None:
            self.overrides[PREFIX + 'TOL_KKT'] = self.tol_kkt


class GapCertCommand(BaseCommand):
    requires_system_checks = []
    requires_migrations_checks = False

    # Positional process arguments of the subcommand
    process_args = ()

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument('--out', type=str, default=None,
                            help='Output directory. Defaults to the GAPCERT_OUTPUT_DIR setting.')
        parser.add_argument('--tol-feas', type=float, default=None, help='Constraint violation tolerance.')
        parser.add_argument('--tol-kkt', type=float, default=None, help='KKT residual tolerance.')
        parser.add_argument('--seed', type=int, default=0, help='Seed of all random draws.')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser: CommandParser) -> None:
        pass

    def run_config(self, options: Dict[str, Any]) -> RunConfig:
        numeric = {name: options.get(name) for name in RunConfig.RANGES if name in options}
        return RunConfig(self.name, options.get('problem'), [options[p] for p in self.process_args if options.get(p)],
                         numeric, options.get('out') or config.OUTPUT_DIR, options.get('seed') or 0,
                         options.get('tol_feas'), options.get('tol_kkt'))

    @property
    def name(self) -> str:
        return self.__module__.rsplit('.', 1)[-1]

    def load(self, problem: str) -> ProblemSpec:
        return load_problem(problem_path(problem))

    def output(self, run: RunConfig, filename: str) -> str:
        return os.path.join(run.out, filename)

    def write_text(self, run: RunConfig, filename: str, text: str) -> str:
        path = self.output(run, filename)
        with open(path, 'w') as f:
            f.write(text)
        return path

    def finding(self, message: str) -> None:
        raise CommandError(message, returncode=FINDING)

    def handle(self, *args, **options) -> None:
        run = self.run_config(options)
        run.validate()
        with override_settings(**run.overrides):
            self.run(run, **options)

    def run(self, run: RunConfig, **options) -> None:
        raise NotImplementedError()
