"""
This file is a wrapper for django settings,
which searches for library properties and sets defaults
"""
import os
from typing import Any

from django.conf import settings

# Prefix of all library parameters
PREFIX = getattr(settings, 'GAPCERT_SETTINGS_PREFIX', 'GAPCERT_')


def _default_threads() -> int:
    env = os.environ.get('GAPCERT_THREADS', '').strip()
    if env.isdigit() and int(env) > 0:
        return int(env)
    return os.cpu_count() or 1


# Default values for all library parameters
DEFAULTS = {
    # Augmented Lagrangian solver
    'TOL_FEAS': 1e-6,
    'TOL_KKT': 1e-5,
    'INNER_TOL': 1e-8,
    'INITIAL_PENALTY': 10.0,
    'PENALTY_GROWTH': 5.0,
    'VIOLATION_DECREASE': 0.25,
    'MAX_PENALTY': 1e7,
    'MAX_OUTER_ITERATIONS': 25,
    'MAX_INNER_ITERATIONS': 150,
    'FD_STEP': 1e-6,

    # Embedding
    'RESCALE_DELTA': 0.25,
    'W0_MIN': 1e-3,

    # Multiplier search
    'TOL_ACTIVE': 1e-6,
    'HAMILTONIAN_SLACK': 1e-9,
    'NONDEGENERACY_EPS': 1e-6,
    'NONTRIVIALITY_EPS': 1e-3,
    'RESIDUAL_TOL': 1e-6,
    'PROBE_NODES': 16,
    'W_SAMPLE_LEVELS': 5,
    'W_SAMPLE_DIRECTIONS': 16,

    # Gap detection
    'TUBE_PENALTY': 1e3,
    'ISOLATION_FLOOR': 0.05,
    'CONTROLLABLE_FLOOR': 1e-3,
    'GAP_TOLERANCE': 1e-2,

    'THREADS': _default_threads(),
    'STATSD_PREFIX': 'gapcert',
    'OUTPUT_DIR': 'out'
}


# Parameters which must be positive numbers
POSITIVE = {'TOL_FEAS', 'TOL_KKT', 'INNER_TOL', 'INITIAL_PENALTY', 'MAX_PENALTY', 'MAX_OUTER_ITERATIONS',
            'MAX_INNER_ITERATIONS', 'FD_STEP', 'RESCALE_DELTA', 'W0_MIN', 'THREADS'}


class Config:
    def __getattr__(self, item: str) -> Any:
        if item not in DEFAULTS:
            raise AttributeError('Unknown config parameter `%s`' % item)

        name = PREFIX + item
        value = getattr(settings, name, DEFAULTS[item])
        if item in POSITIVE and not (isinstance(value, (int, float)) and value > 0):
            from .exceptions import ConfigurationError
            raise ConfigurationError(item)
        return value


config = Config()
