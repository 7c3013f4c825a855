"""
Bundled problems and their reference processes
"""
import os
from typing import Optional

import numpy as np

from .exceptions import ParameterError, ProblemLoadError
from .integrator import integrate
from .model import Process, ProblemSpec, load_problem

PROBLEMS_DIR = os.path.join(os.path.dirname(__file__), 'problems')

BUNDLED = ('ex51', 'lq', 'gapfix')


def problem_path(name: str) -> str:
    """
    Resolves a bundled problem name or returns the argument as a file path
    """
    if name in BUNDLED:
        return os.path.join(PROBLEMS_DIR, '%s.yaml' % name)
    return name


def load_bundled(name: str) -> ProblemSpec:
    if name not in BUNDLED:
        raise ProblemLoadError(name, 'unknown bundled problem, expected one of %s' % ', '.join(BUNDLED))
    return load_problem(problem_path(name))


def _two_arcs(spec: ProblemSpec, nodes: int, first, second) -> Process:
    if nodes < 2 or nodes % 2:
        raise ParameterError('reference processes need an even number of intervals')
    grid = np.linspace(0.0, 2.0, nodes + 1)
    half = nodes // 2
    w0 = np.array([first[0]] * half + [second[0]] * half, dtype=float)
    w = np.array([first[1]] * half + [second[1]] * half, dtype=float)
    return integrate(spec, 'extended', grid, w0, w, np.zeros(nodes, dtype=int))


def ex51_trajectory(s: np.ndarray) -> np.ndarray:
    """
    Closed form (y0, y1, y2, y3, nu) of the ex51 reference process
    """
    s = np.asarray(s, dtype=float)
    first = np.column_stack([s, np.ones_like(s), np.zeros_like(s), np.zeros_like(s), np.zeros_like(s)])
    second = np.column_stack([np.ones_like(s), 2.0 - s, np.zeros_like(s), np.zeros_like(s), s - 1.0])
    return np.where((s <= 1.0)[:, None], first, second)


def reference_process(name: str, spec: Optional[ProblemSpec] = None, nodes: int = 40) -> Process:
    """
    Reference extended process of a bundled problem on [0, 2]
    :param name: Bundled problem name
    :param spec: Loaded problem, loaded from the bundle if omitted
    :param nodes: Even number of intervals
    """
    spec = spec or load_bundled(name)
    if name == 'ex51':
        return _two_arcs(spec, nodes, (1.0, [0.0, 0.0]), (0.0, [-1.0, 0.0]))
    if name == 'gapfix':
        return _two_arcs(spec, nodes, (1.0, [0.0]), (0.0, [1.0]))
    if name == 'lq':
        return _two_arcs(spec, nodes, (0.5, [-0.5]), (0.5, [-0.5]))
    raise ParameterError('no reference process for `%s`' % name)


def ex51_strict_process(w0_floor: float, spec: Optional[ProblemSpec] = None, nodes: int = 80) -> Process:
    """
    Strict-sense ex51 process on [0, 2] with objective 0: w0 = 1 at first, then w = (w0_floor - 1, 0)
    drives y1 from 1 to 0 while the clock closes at t = 1. One interval in between mixes the two.
    """
    if not 0 < w0_floor < 0.5:
        raise ParameterError('w0 floor must lie in ]0, 1/2[')
    if nodes < 2 or nodes % 2:
        raise ParameterError('reference processes need an even number of intervals')
    spec = spec or load_bundled('ex51')
    descent = nodes / 2.0
    full = int(descent // (1.0 - w0_floor))
    rest = descent - full * (1.0 - w0_floor)

    w0 = np.ones(nodes)
    w0[nodes - full:] = w0_floor
    w0[nodes - full - 1] = max(1.0 - rest, w0_floor)
    w = np.zeros((nodes, 2))
    w[:, 0] = w0 - 1.0
    return integrate(spec, 'strict', np.linspace(0.0, 2.0, nodes + 1), w0, w, np.zeros(nodes, dtype=int))


# Refinement schedules used by the example pipeline
EXTENDED_SCHEDULE = [{'nodes': 40}, {'nodes': 80}]
STRICT_SCHEDULE = [{'nodes': 80, 'w0_floor': f} for f in (0.2, 0.1, 0.05)]
PROBE_FLOORS = [0.2, 0.1, 0.05]
