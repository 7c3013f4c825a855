"""
CSV formats for processes, multipliers and trends. Every file starts with a `# layer=<layer>` line followed
by the column names; numbers are written with 17 significant digits and '.' as decimal separator.
"""
import io
import os
from contextlib import contextmanager
from typing import IO, List, Union

import numpy as np

from .embed import OriginalProcess
from .exceptions import ParseError
from .model import LAYERS, Process, ProblemSpec

FMT = '%.17g'

PathOrStream = Union[str, os.PathLike, IO]


@contextmanager
def _open(target: PathOrStream, mode: str):
    if hasattr(target, 'read') or hasattr(target, 'write'):
        yield target
    else:
        with open(target, mode, newline='') as f:
            yield f


def process_columns(spec: ProblemSpec, layer: str) -> List[str]:
    m, n = spec.m, spec.n
    if layer == 'original':
        return ['t'] + ['u_%d' % (j + 1) for j in range(m)] + ['a_index'] + ['x_%d' % (i + 1) for i in range(n)] + \
            ['v']
    states = ['y0'] + ['y_%d' % (i + 1) for i in range(n)] + ['nu']
    if layer != 'relaxed':
        return ['s', 'w0'] + ['w_%d' % (j + 1) for j in range(m)] + ['a_index'] + states
    controls = []
    for r in range(n + 1):
        controls += ['w0_%d' % r] + ['w_%d_%d' % (r, j + 1) for j in range(m)] + ['a_index_%d' % r, 'lambda_%d' % r]
    return ['s'] + controls + states + ['xi_%d' % r for r in range(n + 1)]


def _node_controls(values: np.ndarray) -> np.ndarray:
    """
    Per-node control rows: node k carries interval k, the last node repeats the last interval
    """
    return np.concatenate([values, values[-1:]], axis=0)


def _write(target: PathOrStream, layer: str, columns: List[str], data: np.ndarray) -> None:
    with _open(target, 'w') as f:
        np.savetxt(f, data, fmt=FMT, delimiter=',', header='# layer=%s\n%s' % (layer, ','.join(columns)),
                   comments='')


def emit_process_csv(spec: ProblemSpec, proc: Union[Process, OriginalProcess], target: PathOrStream) -> None:
    """
    Writes a process of any layer (or an original process) as CSV
    """
    if isinstance(proc, OriginalProcess):
        data = np.column_stack([proc.grid, _node_controls(proc.u), _node_controls(proc.a_index), proc.x, proc.v])
        _write(target, 'original', process_columns(spec, 'original'), data)
        return

    parts = [proc.grid[:, None]]
    if proc.layer == 'relaxed':
        for r in range(proc.rows):
            parts += [_node_controls(proc.w0[:, r])[:, None], _node_controls(proc.w[:, r]),
                      _node_controls(proc.a_index[:, r])[:, None], _node_controls(proc.weights[:, r])[:, None]]
        parts += [proc.states, proc.xi]
    else:
        parts += [_node_controls(proc.w0), _node_controls(proc.w[:, 0]), _node_controls(proc.a_index), proc.states]
    _write(target, proc.layer, process_columns(spec, proc.layer), np.column_stack(parts))


def _read(source: PathOrStream):
    with _open(source, 'r') as f:
        text = f.read()
    lines = text.splitlines()
    if len(lines) < 2 or not lines[0].startswith('# layer='):
        raise ParseError('missing `# layer=<layer>` header')
    layer = lines[0][len('# layer='):].strip()
    columns = [c.strip() for c in lines[1].split(',')]
    try:
        data = np.loadtxt(io.StringIO('\n'.join(lines[2:])), delimiter=',', ndmin=2)
    except ValueError as e:
        raise ParseError('malformed numeric data: %s' % e)
    return layer, columns, data


def _check_columns(found: List[str], expected: List[str]) -> None:
    for i, name in enumerate(found):
        if i >= len(expected) or name != expected[i]:
            raise ParseError('unexpected column', name)
    if len(found) < len(expected):
        raise ParseError('missing column', expected[len(found)])


def read_process_csv(source: PathOrStream, spec: ProblemSpec) -> Union[Process, OriginalProcess]:
    """
    Reads a process written by emit_process_csv; the column layout must match the problem dimensions
    """
    layer, columns, data = _read(source)
    if layer not in LAYERS + ('original',):
        raise ParseError('unknown layer `%s`' % layer)
    _check_columns(columns, process_columns(spec, layer))
    if data.shape[1] != len(columns):
        raise ParseError('row width %d does not match %d columns' % (data.shape[1], len(columns)))
    if len(data) < 2:
        raise ParseError('a process needs at least two nodes')

    m, n = spec.m, spec.n
    if layer == 'original':
        return OriginalProcess(data[:, 0], data[:-1, 1:1 + m], data[:-1, 1 + m].astype(int),
                               data[:, 2 + m:2 + m + n], data[:, 2 + m + n])

    N = len(data) - 1
    if layer != 'relaxed':
        return Process(layer, data[:, 0], data[:N, 1:2], data[:N, None, 2:2 + m], data[:N, 2 + m:3 + m].astype(int),
                       np.ones((N, 1)), data[:, 3 + m:])

    R, width = n + 1, m + 3
    w0 = np.empty((N, R))
    w = np.empty((N, R, m))
    a_index = np.empty((N, R), dtype=int)
    weights = np.empty((N, R))
    for r in range(R):
        base = 1 + r * width
        w0[:, r] = data[:N, base]
        w[:, r] = data[:N, base + 1:base + 1 + m]
        a_index[:, r] = data[:N, base + 1 + m].astype(int)
        weights[:, r] = data[:N, base + 2 + m]
    start = 1 + R * width
    states = data[:, start:start + n + 2]
    xi = data[:, start + n + 2:]
    return Process('relaxed', data[:, 0], w0, w, a_index, weights, states, xi)


def emit_multiplier_csv(spec: ProblemSpec, proc: Process, mult, target: PathOrStream) -> None:
    """
    Node table of a multiplier set: p, q (left limits, closed at S) and atom masses
    """
    n1 = spec.n + 1
    masses = np.zeros(proc.N + 1)
    for node, mass in zip(mult.nodes, mult.masses):
        masses[node] += mass
    columns = ['node', 's'] + ['p_%d' % j for j in range(n1)] + ['q_%d' % j for j in range(n1)] + ['mass']
    data = np.column_stack([np.arange(proc.N + 1), proc.grid, mult.p, mult.q, masses])
    _write(target, 'multiplier', columns, data)


def emit_trend_csv(trend, target: PathOrStream) -> None:
    columns = ['nodes', 'w0_floor', 'objective', 'best_so_far']
    data = np.array([[p['nodes'], p.get('w0_floor') if p.get('w0_floor') is not None else np.nan, obj, best]
                     for p, obj, best in zip(trend.points, trend.objectives, trend.best_so_far)], dtype=float)
    _write(target, trend.layer, columns, data.reshape(-1, len(columns)))


def emit_probe_csv(probe, target: PathOrStream) -> None:
    columns = ['w0_floor', 'defect', 'tube_excess']
    data = np.column_stack([probe.floors_used, probe.values, probe.tube_excess])
    _write(target, 'probe', columns, data)
