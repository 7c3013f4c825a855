"""
Relaxed (simplex-weighted) processes, chattering approximation by extended processes and
inner approximation of extended processes by strict-sense ones.
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import DegenerateSampleError, LayerError, ParameterError
from .integrator import integrate
from .model import Process, ProblemSpec, SpaceTimeControlSample, check_sample

logger = logging.getLogger('gapcert')

SIMPLEX_TOL = 1e-12


class SimplexControlRow(NamedTuple):
    rows: Sequence[SpaceTimeControlSample]
    weights: Sequence[float]


@dataclass(frozen=True, eq=False)
class ChatterSchedule:
    """
    Sub-interval layout of a chattered process: edges of the new grid, and for every
    sub-interval the source interval and the row it runs.
    """
    eta: float
    edges: np.ndarray
    source: np.ndarray
    row: np.ndarray


class InnerApproximation(NamedTuple):
    process: Process
    sup_error: float
    nu_deviation: float


def integrate_relaxed(spec: ProblemSpec, rows: Sequence[SimplexControlRow], grid: np.ndarray) -> Process:
    """
    Integrates the relaxed system with n + 1 rows per interval. Shorter rows are padded with zero weights.
    :param spec: Problem
    :param rows: One SimplexControlRow per interval
    :param grid: Node times
    :return: Relaxed layer Process
    """
    grid = np.asarray(grid, dtype=float)
    if len(rows) != len(grid) - 1:
        raise ParameterError('expected %d simplex rows, got %d' % (len(grid) - 1, len(rows)))

    R = spec.n + 1
    w0 = np.zeros((len(rows), R))
    w = np.zeros((len(rows), R, spec.m))
    a_index = np.zeros((len(rows), R), dtype=int)
    weights = np.zeros((len(rows), R))
    for k, entry in enumerate(rows):
        lam = np.asarray(entry.weights, dtype=float)
        if len(entry.rows) != len(lam) or not 1 <= len(lam) <= R:
            raise ParameterError('interval %d: need between 1 and %d rows with one weight each' % (k, R))
        if np.any(lam < 0) or abs(lam.sum() - 1.0) > SIMPLEX_TOL:
            raise ParameterError('interval %d: weights must lie in the simplex' % k)
        for r in range(R):
            sample = entry.rows[r] if r < len(lam) else entry.rows[0]
            check_sample(spec, sample)
            w0[k, r], w[k, r], a_index[k, r] = sample.w0, sample.w, sample.a_index
        weights[k, :len(lam)] = lam

    return integrate(spec, 'relaxed', grid, w0, w, a_index, weights)


def schedule_chatter(relaxed: Process, eta: float) -> ChatterSchedule:
    """
    Splits every mixing interval into slices of width at most eta; inside a slice rows 0..n run
    in order for durations proportional to their weights. Intervals with a vertex weight are kept whole.
    """
    if relaxed.layer != 'relaxed':
        raise LayerError('chattering needs a relaxed process')
    if not 0 < eta <= relaxed.S / 4:
        raise ParameterError('slice width %g must lie in ]0, S/4] with S = %g' % (eta, relaxed.S))

    edges, source, rows = [0.0], [], []
    for k in range(relaxed.N):
        lam = relaxed.weights[k]
        active = np.flatnonzero(lam > 0)
        start, end = relaxed.grid[k], relaxed.grid[k + 1]
        if len(active) == 1:
            edges.append(end)
            source.append(k)
            rows.append(active[0])
            continue

        slices = int(np.ceil((end - start) / eta - 1e-9))
        width = (end - start) / slices
        fractions = np.cumsum(lam[active])
        for j in range(slices):
            left = start + j * width
            for r, frac in zip(active[:-1], fractions[:-1]):
                edges.append(left + width * frac)
                source.append(k)
                rows.append(r)
            edges.append(end if j == slices - 1 else start + (j + 1) * width)
            source.append(k)
            rows.append(active[-1])

    return ChatterSchedule(eta, np.array(edges), np.array(source), np.array(rows))


def chatter(spec: ProblemSpec, relaxed: Process, eta: float) -> Process:
    """
    Extended process approximating a relaxed one by time-slicing its rows
    :param spec: Problem
    :param relaxed: Relaxed layer process
    :param eta: Slice width
    :return: Extended layer Process on the refined grid
    """
    schedule = schedule_chatter(relaxed, eta)
    src, row = schedule.source, schedule.row
    proc = integrate(spec, 'extended', schedule.edges, relaxed.w0[src, row], relaxed.w[src, row],
                     relaxed.a_index[src, row])
    logger.debug('gapcert: chattered %d intervals into %d with eta=%g' % (relaxed.N, proc.N, eta))
    return proc


def chatter_error(spec: ProblemSpec, relaxed: Process, chattered: Process) -> float:
    """
    Sup-distance at the chattered nodes between the chattered trajectory and the relaxed control
    integrated on the same nodes
    """
    grid = chattered.grid
    source = np.searchsorted(relaxed.grid, 0.5 * (grid[:-1] + grid[1:]), side='right') - 1
    source = np.clip(source, 0, relaxed.N - 1)
    reference = integrate(spec, 'relaxed', grid, relaxed.w0[source], relaxed.w[source], relaxed.a_index[source],
                          relaxed.weights[source])
    return float(np.max(np.abs(chattered.states - reference.states)))


def inner_approximate(spec: ProblemSpec, ext: Process, w0_floor: float) -> InnerApproximation:
    """
    Lifts every sample with w0 < w0_floor to (w0_floor, (1 - w0_floor^d)^(1/d) w / |w|) and re-integrates
    :return: Strict process with sup-deviation of (y0, y) and the deviation of nu(S)
    """
    if not 0 < w0_floor < 1:
        raise ParameterError('w0 floor must lie in ]0, 1[')
    if ext.layer == 'relaxed':
        raise LayerError('inner approximation needs an extended process')

    w0 = ext.w0.copy()
    w = ext.w.copy()
    radius = (1.0 - w0_floor ** spec.d) ** (1.0 / spec.d)
    for k in np.flatnonzero(w0[:, 0] < w0_floor):
        norm = np.linalg.norm(w[k, 0])
        if norm == 0:
            raise DegenerateSampleError(int(k))
        w0[k, 0] = w0_floor
        w[k, 0] = radius * w[k, 0] / norm

    proc = integrate(spec, 'strict', ext.grid, w0, w, ext.a_index)
    error = float(np.max(np.abs(proc.states[:, :-1] - ext.states[:, :-1])))
    return InnerApproximation(proc, error, float(abs(proc.nu[-1] - ext.nu[-1])))
