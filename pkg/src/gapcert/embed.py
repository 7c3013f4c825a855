"""
Space-time embedding of original processes, its inverse, and the free-end-time rescaling.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .configuration import config
from .exceptions import ImpulsiveArcError, InvariantError, LayerError, ParameterError, RangeError
from .integrator import integrate, simulate
from .model import Process, ProblemSpec

logger = logging.getLogger('gapcert')


@dataclass(frozen=True, eq=False)
class OriginalProcess:
    """
    Process of the original problem in real time: controls u in U are unbounded,
    v is the running integral of |u|^d.
    """
    grid: np.ndarray
    u: np.ndarray
    a_index: np.ndarray
    x: np.ndarray
    v: np.ndarray

    @property
    def T(self) -> float:
        return float(self.grid[-1])

    @property
    def M(self) -> int:
        return len(self.grid) - 1

    def interval_at(self, t: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self.grid, t, side='right') - 1, 0, self.M - 1)


@dataclass(frozen=True, eq=False)
class TimeChange:
    """
    sigma(t) = t + v(t) tabulated on the original grid
    """
    t: np.ndarray
    sigma: np.ndarray

    @classmethod
    def from_original(cls, orig: OriginalProcess) -> 'TimeChange':
        if np.any(np.diff(orig.v) < -1e-12):
            raise InvariantError('v must be nondecreasing')
        return cls(orig.grid, orig.grid + orig.v)

    def inverse(self, s: np.ndarray) -> np.ndarray:
        return np.interp(s, self.sigma, self.t)


@dataclass(frozen=True, eq=False)
class RescaledProcess:
    """
    Fixed-horizon image on [0, horizon] of a process with free end-time S = (1 + zeta) * horizon
    """
    horizon: float
    zeta: np.ndarray
    grid: np.ndarray
    y_star: np.ndarray
    process: Process

    @property
    def endpoint(self) -> np.ndarray:
        return self.process.endpoint

    @property
    def end_time(self) -> float:
        return float(self.y_star[-1])


def simulate_original(spec: ProblemSpec, grid: np.ndarray, u: np.ndarray, a_index: Optional[np.ndarray] = None
                      ) -> OriginalProcess:
    """
    Integrates x' = f + sum_J g_J u^J, v' = |u|^d on the given time grid
    """
    grid = np.asarray(grid, dtype=float)
    u = np.asarray(u, dtype=float).reshape(len(grid) - 1, spec.m)
    a_index = np.zeros(len(u), dtype=int) if a_index is None else np.asarray(a_index, dtype=int)
    ones = np.ones((1, len(u), 1))
    states = simulate(spec, grid[None], ones, u[None, :, None, :], spec.params[a_index][None, :, None, :], ones)[0]
    return OriginalProcess(grid, u, a_index, states[:, 1:-1], states[:, -1])


def embed_original(spec: ProblemSpec, orig: OriginalProcess, nodes: Optional[int] = None) -> Process:
    """
    Maps an original process to the strict-sense process obtained by the time change s = t + v(t).
    s-nodes keep the original switch times sigma(t_k); each original interval is split into equal
    s-pieces and the state is re-integrated, so the result solves its own dynamics.
    :param spec: Problem
    :param orig: Original process
    :param nodes: Minimum number of s-intervals. Defaults to one per original interval
    :return: Strict layer Process
    """
    change = TimeChange.from_original(orig)
    lengths = np.diff(change.sigma)
    pieces = np.ones(orig.M, dtype=int)
    if nodes:
        pieces = np.maximum(1, np.ceil(nodes * lengths / change.sigma[-1] - 1e-9).astype(int))

    starts = np.repeat(change.sigma[:-1], pieces)
    offsets = np.concatenate([np.arange(p) / p for p in pieces])
    s = np.concatenate([starts + offsets * np.repeat(lengths, pieces), change.sigma[-1:]])
    s[0] = 0.0

    idx = np.repeat(np.arange(orig.M), pieces)
    u = orig.u[idx]
    scale = (1.0 + np.linalg.norm(u, axis=1) ** spec.d) ** (-1.0 / spec.d)
    return integrate(spec, 'strict', s, scale, scale[:, None] * u, orig.a_index[idx])


def invert_embedding(spec: ProblemSpec, proc: Process, w0_min: Optional[float] = None,
                     nodes: Optional[int] = None) -> OriginalProcess:
    """
    Recovers the original process from a strict-sense process. Time is t = y0(s) and u = w / w0.
    :param nodes: If given, resamples on a uniform t-grid with this many intervals
    """
    if proc.layer == 'relaxed':
        raise LayerError('inverse embedding needs a single control row')
    w0_min = config.W0_MIN if w0_min is None else w0_min
    bad = np.flatnonzero(proc.w0[:, 0] < w0_min)
    if len(bad):
        raise ImpulsiveArcError(bad, w0_min)

    t = proc.y0.copy()
    u = proc.w[:, 0] / proc.w0[:, 0, None]
    orig = OriginalProcess(t, u, proc.a_index[:, 0].copy(), proc.y.copy(), proc.nu.copy())
    if nodes is None:
        return orig

    grid = np.linspace(0.0, t[-1], nodes + 1)
    idx = orig.interval_at(0.5 * (grid[1:] + grid[:-1]))
    x = np.column_stack([np.interp(grid, t, orig.x[:, i]) for i in range(spec.n)])
    return OriginalProcess(grid, u[idx], orig.a_index[idx], x, np.interp(grid, t, orig.v))


def rescale_free_time(horizon: float, proc: Process, delta: Optional[float] = None) -> RescaledProcess:
    """
    Fixed-horizon image of a free end-time process: constant speed zeta = S / horizon - 1
    """
    delta = config.RESCALE_DELTA if delta is None else delta
    if not 0 < delta <= 0.5:
        raise ParameterError('rescaling bound must lie in ]0, 1/2], got %g' % delta)
    zeta = proc.S / horizon - 1.0
    if abs(zeta) > delta + 1e-12:
        raise RangeError('horizon %g deviates from %g by more than %g' % (proc.S, horizon, delta))

    grid = proc.grid / (1.0 + zeta)
    grid[-1] = horizon
    y_star = proc.grid.copy()
    return RescaledProcess(horizon, np.full(proc.N, zeta), grid, y_star, proc)


def time_grid(horizon: float, zeta: np.ndarray, intervals: int) -> np.ndarray:
    """
    Uniform grids on [0, (1 + zeta) * horizon], one row per zeta
    """
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    return (horizon * (1.0 + zeta))[:, None] * np.linspace(0.0, 1.0, intervals + 1)[None, :]
