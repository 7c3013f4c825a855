"""
Single-shooting transcription of the strict, extended and relaxed problems and an augmented Lagrangian
solver with a limited-memory quasi-Newton inner loop.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from statsd.defaults.django import statsd

from .configuration import config
from .embed import time_grid
from .exceptions import LayerError, ParameterError
from .integrator import integrate, simulate
from .model import LAYERS, Process, ProblemSpec, check_feasibility
from .utils import exec_multi_arg_func

logger = logging.getLogger('gapcert')

# Objective hook: states (B, N + 1, n + 2), grids (B, N + 1) -> values (B,)
Objective = Callable[[np.ndarray, np.ndarray], np.ndarray]

STATUS_RANK = {'converged': 0, 'stalled': 1, 'infeasible': 2}


class Transcription:
    """
    Decision vector layout, in order:
      * cone coefficients c, shape (N, R, r) with w = basis @ c and w0 = (1 - |w|^d)^(1/d);
      * relaxed layer only: weights of rows 0..n-1, shape (N, n), row n takes 1 - sum;
      * free end-time only: zeta with S = horizon * (1 + zeta).
    Inequalities g(z) <= 0: h at nodes 1..N, |w|^2 <= radius^2 per interval and row, simplex rows,
    target rows, budget.
    """
    def __init__(self, spec: ProblemSpec, layer: str, intervals: int, w0_floor: Optional[float] = None,
                 free_time: bool = True, horizon: Optional[float] = None, delta: Optional[float] = None,
                 a_index: Optional[np.ndarray] = None, objective: Optional[Objective] = None,
                 constraints: Sequence[str] = ('path', 'target', 'budget')):
        if layer not in LAYERS:
            raise LayerError('unknown layer `%s`' % layer)
        if intervals < 8:
            raise ParameterError('transcription needs at least 8 intervals, got %d' % intervals)
        if layer == 'strict':
            if w0_floor is None or not 0 < w0_floor < 1:
                raise ParameterError('strict layer needs a w0 floor in ]0, 1[')
        elif w0_floor is not None:
            raise LayerError('w0 floor only applies to the strict layer')

        self.spec = spec
        self.layer = layer
        self.N = intervals
        self.w0_floor = w0_floor
        self.free_time = free_time
        self.horizon = float(horizon or spec.horizon)
        self.delta = config.RESCALE_DELTA if delta is None else float(delta)
        self.objective = objective
        self.constraints = tuple(constraints)

        self.R = spec.n + 1 if layer == 'relaxed' else 1
        self.radius = 1.0 if w0_floor is None else (1.0 - w0_floor ** spec.d) ** (1.0 / spec.d)
        shape = (self.N, self.R)
        self.a_index = np.zeros(shape, dtype=int) if a_index is None else np.broadcast_to(a_index, shape).copy()

        cone = spec.cone
        self.n_coef = self.N * self.R * cone.size
        self.n_weights = self.N * spec.n if layer == 'relaxed' else 0
        self.dim = self.n_coef + self.n_weights + int(free_time)

        lower = [np.tile(cone.lower * self.radius, self.N * self.R), np.zeros(self.n_weights)]
        upper = [np.tile(cone.upper * self.radius, self.N * self.R), np.ones(self.n_weights)]
        if free_time:
            lower.append([-self.delta])
            upper.append([self.delta])
        self.lower = np.concatenate(lower)
        self.upper = np.concatenate(upper)

        self.groups = self._constraint_groups()

    def _constraint_groups(self) -> Dict[str, slice]:
        spec = self.spec
        sizes = [
            ('path', self.N if 'path' in self.constraints and spec.constrained else 0),
            ('sphere', self.N * self.R),
            ('simplex', self.N if self.layer == 'relaxed' else 0),
            ('target', len(spec.target.bound) if 'target' in self.constraints else 0),
            ('budget', 1 if 'budget' in self.constraints and np.isfinite(spec.budget) else 0),
        ]
        groups, start = {}, 0
        for name, size in sizes:
            groups[name] = slice(start, start + size)
            start += size
        self.n_constraints = start
        return groups

    def controls(self, Z: np.ndarray) -> Dict[str, np.ndarray]:
        """
        Decodes a batch of decision vectors (B, dim) into controls, weights and grids
        """
        spec = self.spec
        B = Z.shape[0]
        c = Z[:, :self.n_coef].reshape(B, self.N, self.R, spec.cone.size)
        w = c @ spec.cone.basis.T
        norm_d = np.linalg.norm(w, axis=-1) ** spec.d
        w0 = np.maximum(1.0 - norm_d, 0.0) ** (1.0 / spec.d)

        if self.layer == 'relaxed':
            lam = Z[:, self.n_coef:self.n_coef + self.n_weights].reshape(B, self.N, spec.n)
            weights = np.concatenate([lam, 1.0 - lam.sum(axis=-1, keepdims=True)], axis=-1)
        else:
            weights = np.ones((B, self.N, 1))

        zeta = Z[:, -1] if self.free_time else np.zeros(B)
        return {'w0': w0, 'w': w, 'weights': weights, 'grid': time_grid(self.horizon, zeta, self.N)}

    def evaluate(self, Z: np.ndarray):
        """
        Objective and constraint values for a batch of decision vectors
        :return: (f (B,), g (B, n_constraints), states (B, N + 1, n + 2))
        """
        spec = self.spec
        ctl = self.controls(Z)
        points = np.broadcast_to(spec.params[self.a_index], (Z.shape[0],) + self.a_index.shape + (spec.dynamics.q,))
        with np.errstate(all='ignore'):
            states = simulate(spec, ctl['grid'], ctl['w0'], ctl['w'], points, ctl['weights'], raise_on_blowup=False)
            states = np.nan_to_num(states, nan=1e10, posinf=1e10, neginf=-1e10)
            f = self._objective(states, ctl['grid'])

            g = np.empty((Z.shape[0], self.n_constraints))
            end = states[:, -1]
            groups = self.groups
            if groups['path'].stop > groups['path'].start:
                g[:, groups['path']] = spec.constraint.value(states[:, 1:, 0], states[:, 1:, 1:-1])
            g[:, groups['sphere']] = (np.sum(ctl['w'] ** 2, axis=-1) - self.radius ** 2).reshape(Z.shape[0], -1)
            if self.layer == 'relaxed':
                g[:, groups['simplex']] = -ctl['weights'][..., -1]
            if groups['target'].stop > groups['target'].start:
                g[:, groups['target']] = end[:, :-1] @ spec.target.matrix.T - spec.target.bound
            if groups['budget'].stop > groups['budget'].start:
                g[:, groups['budget']] = end[:, -1:] - spec.budget
        return np.nan_to_num(f, nan=1e10, posinf=1e10), np.nan_to_num(g, nan=1e10, posinf=1e10), states

    def _objective(self, states: np.ndarray, grids: np.ndarray) -> np.ndarray:
        if self.objective is not None:
            return self.objective(states, grids)
        end = states[:, -1]
        return self.spec.cost.value(end[:, 0], end[:, 1:-1], end[:, -1])

    def to_process(self, z: np.ndarray) -> Process:
        """
        Projects z onto the layer's control set and integrates the resulting process
        """
        spec = self.spec
        z = np.clip(z, self.lower, self.upper)
        ctl = self.controls(z[None])
        w = ctl['w'][0]
        norm = np.linalg.norm(w, axis=-1, keepdims=True)
        w = np.where(norm > self.radius, w * self.radius / np.maximum(norm, 1e-300), w)
        w0 = np.maximum(1.0 - np.linalg.norm(w, axis=-1) ** spec.d, 0.0) ** (1.0 / spec.d)
        if self.layer == 'strict':
            w0 = np.maximum(w0, self.w0_floor)

        weights = None
        if self.layer == 'relaxed':
            weights = np.maximum(ctl['weights'][0], 0.0)
            weights = weights / weights.sum(axis=-1, keepdims=True)
        return integrate(spec, self.layer, ctl['grid'][0], w0, w, self.a_index, weights)

    def process_objective(self, proc: Process) -> float:
        return float(self._objective(proc.states[None], proc.grid[None])[0])

    def initial_guess(self, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        spec = self.spec
        z = np.zeros(self.dim)
        if self.layer == 'relaxed':
            z[self.n_coef:self.n_coef + self.n_weights] = 1.0 / self.R
        if rng is None:
            return z

        c = rng.uniform(self.lower[:self.n_coef], self.upper[:self.n_coef]).reshape(self.N, self.R, spec.cone.size)
        w = c @ spec.cone.basis.T
        scale = np.minimum(1.0, 0.9 * self.radius / np.maximum(np.linalg.norm(w, axis=-1), 1e-300))
        z[:self.n_coef] = (c * scale[..., None]).ravel()
        if self.layer == 'relaxed':
            lam = rng.dirichlet(np.ones(self.R), size=self.N)
            z[self.n_coef:self.n_coef + self.n_weights] = lam[:, :-1].ravel()
        if self.free_time:
            z[-1] = rng.uniform(-0.5 * self.delta, 0.5 * self.delta)
        return z

    def pack(self, proc: Process) -> np.ndarray:
        """
        Decision vector reproducing a process; controls are resampled when the grids differ
        """
        spec = self.spec
        mids = (np.arange(self.N) + 0.5) / self.N * proc.S
        idx = np.clip(np.searchsorted(proc.grid, mids, side='right') - 1, 0, proc.N - 1)

        z = np.zeros(self.dim)
        coef = np.zeros((self.N, self.R, spec.cone.size))
        weights = np.zeros((self.N, self.R))
        for k, src in enumerate(idx):
            if proc.rows == self.R:
                rows = range(self.R)
                weights[k] = proc.weights[src]
            else:
                best = int(np.argmax(proc.weights[src]))
                rows = [best] * self.R
                weights[k, 0] = 1.0
            for r, prow in enumerate(rows):
                w = proc.w[src, prow]
                norm = np.linalg.norm(w)
                if norm > self.radius:
                    w = w * self.radius / norm
                coef[k, r] = spec.cone.coefficients(w)
        z[:self.n_coef] = coef.ravel()
        if self.layer == 'relaxed':
            z[self.n_coef:self.n_coef + self.n_weights] = weights[:, :-1].ravel()
        if self.free_time:
            z[-1] = proc.S / self.horizon - 1.0
        return np.clip(z, self.lower, self.upper)

    def with_params(self, a_index: np.ndarray) -> 'Transcription':
        clone = Transcription.__new__(Transcription)
        clone.__dict__.update(self.__dict__)
        clone.a_index = np.broadcast_to(a_index, (self.N, self.R)).copy()
        return clone


def transcribe(spec: ProblemSpec, layer: str, intervals: int, **options) -> Transcription:
    """
    Builds the transcription of one problem layer
    :param spec: Problem
    :param layer: strict, extended or relaxed
    :param intervals: Grid size N
    :param options: Transcription keyword options (w0_floor, free_time, horizon, delta, objective, ...)
    :return: Transcription
    """
    return Transcription(spec, layer, intervals, **options)


@dataclass(eq=False)
class SolveReport:
    process: Process
    objective: float
    kkt_residual: float
    violation: float
    status: str
    iterations: int
    inner_iterations: int
    evaluations: int
    elapsed: float
    multipliers: Dict[str, np.ndarray]
    decision: np.ndarray
    history: List[float] = field(default_factory=list)
    start: int = 0
    penalties: List[float] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status != 'infeasible' and self.violation <= config.TOL_FEAS * 10

    def rank_key(self):
        return (not self.feasible, self.objective if self.feasible else self.violation, self.start)


class _AugmentedLagrangian:
    """
    PHR augmented Lagrangian for g(z) <= 0 with forward-difference derivatives from one batched simulation
    """
    def __init__(self, trans: Transcription, fd_step: float):
        self.trans = trans
        self.fd_step = fd_step
        self.evaluations = 0

    def derivatives(self, z: np.ndarray):
        trans = self.trans
        h = self.fd_step * np.maximum(1.0, np.abs(z))
        h = np.where(z + h > trans.upper, -h, h)
        Z = np.vstack([z, z + np.diag(h)])
        f, g, _ = trans.evaluate(Z)
        self.evaluations += len(Z)
        grad_f = (f[1:] - f[0]) / h
        jac_g = ((g[1:] - g[0]) / h[:, None]).T
        return f[0], g[0], grad_f, jac_g

    @staticmethod
    def value(f: float, g: np.ndarray, y: np.ndarray, mu: float) -> float:
        return f + (np.sum(np.maximum(0.0, y + mu * g) ** 2) - np.sum(y ** 2)) / (2.0 * mu)

    def function(self, y: np.ndarray, mu: float) -> Callable:
        def _al(z):
            f, g, grad_f, jac_g = self.derivatives(z)
            shifted = np.maximum(0.0, y + mu * g)
            return self.value(f, g, y, mu), grad_f + jac_g.T @ shifted
        return _al


def _projected_gradient(trans: Transcription, z: np.ndarray, grad: np.ndarray) -> np.ndarray:
    at_lower = (z <= trans.lower + 1e-10) & (grad > 0)
    at_upper = (z >= trans.upper - 1e-10) & (grad < 0)
    return np.where(at_lower | at_upper, 0.0, grad)


def solve_nlp(trans: Transcription, init: Optional[Any] = None, tol_feas: Optional[float] = None,
              tol_kkt: Optional[float] = None, max_outer: Optional[int] = None, max_inner: Optional[int] = None,
              start: int = 0) -> SolveReport:
    """
    Solves a transcription by the augmented Lagrangian method
    :param trans: Transcription
    :param init: Initial Process, decision vector or None for the cold start
    :param tol_feas: Constraint violation tolerance
    :param tol_kkt: Projected Lagrangian gradient tolerance
    :param max_outer: Outer iteration cap
    :param max_inner: Inner quasi-Newton iteration cap per outer iteration
    :param start: Multistart index, kept in the report
    :return: SolveReport; never raises on non-convergence
    """
    tol_feas = config.TOL_FEAS if tol_feas is None else tol_feas
    tol_kkt = config.TOL_KKT if tol_kkt is None else tol_kkt
    max_outer = max_outer or config.MAX_OUTER_ITERATIONS
    max_inner = max_inner or config.MAX_INNER_ITERATIONS

    if init is None:
        z = trans.initial_guess()
    elif isinstance(init, Process):
        z = trans.pack(init)
    else:
        z = np.clip(np.asarray(init, dtype=float), trans.lower, trans.upper)

    al = _AugmentedLagrangian(trans, config.FD_STEP)
    bounds = list(zip(trans.lower, trans.upper))
    y = np.zeros(trans.n_constraints)
    mu = float(config.INITIAL_PENALTY)
    prev_violation = np.inf
    status, history, penalties, inner_iterations = 'stalled', [], [], 0
    best = None
    started = time.time()
    kkt = violation = np.inf
    outer = 0

    with statsd.timer('%s.solve.%s' % (config.STATSD_PREFIX, trans.layer)):
        for outer in range(1, max_outer + 1):
            res = minimize(al.function(y, mu), z, jac=True, method='L-BFGS-B', bounds=bounds,
                           options={'maxiter': max_inner, 'gtol': config.INNER_TOL, 'ftol': 1e-12})
            z = np.clip(res.x, trans.lower, trans.upper)
            inner_iterations += res.nit

            f, g, grad_f, jac_g = al.derivatives(z)
            violation = float(max(np.max(g, initial=0.0), 0.0))
            y = np.maximum(0.0, y + mu * g)
            stationarity = _projected_gradient(trans, z, grad_f + jac_g.T @ y)
            kkt = float(max(np.max(np.abs(stationarity), initial=0.0), np.max(np.abs(y * g), initial=0.0)))
            history.append(float(al.value(f, g, y, mu)))
            penalties.append(mu)

            key = (violation > tol_feas, f if violation <= tol_feas else violation)
            if best is None or key < best[0]:
                best = (key, z.copy(), kkt, violation)

            logger.debug('gapcert: %s outer %d f=%.6g violation=%.3g kkt=%.3g mu=%.3g'
                         % (trans.layer, outer, f, violation, kkt, mu))
            if violation <= tol_feas and kkt <= tol_kkt:
                status = 'converged'
                break
            if violation > config.VIOLATION_DECREASE * prev_violation:
                mu = min(mu * config.PENALTY_GROWTH, config.MAX_PENALTY)
            prev_violation = violation

    if status != 'converged':
        _, z, kkt, violation = best

    proc = trans.to_process(z)
    record = check_feasibility(trans.spec, proc, tol_feas)
    defects = {'path': record.max_constraint_violation, 'target': record.target_distance,
               'budget': record.budget_excess}
    violation = max((defects[name] for name in trans.constraints if name in defects), default=0.0)
    if status != 'converged' and violation > tol_feas and mu >= config.MAX_PENALTY:
        status = 'infeasible'
    objective = trans.process_objective(proc)
    groups = {name: y[sl].copy() for name, sl in trans.groups.items()}

    statsd.incr('%s.solve.status.%s' % (config.STATSD_PREFIX, status))
    statsd.gauge('%s.solve.violation' % config.STATSD_PREFIX, violation)
    elapsed = time.time() - started
    logger.info('gapcert: %s solve (N=%d) %s after %d outer iterations: objective=%.8g violation=%.3g'
                % (trans.layer, trans.N, status, outer, objective, violation))
    if status == 'stalled':
        logger.warning('gapcert: %s solve stalled with kkt residual %.3g' % (trans.layer, kkt))

    return SolveReport(proc, objective, kkt, violation, status, outer, inner_iterations, al.evaluations, elapsed,
                       groups, z, history, start, penalties)


def _solve_start(start: int, trans: Transcription, starts: List[np.ndarray], params: List[np.ndarray],
                 options: Dict[str, Any]) -> SolveReport:
    return solve_nlp(trans.with_params(params[start]), starts[start], start=start, **options)


def multistart(trans: Transcription, seeds: int = 1, rng_seed: int = 0, init: Optional[Process] = None,
               threads_count: Optional[int] = None, **options) -> SolveReport:
    """
    Best of `seeds` solves. Start 0 is the default (or given) initialization, the others are drawn
    from numpy's default_rng(rng_seed), so results do not depend on scheduling.
    :return: Best SolveReport: feasible reports by objective first, then by violation, ties by start index
    """
    if seeds < 1:
        raise ParameterError('multistart needs at least one start')
    rng = np.random.default_rng(rng_seed)
    starts = [trans.pack(init) if init is not None else trans.initial_guess()]
    params = [trans.a_index]
    n_points = len(trans.spec.params)
    for _ in range(seeds - 1):
        starts.append(trans.initial_guess(rng))
        params.append(rng.integers(0, n_points, size=trans.a_index.shape) if n_points > 1 else trans.a_index)

    reports = exec_multi_arg_func(_solve_start, range(seeds), trans, starts, params, options,
                                  threads_count=threads_count or config.THREADS)
    best = min(reports, key=lambda r: r.rank_key())
    logger.info('gapcert: multistart best of %d: start %d objective=%.8g' % (seeds, best.start, best.objective))
    return best
