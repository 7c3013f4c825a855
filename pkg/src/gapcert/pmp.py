"""
Maximum principle residuals, multiplier search by linear programming and the initial-point
constraint qualification check.

Multipliers are (p0, p) per node, a budget weight pi <= 0, a cost weight gamma >= 0 and an atomic
measure on grid nodes with convex selections over the active constraint gradients. With jumps
J_k = mass_k * selection_k @ generators_k, the shifted costate is
    q(s_k-) = p_k + sum_{j<k} J_j,    q(s_k+) = q(s_k-) + J_k,    q(S) = q(s_N+).
Between nodes q follows the transposed transition matrix of the linearized (y0, y) flow.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import linprog, nnls
from statsd.defaults.django import statsd

from .configuration import config
from .exceptions import InvariantError, NumericError, ParameterError
from .integrator import dynamics_residual
from .model import Process, ProblemSpec, check_feasibility
from .utils import exec_multi_arg_func

logger = logging.getLogger('gapcert')

MODES = ('fixed', 'free-impulsive')

CLASSIFICATIONS = ('not-extremal', 'normal', 'nondegenerate-normal', 'normal-but-degenerate-possible', 'abnormal',
                   'nondegenerate-abnormal')

# Classes whose certificate includes a multiplier with gamma = 0
ABNORMAL_CLASSES = frozenset(CLASSIFICATIONS) - {'not-extremal', 'normal'}

LP_OPTIONS = {'primal_feasibility_tolerance': 1e-10, 'dual_feasibility_tolerance': 1e-10}


class ControlSamples(NamedTuple):
    """
    Finite search grid over W x A
    """
    w0: np.ndarray
    w: np.ndarray
    a_index: np.ndarray

    def __len__(self):
        return len(self.w0)


def _directions(m: int, count: int) -> np.ndarray:
    if m == 1:
        return np.array([[1.0], [-1.0]])
    if m == 2:
        angles = 2 * np.pi * np.arange(count) / count
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
        dirs[np.abs(dirs) < 1e-15] = 0.0
        return dirs
    dirs = np.array([d for d in itertools.product((-1.0, 0.0, 1.0), repeat=m) if any(d)])
    return dirs / np.linalg.norm(dirs, axis=1)[:, None]


def control_samples(spec: ProblemSpec, levels: Optional[int] = None, directions: Optional[int] = None
                    ) -> ControlSamples:
    """
    Builds the sample grid: `levels` values of w0 in [0, 1], unit directions inside the cone scaled to
    the sphere identity, crossed with every parameter point
    """
    levels = levels or config.W_SAMPLE_LEVELS
    directions = directions or config.W_SAMPLE_DIRECTIONS
    dirs = np.array([u for u in _directions(spec.m, directions) if spec.cone.contains(u)]).reshape(-1, spec.m)

    w0, w = [1.0], [np.zeros(spec.m)]
    for level in np.linspace(0.0, 1.0, max(levels, 2))[:-1]:
        radius = (1.0 - level ** spec.d) ** (1.0 / spec.d)
        for u in dirs:
            w0.append(level)
            w.append(radius * u)

    count = len(w0)
    n_points = len(spec.params)
    return ControlSamples(np.tile(w0, n_points), np.tile(np.array(w), (n_points, 1)),
                          np.repeat(np.arange(n_points), count))


def _velocity(spec: ProblemSpec, t: float, x: np.ndarray, w0: np.ndarray, w: np.ndarray, a_index: np.ndarray
              ) -> np.ndarray:
    w0 = np.atleast_1d(w0)
    shape = w0.shape
    tb = np.full(shape, float(t))
    xb = np.broadcast_to(x, shape + (spec.n,))
    return spec.dynamics(tb, xb, w0, np.atleast_2d(w), spec.params[np.atleast_1d(a_index)])


def _flow_jacobian(spec: ProblemSpec, proc: Process, k: int, state: np.ndarray) -> np.ndarray:
    """
    (1 + n) x (1 + n) Jacobian of the (y0, y) velocity on interval k at the given state, weighted over rows
    """
    n, R = spec.n, proc.rows
    t = np.full(R, state[0])
    x = np.broadcast_to(state[1:n + 1], (R, n))
    a = spec.params[proc.a_index[k]]
    fx = spec.dynamics.jacobian(t, x, proc.w0[k], proc.w[k], a)
    ft = spec.dynamics.time_partial(t, x, proc.w0[k], proc.w[k], a)
    jac = np.zeros((n + 1, n + 1))
    jac[1:, 0] = np.sum(proc.weights[k][:, None] * ft, axis=0)
    jac[1:, 1:] = np.sum(proc.weights[k][:, None, None] * fx, axis=0)
    if not np.all(np.isfinite(jac)):
        raise NumericError('non-finite Jacobian on interval %d' % k)
    return jac


def transition(spec: ProblemSpec, proc: Process, k: int) -> np.ndarray:
    """
    RK4 transition matrix of the linearized (y0, y) flow over interval k
    """
    start, end = proc.states[k, :-1], proc.states[k + 1, :-1]
    h = proc.grid[k + 1] - proc.grid[k]
    eye = np.eye(spec.n + 1)
    ja = _flow_jacobian(spec, proc, k, start)
    jm = _flow_jacobian(spec, proc, k, 0.5 * (start + end))
    jb = _flow_jacobian(spec, proc, k, end)
    k1 = ja
    k2 = jm @ (eye + 0.5 * h * k1)
    k3 = jm @ (eye + 0.5 * h * k2)
    k4 = jb @ (eye + h * k3)
    return eye + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def adjoint_step(spec: ProblemSpec, proc: Process, q_next: np.ndarray, k: int) -> np.ndarray:
    """
    Increment p(s_k) - p(s_{k+1}) of the adjoint over interval k, given q just left of node k + 1
    :param spec: Problem
    :param proc: Reference process
    :param q_next: (q0, q) at s_{k+1}-
    :param k: Interval index
    :return: Vector of size 1 + n
    """
    q_next = np.asarray(q_next, dtype=float)
    return transition(spec, proc, k).T @ q_next - q_next


def transitions(spec: ProblemSpec, proc: Process) -> np.ndarray:
    return np.array([transition(spec, proc, k) for k in range(proc.N)])


@dataclass(frozen=True, eq=False)
class MultiplierSet:
    p: np.ndarray
    gamma: float
    pi: float
    nodes: np.ndarray
    masses: np.ndarray
    selections: Tuple[np.ndarray, ...]
    generators: Tuple[np.ndarray, ...]
    meta: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.gamma < 0 or self.pi > 0 or np.any(np.asarray(self.masses) < 0):
            raise InvariantError('multipliers need gamma >= 0, pi <= 0 and nonnegative masses')

    @property
    def N(self) -> int:
        return self.p.shape[0] - 1

    def jumps(self) -> np.ndarray:
        out = np.zeros_like(self.p)
        for node, mass, sel, gens in zip(self.nodes, self.masses, self.selections, self.generators):
            out[node] += mass * (sel @ gens)
        return out

    @property
    def q_minus(self) -> np.ndarray:
        jumps = self.jumps()
        before = np.concatenate([np.zeros((1, self.p.shape[1])), np.cumsum(jumps, axis=0)[:-1]])
        return self.p + before

    @property
    def q_plus(self) -> np.ndarray:
        return self.q_minus + self.jumps()

    @property
    def q(self) -> np.ndarray:
        """
        q(s_k) with atoms strictly before s_k, closed at S
        """
        q = self.q_minus
        q[-1] = self.q_plus[-1]
        return q

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    @property
    def interior_mass(self) -> float:
        return float(np.sum(np.asarray(self.masses)[np.asarray(self.nodes) >= 1]))

    def scaled(self, factor: float) -> 'MultiplierSet':
        return MultiplierSet(self.p * factor, self.gamma * factor, self.pi * factor, self.nodes,
                             np.asarray(self.masses) * factor, self.selections, self.generators, dict(self.meta))


def _active_generators(spec: ProblemSpec, proc: Process, k: int, tol: float) -> Optional[np.ndarray]:
    if not spec.constrained:
        return None
    t, x, v = proc.y0[k], proc.y[k], proc.nu[k]
    if float(spec.constraint.value(t, x, v)) < -tol:
        return None
    return np.atleast_2d(spec.constraint.generators(t, x, v, tol))[:, :spec.n + 1]


def _own_rows(proc: Process, k: int) -> np.ndarray:
    return np.flatnonzero(proc.weights[k] > 0)


def _evaluation_points(proc: Process):
    """
    (interval, node, side) triples: each interval is checked at both ends with the one-sided q
    """
    for k in range(proc.N):
        yield k, k, 'plus'
        yield k, k + 1, 'minus'


class _HamiltonianData:
    """
    Sampled Hamiltonian differences at every evaluation point, shared by the LP and the residual table
    """
    def __init__(self, spec: ProblemSpec, proc: Process, samples: ControlSamples):
        self.points = []
        sample_w0d = samples.w0 ** spec.d
        sample_nud = np.linalg.norm(samples.w, axis=1) ** spec.d
        for k, node, side in _evaluation_points(proc):
            t, x = proc.y0[node], proc.y[node]
            sample_f = _velocity(spec, t, x, samples.w0, samples.w, samples.a_index)
            for r in _own_rows(proc, k):
                own_w0d = proc.w0[k, r] ** spec.d
                own_nud = np.linalg.norm(proc.w[k, r]) ** spec.d
                own_f = _velocity(spec, t, x, proc.w0[k, r], proc.w[k, r], proc.a_index[k, r])[0]
                own = np.concatenate([[own_w0d], own_f, [own_nud]])
                delta = np.column_stack([sample_w0d - own_w0d, sample_f - own_f, sample_nud - own_nud])
                self.points.append((k, node, side, own, delta))


class ExtremalReport(NamedTuple):
    classification: str
    mode: str
    status: str
    witnesses: Dict[str, MultiplierSet]
    residuals: Dict[str, Dict[str, float]]
    values: Dict[str, float]
    notes: List[str]


class _MultiplierProgram:
    """
    Linear program over u = (q(S-) base, pi, gamma, eta, atom weights); q at every node is a linear map of u
    """
    def __init__(self, spec: ProblemSpec, proc: Process, mode: str, phis: np.ndarray,
                 hamiltonian: _HamiltonianData):
        self.spec = spec
        self.proc = proc
        self.mode = mode
        tol = config.TOL_ACTIVE
        n1 = spec.n + 1
        end = proc.endpoint

        self.target_rows = spec.target.active_rows(end[:-1], tol)
        self.budget_active = bool(np.isfinite(spec.budget) and end[-1] >= spec.budget - tol)
        grad_psi = np.asarray(spec.cost.gradient(end[0], end[1:-1], end[-1]), dtype=float)
        self.grad_psi = grad_psi

        self.atoms = []
        n_cols = n1 + 2 + len(self.target_rows) + int(self.budget_active)
        for k in range(proc.N + 1):
            gens = _active_generators(spec, proc, k, tol)
            if gens is not None and len(gens):
                self.atoms.append((k, gens, slice(n_cols, n_cols + len(gens))))
                n_cols += len(gens)
        self.U = n_cols
        self.i_pi, self.i_gamma = n1, n1 + 1
        self.eta = slice(n1 + 2, n1 + 2 + len(self.target_rows) + int(self.budget_active))
        self.pi_fixed = abs(grad_psi[-1]) < 1e-14 and not self.budget_active

        jumps = np.zeros((proc.N + 1, n1, self.U))
        for k, gens, cols in self.atoms:
            jumps[k][:, cols] = gens.T
        self.jumps = jumps

        qm = np.zeros((proc.N + 1, n1, self.U))
        qp = np.zeros_like(qm)
        qm[proc.N][:, :n1] = np.eye(n1)
        qp[proc.N] = qm[proc.N] + jumps[proc.N]
        for k in range(proc.N - 1, -1, -1):
            qp[k] = phis[k].T @ qm[k + 1]
            qm[k] = qp[k] - jumps[k]
        self.q_minus, self.q_plus = qm, qp
        self.p_end = qm[proc.N] - jumps[:proc.N].sum(axis=0)

        self._build_rows(hamiltonian)

    def _pi_row(self) -> np.ndarray:
        row = np.zeros(self.U)
        row[self.i_pi] = 1.0
        return row

    def _build_rows(self, hamiltonian: _HamiltonianData) -> None:
        spec, slack = self.spec, config.HAMILTONIAN_SLACK
        e_pi = self._pi_row()
        ub = []
        for k, node, side, own, delta in hamiltonian.points:
            Q = self.q_plus[node] if side == 'plus' else self.q_minus[node]
            ub.append(delta[:, :-1] @ Q + delta[:, -1:] * e_pi)
            if self.mode == 'free-impulsive':
                h_own = own[:-1] @ Q + own[-1] * e_pi
                ub.append(np.vstack([h_own, -h_own]))
        self.A_ub = np.vstack(ub) if ub else np.zeros((0, self.U))
        self.b_ub = np.full(len(self.A_ub), slack)

        n1 = spec.n + 1
        eq = np.zeros((n1 + 1, self.U))
        eq[:n1] = self.q_plus[self.proc.N]
        eq[:n1, self.i_gamma] += self.grad_psi[:n1]
        cols = range(self.eta.start, self.eta.stop)
        for col, row in zip(cols, self.target_rows):
            eq[:n1, col] += spec.target.matrix[row]
        eq[n1, self.i_pi] = 1.0
        eq[n1, self.i_gamma] += self.grad_psi[-1]
        if self.budget_active:
            eq[n1, self.eta.stop - 1] = 1.0
        self.A_eq, self.b_eq = eq, np.zeros(n1 + 1)

    def bounds(self, gamma_free: bool) -> List[Tuple[float, float]]:
        n1 = self.spec.n + 1
        bounds = [(-1.0, 1.0)] * n1
        bounds.append((0.0, 0.0) if self.pi_fixed else (-1.0, 0.0))
        bounds.append((0.0, 1.0) if gamma_free else (0.0, 0.0))
        bounds.extend([(0.0, 1.0)] * (self.U - n1 - 2))
        return bounds

    def atom_mass(self, first_node: int = 0) -> np.ndarray:
        c = np.zeros(self.U)
        for k, _, cols in self.atoms:
            if k >= first_node:
                c[cols] = 1.0
        return c

    def nontriviality_objectives(self, with_gamma: bool) -> List[Tuple[str, np.ndarray]]:
        objectives = []
        for j in range(self.spec.n + 1):
            objectives.append(('+p%d(S)' % j, self.p_end[j]))
            objectives.append(('-p%d(S)' % j, -self.p_end[j]))
        objectives.append(('mass', self.atom_mass()))
        if with_gamma:
            gamma = np.zeros(self.U)
            gamma[self.i_gamma] = 1.0
            objectives.append(('gamma', gamma))
        return objectives

    def strengthened_objectives(self) -> List[Tuple[str, np.ndarray]]:
        N = self.proc.N
        probes = np.unique(np.round(np.linspace(0, N, min(config.PROBE_NODES, N + 1))).astype(int))
        objectives = [('mass]0,S]', self.atom_mass(1))]
        for k in probes:
            sides = []
            if k < N:
                sides.append(('+', self.q_plus[k]))
            if k >= 1:
                sides.append(('-', self.q_minus[k]))
            for side, Q in sides:
                for j in range(self.spec.n + 1):
                    objectives.append(('+q%d(%d%s)' % (j, k, side), Q[j]))
                    objectives.append(('-q%d(%d%s)' % (j, k, side), -Q[j]))
        return objectives

    def maximize(self, objective: Tuple[str, np.ndarray], gamma_free: bool):
        label, c = objective
        res = linprog(-c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq, b_eq=self.b_eq,
                      bounds=self.bounds(gamma_free), method='highs-ds', options=LP_OPTIONS)
        if res.status != 0:
            logger.warning('gapcert: multiplier LP `%s` failed: %s' % (label, res.message))
            return label, np.nan, None
        return label, float(c @ res.x), res.x

    def witness(self, u: np.ndarray, phis: np.ndarray) -> MultiplierSet:
        n1 = self.spec.n + 1
        N = self.proc.N
        nodes, masses, selections, generators = [], [], [], []
        jumps = np.zeros((N + 1, n1))
        for k, gens, cols in self.atoms:
            weights = np.maximum(u[cols], 0.0)
            mass = weights.sum()
            if mass <= 1e-14:
                continue
            nodes.append(k)
            masses.append(mass)
            selections.append(weights / mass)
            generators.append(gens)
            jumps[k] += weights @ gens

        q_minus = np.zeros((N + 1, n1))
        q_minus[N] = u[:n1]
        for k in range(N - 1, -1, -1):
            q_minus[k] = phis[k].T @ q_minus[k + 1] - jumps[k]
        p = q_minus - np.concatenate([np.zeros((1, n1)), np.cumsum(jumps, axis=0)[:-1]])

        gamma = max(float(u[self.i_gamma]), 0.0)
        pi = min(float(u[self.i_pi]), 0.0)
        return MultiplierSet(p, gamma, pi, np.array(nodes, dtype=int), np.array(masses), tuple(selections),
                             tuple(generators))


def _check_inputs(spec: ProblemSpec, proc: Process, mode: str) -> None:
    if mode not in MODES:
        raise ParameterError('unknown mode `%s`, expected one of %s' % (mode, ', '.join(MODES)))
    if proc.states.shape[1] != spec.n + 2:
        raise ParameterError('process state dimension does not match the problem')


def residuals(spec: ProblemSpec, proc: Process, mult: MultiplierSet, mode: str = 'free-impulsive',
              samples: Optional[ControlSamples] = None, phis: Optional[np.ndarray] = None,
              hamiltonian: Optional[_HamiltonianData] = None) -> Dict[str, float]:
    """
    Evaluates every maximum principle condition for one multiplier set
    :param spec: Problem
    :param proc: Reference process
    :param mult: Multipliers
    :param mode: fixed or free-impulsive. The Hamiltonian-zero row is only checked in free-impulsive mode
    :return: Residual table: adjoint, transversality, hamiltonian_max, hamiltonian_zero, support, selection
        defects and the nontriviality / strengthened nontriviality values
    """
    _check_inputs(spec, proc, mode)
    if mult.p.shape != (proc.N + 1, spec.n + 1):
        raise ParameterError('multiplier arrays do not match the process grid')
    samples = control_samples(spec) if samples is None else samples
    phis = transitions(spec, proc) if phis is None else phis
    hamiltonian = _HamiltonianData(spec, proc, samples) if hamiltonian is None else hamiltonian
    tol = config.TOL_ACTIVE

    q_minus, q_plus = mult.q_minus, mult.q_plus
    adjoint = max((float(np.max(np.abs(q_plus[k] - phis[k].T @ q_minus[k + 1]))) for k in range(proc.N)),
                  default=0.0)

    end = proc.endpoint
    n1 = spec.n + 1
    grad_psi = np.asarray(spec.cost.gradient(end[0], end[1:-1], end[-1]), dtype=float)
    lhs = -np.concatenate([q_plus[-1], [mult.pi]]) - mult.gamma * grad_psi
    cone = [np.concatenate([spec.target.matrix[i], [0.0]]) for i in spec.target.active_rows(end[:-1], tol)]
    if np.isfinite(spec.budget) and end[-1] >= spec.budget - tol:
        cone.append(np.eye(n1 + 1)[-1])
    if cone:
        transversality = float(nnls(np.array(cone).T, lhs)[1])
    else:
        transversality = float(np.linalg.norm(lhs))

    h_max, h_zero = 0.0, 0.0
    for k, node, side, own, delta in hamiltonian.points:
        Q = q_plus[node] if side == 'plus' else q_minus[node]
        coef = np.concatenate([Q, [mult.pi]])
        h_max = max(h_max, float(np.max(delta @ coef, initial=0.0)))
        h_zero = max(h_zero, abs(float(own @ coef)))

    h_values = spec.constraint.value(proc.y0, proc.y, proc.nu) if spec.constrained else np.full(proc.N + 1, -np.inf)
    support = float(sum(mass for node, mass in zip(mult.nodes, mult.masses) if h_values[node] < -tol))
    selection = max((float(np.sum(np.maximum(-s, 0.0)) + abs(np.sum(s) - 1.0)) for s in mult.selections),
                    default=0.0)

    ess_sup = max(float(np.max(np.abs(q_plus[:-1]))), float(np.max(np.abs(q_minus[1:]))))
    return {
        'adjoint': adjoint,
        'transversality': transversality,
        'hamiltonian_max': h_max,
        'hamiltonian_zero': h_zero if mode == 'free-impulsive' else 0.0,
        'support': support,
        'selection': selection,
        'nontriviality': float(np.max(np.abs(mult.p))) + mult.total_mass + mult.gamma,
        'strengthened': mult.interior_mass + ess_sup + mult.gamma,
    }


DEFECTS = ('adjoint', 'transversality', 'hamiltonian_max', 'hamiltonian_zero', 'support', 'selection')


def _passes(table: Dict[str, float]) -> bool:
    return all(table[name] <= config.RESIDUAL_TOL for name in DEFECTS)


def _best(results):
    valid = [r for r in results if r[2] is not None]
    if not valid:
        return -np.inf, None, len(valid) < len(results)
    label, value, u = max(valid, key=lambda r: (r[1], r[0]))
    return value, u, len(valid) < len(results)


def _run_family(program: _MultiplierProgram, objectives, gamma_free: bool):
    return exec_multi_arg_func(program.maximize, objectives, gamma_free, threads_count=config.THREADS)


def classify(spec: ProblemSpec, proc: Process, mode: str = 'free-impulsive',
             samples: Optional[ControlSamples] = None, strengthened: bool = True) -> ExtremalReport:
    """
    Searches the multiplier cone of a process and classifies it.
    :param spec: Problem
    :param proc: Reference process, feasible within 10 * TOL_FEAS
    :param mode: fixed or free-impulsive (adds H = 0 along the process)
    :param samples: Hamiltonian search grid over W x A
    :param strengthened: Run the strengthened-nontriviality family for gamma = 0
    :return: ExtremalReport; LP failures degrade the report instead of raising
    """
    _check_inputs(spec, proc, mode)
    record = check_feasibility(spec, proc, 10 * config.TOL_FEAS)
    if not record.feasible:
        raise ParameterError('classification needs a feasible process: constraint %.3g, target %.3g, budget %.3g'
                             % (record.max_constraint_violation, record.target_distance, record.budget_excess))
    residual = dynamics_residual(spec, proc)
    if residual > 10 * config.TOL_FEAS:
        logger.warning('gapcert: stored states deviate from the dynamics by %.3g' % residual)
    samples = control_samples(spec) if samples is None else samples
    if len(samples) == 0:
        raise ParameterError('empty control sample grid')

    with statsd.timer('%s.certify' % config.STATSD_PREFIX):
        phis = transitions(spec, proc)
        hamiltonian = _HamiltonianData(spec, proc, samples)
        program = _MultiplierProgram(spec, proc, mode, phis, hamiltonian)
        notes = []
        if not spec.constraint.smooth:
            notes.append('constraint generators are the gradients of the active max pieces')

        any_value, any_u, failed_any = _best(_run_family(program, program.nontriviality_objectives(True), True))
        abn_value, abn_u, failed_abn = _best(_run_family(program, program.nontriviality_objectives(False), False))
        _, gamma_value, gamma_u = program.maximize(('gamma', np.eye(program.U)[program.i_gamma]), True)
        gamma_value = -np.inf if gamma_u is None else gamma_value

        nd_value, nd_u, failed_nd = -np.inf, None, False
        if strengthened:
            nd_value, nd_u, failed_nd = _best(_run_family(program, program.strengthened_objectives(), False))

    extremal = any_value >= config.NONTRIVIALITY_EPS
    abnormal = abn_value >= config.NONTRIVIALITY_EPS
    nondegenerate_abnormal = nd_value >= config.NONDEGENERACY_EPS
    degraded = failed_any or failed_abn or failed_nd or gamma_u is None

    if nondegenerate_abnormal and not abnormal:
        raise InvariantError('nondegenerate gamma = 0 multiplier found but the gamma = 0 family is trivial')

    if not extremal:
        classification = 'not-extremal'
    elif nondegenerate_abnormal:
        classification = 'nondegenerate-abnormal'
    elif not abnormal:
        classification = 'normal'
    elif not strengthened or failed_nd:
        classification = 'abnormal'
    elif gamma_value >= config.NONTRIVIALITY_EPS:
        classification = 'nondegenerate-normal'
    else:
        classification = 'normal-but-degenerate-possible'

    candidates = {'extremal': any_u if extremal else None, 'abnormal': abn_u if abnormal else None,
                  'normal': gamma_u if gamma_value >= config.NONTRIVIALITY_EPS else None,
                  'nondegenerate-abnormal': nd_u if nondegenerate_abnormal else None}
    witnesses, tables = {}, {}
    for name, u in candidates.items():
        if u is None:
            continue
        mult = program.witness(u, phis)
        table = residuals(spec, proc, mult, mode, samples, phis, hamiltonian)
        if not _passes(table):
            logger.warning('gapcert: %s witness failed the residual audit: %s' % (name, table))
            degraded = True
            continue
        witnesses[name] = mult
        tables[name] = table

    values = {'nontrivial': any_value, 'abnormal': abn_value, 'gamma': gamma_value, 'strengthened': nd_value}
    status = 'degraded' if degraded else 'ok'
    statsd.incr('%s.certify.%s' % (config.STATSD_PREFIX, classification))
    logger.info('gapcert: %s process classified as %s (%s mode, status %s)'
                % (proc.layer, classification, mode, status))
    return ExtremalReport(classification, mode, status, witnesses, tables, values, notes)


class CQReport(NamedTuple):
    boundary: bool
    branch: Optional[str]
    verdict: str
    margin: float
    delta: float
    delta1: float
    witnesses: List[Tuple[float, np.ndarray, int]]
    intervals: np.ndarray


def check_cq_h6(spec: ProblemSpec, proc: Process, s_bar: float, samples: Optional[ControlSamples] = None
                ) -> CQReport:
    """
    Initial-point constraint qualification on [0, s_bar]: a single sampled control must decrease every
    active constraint gradient against the reference control with a uniform margin, and either the
    reference keeps w0 > 0 there or its own velocity points inward.
    :return: CQReport with the distinct witness samples, one per interval of [0, s_bar]
    """
    samples = control_samples(spec) if samples is None else samples
    if len(samples) == 0:
        raise ParameterError('empty control sample grid')
    if not 0 < s_bar <= proc.S:
        raise ParameterError('s_bar must lie in ]0, S], got %g' % s_bar)

    tol = config.TOL_ACTIVE
    x0 = spec.x0
    h0 = float(spec.constraint.value(0.0, x0, 0.0)) if spec.constrained else -np.inf
    probe = 1e-6
    nearby = [float(spec.constraint.value(0.0, x0 + sign * probe * e, 0.0))
              for e in np.eye(spec.n) for sign in (1.0, -1.0)] if spec.constrained else []
    boundary = h0 >= -tol or (bool(nearby) and max(nearby) >= 0)
    intervals = np.flatnonzero(proc.grid[:-1] < s_bar)
    if not boundary:
        return CQReport(False, 'interior', 'satisfied', -np.inf, np.inf, np.inf, [], intervals)

    gens = np.atleast_2d(spec.constraint.generators(0.0, x0, 0.0, tol))[:, :spec.n + 1]
    sample_w0d = samples.w0 ** spec.d
    sample_f = _velocity(spec, 0.0, x0, samples.w0, samples.w, samples.a_index)

    worst, inward = -np.inf, -np.inf
    chosen = {}
    for k in intervals:
        best_k = np.full(len(samples), -np.inf)
        for r in _own_rows(proc, k):
            own_w0d = proc.w0[k, r] ** spec.d
            own_f = _velocity(spec, 0.0, x0, proc.w0[k, r], proc.w[k, r], proc.a_index[k, r])[0]
            delta = np.column_stack([sample_w0d - own_w0d, sample_f - own_f])
            best_k = np.maximum(best_k, np.max(delta @ gens.T, axis=1))
            inward = max(inward, float(np.max(gens @ np.concatenate([[own_w0d], own_f]))))
        j = int(np.argmin(best_k))
        worst = max(worst, float(best_k[j]))
        chosen[j] = (float(samples.w0[j]), samples.w[j].copy(), int(samples.a_index[j]))

    delta = -worst
    delta1 = -inward
    if delta <= 0:
        branch, verdict = None, 'not-satisfied'
    elif np.all(proc.w0[intervals][proc.weights[intervals] > 0] > 0):
        branch, verdict = 'w0-positive', 'satisfied'
    elif delta1 > 0:
        branch, verdict = 'inward-pointing', 'satisfied'
    else:
        branch, verdict = None, 'not-satisfied'

    logger.info('gapcert: constraint qualification on [0, %g]: %s (margin %.6g)' % (s_bar, verdict, worst))
    return CQReport(True, branch, verdict, worst, delta, delta1, [chosen[j] for j in sorted(chosen)], intervals)
