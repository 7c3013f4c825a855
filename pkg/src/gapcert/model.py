"""
Problem schema, control-polynomial dynamics and the process type shared by all three layers.
"""
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, IO, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import yaml
from scipy.optimize import linprog, minimize, nnls

from .configuration import config
from .exceptions import InvariantError, LayerError, NumericError, ProblemLoadError, SampleError
from .fields import Field, NAMED_FIELDS, ScalarFunction, ConstantScalar, build_field, build_scalar, named_field

logger = logging.getLogger('gapcert')

LAYERS = ('strict', 'extended', 'relaxed')
SPHERE_TOL = 1e-9


class PolynomialDynamics:
    """
    F(t, x, w0, w, a) = f(t, x, a) (w0)^d + sum_J g_J(t, x) w^J (w0)^(d - |J|)
    Multi-indices J are stored 0-based and nondecreasing.
    """
    def __init__(self, n: int, m: int, d: int, drift: Field, terms: Dict[Tuple[int, ...], Field], q: int = 0):
        self.n = n
        self.m = m
        self.d = d
        self.q = q
        self.drift = drift
        self.terms = dict(sorted(terms.items(), key=lambda item: (len(item[0]), item[0])))

        for multi_index in self.terms:
            if not 1 <= len(multi_index) <= d:
                raise InvariantError('multi-index %s has order outside 1..%d' % (multi_index, d))
            if list(multi_index) != sorted(multi_index):
                raise InvariantError('multi-index not nondecreasing')
            if any(not 0 <= j < m for j in multi_index):
                raise InvariantError('multi-index %s out of control range' % (multi_index,))

    def _weights(self, w0: np.ndarray, w: np.ndarray):
        for multi_index in self.terms:
            mono = w[..., multi_index[0]]
            for j in multi_index[1:]:
                mono = mono * w[..., j]
            k = len(multi_index)
            if k < self.d:
                mono = mono * w0 ** (self.d - k)
            yield multi_index, mono

    def __call__(self, t, x, w0, w, a=None) -> np.ndarray:
        w0 = np.asarray(w0, dtype=float)
        w = np.asarray(w, dtype=float)
        out = self.drift(t, x, a) * (w0 ** self.d)[..., None]
        for multi_index, mono in self._weights(w0, w):
            out = out + self.terms[multi_index](t, x) * mono[..., None]
        return out

    def jacobian(self, t, x, w0, w, a=None) -> np.ndarray:
        """
        x-Jacobian of F, shape (..., n, n)
        """
        w0 = np.asarray(w0, dtype=float)
        w = np.asarray(w, dtype=float)
        out = self.drift.jacobian(t, x, a) * (w0 ** self.d)[..., None, None]
        for multi_index, mono in self._weights(w0, w):
            out = out + self.terms[multi_index].jacobian(t, x) * mono[..., None, None]
        return out

    def time_partial(self, t, x, w0, w, a=None) -> np.ndarray:
        w0 = np.asarray(w0, dtype=float)
        w = np.asarray(w, dtype=float)
        out = self.drift.time_partial(t, x, a) * (w0 ** self.d)[..., None]
        for multi_index, mono in self._weights(w0, w):
            out = out + self.terms[multi_index].time_partial(t, x) * mono[..., None]
        return out


class ControlCone:
    """
    Closed cone U of unbounded controls, given by a componentwise sign pattern (+1, -1, 0 for free)
    or by generator rays. Controls are parameterized as w = basis @ c with lower <= c <= upper.
    """
    def __init__(self, m: int, signs: Optional[Sequence[int]] = None, rays: Optional[Sequence[Sequence[float]]] = None):
        self.m = m
        if rays is not None:
            rays = np.atleast_2d(np.asarray(rays, dtype=float))
            if rays.shape[1] != m or np.any(np.linalg.norm(rays, axis=1) == 0):
                raise InvariantError('cone rays must be nonzero vectors of length %d' % m)
            self.rays = rays / np.linalg.norm(rays, axis=1)[:, None]
            self.signs = None
            self.basis = self.rays.T
            self.lower = np.zeros(len(self.rays))
            self.upper = np.ones(len(self.rays))
        else:
            signs = np.zeros(m, dtype=int) if signs is None else np.asarray(signs, dtype=int)
            if signs.shape != (m,) or np.any(np.abs(signs) > 1):
                raise InvariantError('cone sign pattern must hold %d entries among -1, 0, 1' % m)
            self.signs = signs
            self.rays = None
            self.basis = np.eye(m)
            self.lower = np.where(signs > 0, 0.0, -1.0)
            self.upper = np.where(signs < 0, 0.0, 1.0)

    @property
    def size(self) -> int:
        return self.basis.shape[1]

    def contains(self, w: np.ndarray, tol: float = SPHERE_TOL) -> bool:
        w = np.asarray(w, dtype=float)
        if self.signs is not None:
            return bool(np.all(w * self.signs >= -tol))
        _, residual = nnls(self.basis, w)
        return residual <= tol * max(1.0, float(np.linalg.norm(w)))

    def coefficients(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if self.signs is not None:
            return w.copy()
        return nnls(self.basis, w)[0]


class Target:
    """
    Polyhedral target {z = (t, x): C z <= b}. Box targets keep their bounds for exact projection.
    """
    def __init__(self, matrix: np.ndarray, bound: np.ndarray, lower: Optional[np.ndarray] = None,
                 upper: Optional[np.ndarray] = None):
        self.matrix = np.asarray(matrix, dtype=float).reshape(-1, np.asarray(matrix).shape[-1])
        self.bound = np.asarray(bound, dtype=float).reshape(-1)
        self.lower = lower
        self.upper = upper

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float]) -> 'Target':
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        rows, bounds = [], []
        for i in range(len(lower)):
            e = np.zeros(len(lower))
            e[i] = 1.0
            if np.isfinite(upper[i]):
                rows.append(e)
                bounds.append(upper[i])
            if np.isfinite(lower[i]):
                rows.append(-e)
                bounds.append(-lower[i])
        matrix = np.array(rows).reshape(-1, len(lower))
        return cls(matrix, np.array(bounds), lower, upper)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def is_empty(self) -> bool:
        if not len(self.bound):
            return False
        if self.lower is not None and np.any(self.lower > self.upper):
            return True
        res = linprog(np.zeros(self.dim), A_ub=self.matrix, b_ub=self.bound, bounds=[(None, None)] * self.dim,
                      method='highs-ds')
        return res.status == 2

    def violation(self, z: np.ndarray) -> np.ndarray:
        """
        Row-normalized excess max_i (C_i z - b_i)^+ / |C_i|, vectorized over leading axes
        """
        if not len(self.bound):
            return np.zeros(np.asarray(z).shape[:-1])
        norms = np.linalg.norm(self.matrix, axis=1)
        excess = (np.asarray(z) @ self.matrix.T - self.bound) / norms
        return np.maximum(excess.max(axis=-1), 0.0)

    def distance(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        if not len(self.bound) or np.all(self.matrix @ z <= self.bound + 1e-12):
            return 0.0
        if self.lower is not None:
            return float(np.linalg.norm(z - np.clip(z, self.lower, self.upper)))

        res = minimize(lambda p: 0.5 * np.sum((p - z) ** 2), z, jac=lambda p: p - z, method='SLSQP',
                       constraints=[{'type': 'ineq', 'fun': lambda p: self.bound - self.matrix @ p,
                                     'jac': lambda p: -self.matrix}])
        return float(np.linalg.norm(res.x - z))

    def active_rows(self, z: np.ndarray, tol: float) -> np.ndarray:
        if not len(self.bound):
            return np.zeros(0, dtype=int)
        return np.flatnonzero(self.matrix @ np.asarray(z, dtype=float) >= self.bound - tol)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    dynamics: PolynomialDynamics
    cone: ControlCone
    params: np.ndarray
    constraint: ScalarFunction
    target: Target
    cost: ScalarFunction
    budget: float
    x0: np.ndarray
    horizon: float
    name: str = 'problem'
    constrained: bool = True

    @property
    def n(self) -> int:
        return self.dynamics.n

    @property
    def m(self) -> int:
        return self.dynamics.m

    @property
    def d(self) -> int:
        return self.dynamics.d

    @property
    def initial_state(self) -> np.ndarray:
        """
        (y0, y, nu) at s = 0
        """
        return np.concatenate([[0.0], self.x0, [0.0]])


class SpaceTimeControlSample(NamedTuple):
    """
    One element (w0, w, a) of W x A; `a_index` points into ProblemSpec.params
    """
    w0: float
    w: np.ndarray
    a_index: int = 0


def check_sample(spec: ProblemSpec, sample: SpaceTimeControlSample) -> None:
    w = np.asarray(sample.w, dtype=float)
    if w.shape != (spec.m,):
        raise SampleError('control w must have %d components' % spec.m)
    if sample.w0 < 0:
        raise SampleError('w0 must be nonnegative')
    if abs(sample.w0 ** spec.d + np.linalg.norm(w) ** spec.d - 1.0) > SPHERE_TOL:
        raise SampleError('(w0)^d + |w|^d = 1 violated')
    if not spec.cone.contains(w):
        raise SampleError('w is outside the control cone')
    if not 0 <= sample.a_index < len(spec.params):
        raise SampleError('parameter index %d out of range' % sample.a_index)


@dataclass(frozen=True, eq=False)
class Process:
    """
    Piecewise-constant controls on a grid and the integrated trajectory.
    Controls carry a row axis: one row for strict/extended processes, n + 1 rows with simplex weights
    for relaxed ones. states holds (y0, y_1..y_n, nu) per node; xi is kept for relaxed processes.
    """
    layer: str
    grid: np.ndarray
    w0: np.ndarray
    w: np.ndarray
    a_index: np.ndarray
    weights: np.ndarray
    states: np.ndarray
    xi: Optional[np.ndarray] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.layer not in LAYERS:
            raise LayerError('unknown layer `%s`' % self.layer)
        self.validate()

    def validate(self, tol: float = 1e-9) -> None:
        if np.any(np.diff(self.grid) <= 0) or self.grid[0] != 0:
            raise InvariantError('grid must start at 0 and be strictly increasing')
        if self.layer == 'strict' and np.any(self.w0 <= 0):
            raise LayerError('strict process has an interval with w0 = 0')
        if np.any(self.w0 < 0):
            raise LayerError('negative w0')
        if self.layer == 'relaxed':
            if np.any(self.weights < 0) or np.any(np.abs(self.weights.sum(axis=1) - 1.0) > 1e-12):
                raise LayerError('simplex weights must be nonnegative and sum to 1')
        elif self.rows != 1:
            raise LayerError('%s processes carry one control row' % self.layer)
        if self.states[0, 0] != 0 or self.states[0, -1] != 0:
            raise InvariantError('y0 and nu must start at 0')
        if np.any(np.diff(self.states[:, 0]) < -tol) or np.any(np.diff(self.states[:, -1]) < -tol):
            raise InvariantError('y0 and nu must be nondecreasing')

    @property
    def N(self) -> int:
        return len(self.grid) - 1

    @property
    def S(self) -> float:
        return float(self.grid[-1])

    @property
    def rows(self) -> int:
        return self.w0.shape[1]

    @property
    def y0(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, 1:-1]

    @property
    def nu(self) -> np.ndarray:
        return self.states[:, -1]

    @property
    def endpoint(self) -> np.ndarray:
        return self.states[-1]

    def sample(self, k: int, row: int = 0) -> SpaceTimeControlSample:
        return SpaceTimeControlSample(float(self.w0[k, row]), self.w[k, row].copy(), int(self.a_index[k, row]))


class FeasibilityRecord(NamedTuple):
    max_constraint_violation: float
    target_distance: float
    budget_excess: float
    feasible: bool

    @property
    def total(self) -> float:
        return self.max_constraint_violation + self.target_distance + self.budget_excess


def eval_extended_dynamics(spec: ProblemSpec, t: float, x: np.ndarray, sample: SpaceTimeControlSample) -> np.ndarray:
    """
    Evaluates the compactified vector field F(t, x, w0, w, a)
    :param spec: Problem
    :param t: Time
    :param x: State vector
    :param sample: Control sample on W x A
    :return: Vector of size n
    """
    check_sample(spec, sample)
    value = spec.dynamics(float(t), np.asarray(x, dtype=float), sample.w0, np.asarray(sample.w, dtype=float),
                          spec.params[sample.a_index])
    if not np.all(np.isfinite(value)):
        raise NumericError('non-finite dynamics at t=%g, x=%s' % (t, x))
    return value


def eval_fast_dynamics(spec: ProblemSpec, t: float, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """
    Degree-d part of the dynamics, active on impulsive arcs (w0 = 0)
    """
    w = np.asarray(w, dtype=float)
    if abs(np.linalg.norm(w) - 1.0) > SPHERE_TOL:
        raise SampleError('fast dynamics need |w| = 1')
    return eval_extended_dynamics(spec, t, x, SpaceTimeControlSample(0.0, w, 0))


def check_feasibility(spec: ProblemSpec, proc: Process, tol: Optional[float] = None) -> FeasibilityRecord:
    tol = config.TOL_FEAS if tol is None else tol
    h = spec.constraint.value(proc.y0, proc.y)
    violation = float(max(np.max(h), 0.0))
    distance = spec.target.distance(proc.endpoint[:-1])
    excess = float(max(proc.nu[-1] - spec.budget, 0.0)) if np.isfinite(spec.budget) else 0.0
    return FeasibilityRecord(violation, distance, excess, max(violation, distance, excess) <= tol)


def _as_array(raw: Any, path: str, shape: Optional[Tuple[int, ...]] = None) -> np.ndarray:
    try:
        value = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise ProblemLoadError(path, 'expected numbers')
    if shape is not None and value.shape != shape:
        raise ProblemLoadError(path, 'expected shape %s, got %s' % (shape, value.shape))
    return value


class _Loader:
    def __init__(self, doc: Dict[str, Any]):
        self.doc = doc
        self.user_fields = doc.get('fields') or {}

    def section(self, name: str, required: bool = True) -> Dict[str, Any]:
        value = self.doc.get(name)
        if value is None:
            if required:
                raise ProblemLoadError(name, 'missing section')
            return {}
        if not isinstance(value, dict):
            raise ProblemLoadError(name, 'section must be a mapping')
        return value

    def resolve(self, ref: Any, kind: str, n: int, path: str):
        try:
            if isinstance(ref, str):
                if ref in self.user_fields:
                    cfg = self.user_fields[ref]
                    return build_field(cfg, n) if kind == 'vector' else build_scalar(cfg, n)
                if ref in NAMED_FIELDS:
                    ref_kind, value = named_field(ref, n)
                    if ref_kind != kind:
                        raise ValueError('field `%s` is a %s field, expected %s' % (ref, ref_kind, kind))
                    return value
                raise ValueError('unknown field `%s`' % ref)
            if isinstance(ref, dict):
                return build_field(ref, n) if kind == 'vector' else build_scalar(ref, n)
        except ProblemLoadError:
            raise
        except (ValueError, KeyError, TypeError, ImportError) as e:
            raise ProblemLoadError(path, str(e))
        raise ProblemLoadError(path, 'field reference must be a name or a mapping')

    def build(self) -> ProblemSpec:
        dyn = self.section('dynamics')
        try:
            n, m, d, q = int(dyn['n']), int(dyn['m']), int(dyn.get('d', 1)), int(dyn.get('q', 0))
        except KeyError as e:
            raise ProblemLoadError('dynamics.%s' % e.args[0], 'missing key')
        if min(n, m, d) < 1 or q < 0:
            raise ProblemLoadError('dynamics', 'n, m, d must be positive and q nonnegative')

        drift = self.resolve(dyn.get('drift', {'kind': 'const', 'value': [0.0] * n}), 'vector', n, 'dynamics.drift')
        terms = {}
        for i, raw in enumerate(dyn.get('g') or []):
            path = 'dynamics.g[%d]' % i
            j = raw.get('j')
            if not isinstance(j, list) or not j:
                raise ProblemLoadError(path + '.j', 'multi-index must be a nonempty list')
            if 'k' in raw and int(raw['k']) != len(j):
                raise ProblemLoadError(path + '.k', 'order k=%s does not match multi-index length' % raw['k'])
            if [int(v) for v in j] != sorted(int(v) for v in j):
                raise ProblemLoadError(path + '.j', 'multi-index not nondecreasing')
            if len(j) > d or any(not 1 <= int(v) <= m for v in j):
                raise ProblemLoadError(path + '.j', 'multi-index out of range for m=%d, d=%d' % (m, d))
            key = tuple(int(v) - 1 for v in j)
            if key in terms:
                raise ProblemLoadError(path + '.j', 'duplicate multi-index')
            terms[key] = self.resolve(raw.get('field'), 'vector', n, path + '.field')
        dynamics = PolynomialDynamics(n, m, d, drift, terms, q)

        control = self.section('control', required=False)
        try:
            cone = ControlCone(m, signs=control.get('signs'), rays=control.get('rays'))
        except InvariantError as e:
            raise ProblemLoadError('control', str(e))

        points = self.section('param_set', required=False).get('points') or []
        params = _as_array(points, 'param_set.points').reshape(-1, q) if points else np.zeros((1, q))
        if params.shape[1] != q:
            raise ProblemLoadError('param_set.points', 'points must have %d coordinates' % q)

        constraint_cfg = self.section('constraint', required=False)
        constrained = 'h' in constraint_cfg
        constraint = self.resolve(constraint_cfg['h'], 'scalar', n, 'constraint.h') if constrained \
            else ConstantScalar(-1.0)

        target = self._target(n)
        cost = self.resolve(self.section('cost').get('psi'), 'scalar', n, 'cost.psi')

        budget = float(self.section('budget', required=False).get('K', np.inf))
        if not budget > 0:
            raise ProblemLoadError('budget.K', 'budget must be positive')

        init = self.section('init')
        x0 = _as_array(init.get('x0'), 'init.x0', (n,))
        horizon = float(init.get('horizon', 1.0))
        if not horizon > 0:
            raise ProblemLoadError('init.horizon', 'horizon must be positive')

        spec = ProblemSpec(dynamics, cone, params, constraint, target, cost, budget, x0, horizon,
                           str(self.doc.get('name', 'problem')), constrained)
        self._check_shapes(spec)
        return spec

    def _target(self, n: int) -> Target:
        cfg = self.section('target', required=False)
        if 'box' in cfg:
            box = cfg['box']
            lower = _as_array(box.get('lower', [-np.inf] * (n + 1)), 'target.box.lower', (n + 1,))
            upper = _as_array(box.get('upper', [np.inf] * (n + 1)), 'target.box.upper', (n + 1,))
            target = Target.box(lower, upper)
        elif 'C' in cfg:
            matrix = _as_array(cfg['C'], 'target.C')
            if matrix.ndim != 2 or matrix.shape[1] != n + 1:
                raise ProblemLoadError('target.C', 'rows must have %d entries (t, x)' % (n + 1))
            target = Target(matrix, _as_array(cfg.get('b'), 'target.b', (matrix.shape[0],)))
        else:
            target = Target(np.zeros((0, n + 1)), np.zeros(0))
        if target.is_empty():
            raise ProblemLoadError('target', 'target polyhedron is empty')
        return target

    @staticmethod
    def _check_shapes(spec: ProblemSpec) -> None:
        x0 = spec.x0
        checks = [('dynamics.drift', spec.dynamics.drift(0.0, x0, spec.params[0]))]
        checks += [('dynamics.g%s' % (tuple(j + 1 for j in key),), g(0.0, x0))
                   for key, g in spec.dynamics.terms.items()]
        for path, value in checks:
            if np.shape(value) != (spec.n,):
                raise ProblemLoadError(path, 'field must return %d components' % spec.n)
            if not np.all(np.isfinite(value)):
                raise ProblemLoadError(path, 'field is not finite at the initial state')
        for path, func in (('constraint.h', spec.constraint), ('cost.psi', spec.cost)):
            if not np.isfinite(func.value(0.0, x0, 0.0)):
                raise ProblemLoadError(path, 'function is not finite at the initial state')


def load_problem(source: Union[str, os.PathLike, IO, Dict[str, Any]]) -> ProblemSpec:
    """
    Loads and validates a problem file
    :param source: Path, open stream or already parsed mapping
    :return: ProblemSpec
    """
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, 'read'):
        doc = yaml.safe_load(source)
    else:
        with open(source) as f:
            try:
                doc = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ProblemLoadError('', 'not a valid problem file: %s' % e)

    if not isinstance(doc, dict):
        raise ProblemLoadError('', 'problem file must be a mapping')

    spec = _Loader(doc).build()
    logger.debug('gapcert: loaded problem `%s` (n=%d, m=%d, d=%d)' % (spec.name, spec.n, spec.m, spec.d))
    return spec
