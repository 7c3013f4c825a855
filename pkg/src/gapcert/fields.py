"""
Vectorized field library used by problem files.

Every field evaluates over arbitrary leading batch axes: t has shape (...), x has shape (..., n),
a has shape (..., q). Vector fields return (..., dim); scalar functions return (...).
Scalar functions (state constraint h, cost Psi) take an extra running-budget argument v and report
gradients over the stacked variable (t, x, v).
"""
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .utils import import_callable

FD_PROBE = 1e-7


def _stack(t: np.ndarray, x: np.ndarray, v: Optional[np.ndarray] = None) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    t = np.broadcast_to(t, x.shape[:-1])
    parts = [t[..., None], x]
    if v is not None:
        parts.append(np.broadcast_to(np.asarray(v, dtype=float), x.shape[:-1])[..., None])
    return np.concatenate(parts, axis=-1)


class PolynomialTerm:
    __slots__ = ('row', 'coef', 'powers', '_factors')

    def __init__(self, row: int, coef: float, powers: Sequence[int]):
        self.row = int(row)
        self.coef = float(coef)
        self.powers = tuple(int(p) for p in powers)
        if any(p < 0 for p in self.powers):
            raise ValueError('negative power in polynomial term')
        self._factors = [(i, p) for i, p in enumerate(self.powers) if p > 0]

    def value(self, z: np.ndarray) -> np.ndarray:
        out = np.full(z.shape[:-1], self.coef)
        for i, p in self._factors:
            out = out * (z[..., i] if p == 1 else z[..., i] ** p)
        return out

    def partial(self, z: np.ndarray, var: int) -> np.ndarray:
        p_var = self.powers[var]
        if p_var == 0:
            return np.zeros(z.shape[:-1])
        out = np.full(z.shape[:-1], self.coef * p_var)
        for i, p in self._factors:
            p_eff = p - 1 if i == var else p
            if p_eff == 1:
                out = out * z[..., i]
            elif p_eff > 1:
                out = out * z[..., i] ** p_eff
        return out


class Polynomial:
    """
    Vector of polynomials in a stacked variable z. Terms are (row, coef, powers) triples.
    """
    def __init__(self, dim: int, nvars: int, terms: Sequence[PolynomialTerm]):
        self.dim = dim
        self.nvars = nvars
        self.terms = list(terms)
        for term in self.terms:
            if len(term.powers) != nvars:
                raise ValueError('polynomial term has %d powers, expected %d' % (len(term.powers), nvars))
            if not 0 <= term.row < dim:
                raise ValueError('polynomial term row %d out of range' % term.row)

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        out = np.zeros(z.shape[:-1] + (self.dim,))
        for term in self.terms:
            out[..., term.row] += term.value(z)
        return out

    def gradient(self, z: np.ndarray) -> np.ndarray:
        out = np.zeros(z.shape[:-1] + (self.dim, self.nvars))
        for term in self.terms:
            for i, _ in term._factors:
                out[..., term.row, i] += term.partial(z, i)
        return out


class Field:
    """
    Vector field (t, x, a) -> R^dim. Subclasses implement __call__; derivatives fall back to
    central finite differences.
    """
    dim = 0
    uses_params = False

    def __call__(self, t, x, a=None) -> np.ndarray:
        raise NotImplementedError()

    def jacobian(self, t, x, a=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        out = np.empty(x.shape[:-1] + (self.dim, n))
        for i in range(n):
            h = FD_PROBE * (1.0 + np.abs(x[..., i]))
            step = np.zeros(n)
            step[i] = 1.0
            xp = x + h[..., None] * step
            xm = x - h[..., None] * step
            out[..., :, i] = (self(t, xp, a) - self(t, xm, a)) / (2 * h[..., None])
        return out

    def time_partial(self, t, x, a=None) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        h = FD_PROBE * (1.0 + np.abs(t))
        return (self(t + h, x, a) - self(t - h, x, a)) / (2 * np.asarray(h)[..., None])


class Constant(Field):
    def __init__(self, value: Sequence[float]):
        self.value = np.asarray(value, dtype=float)
        self.dim = self.value.shape[0]

    def __call__(self, t, x, a=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.value, x.shape[:-1] + (self.dim,)).copy()

    def jacobian(self, t, x, a=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (self.dim, x.shape[-1]))

    def time_partial(self, t, x, a=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (self.dim,))


class Affine(Field):
    """
    matrix @ x + offset + time * t + params @ a
    """
    def __init__(self, matrix: Sequence[Sequence[float]], offset: Optional[Sequence[float]] = None,
                 time: Optional[Sequence[float]] = None, params: Optional[Sequence[Sequence[float]]] = None):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        self.dim = self.matrix.shape[0]
        self.offset = np.zeros(self.dim) if offset is None else np.asarray(offset, dtype=float)
        self.time = np.zeros(self.dim) if time is None else np.asarray(time, dtype=float)
        self.params = None if params is None else np.atleast_2d(np.asarray(params, dtype=float))
        self.uses_params = self.params is not None

    def __call__(self, t, x, a=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = x @ self.matrix.T + self.offset + np.asarray(t, dtype=float)[..., None] * self.time
        if self.params is not None and a is not None and self.params.shape[1] > 0:
            out = out + np.asarray(a, dtype=float) @ self.params.T
        return out

    def jacobian(self, t, x, a=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.matrix, x.shape[:-1] + self.matrix.shape).copy()

    def time_partial(self, t, x, a=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.time, x.shape[:-1] + (self.dim,)).copy()


class PolynomialField(Field):
    """
    Polynomial vector field in (t, x). Powers are listed for t first, then for x_1..x_n.
    """
    def __init__(self, poly: Polynomial):
        self.poly = poly
        self.dim = poly.dim

    def __call__(self, t, x, a=None) -> np.ndarray:
        return self.poly.evaluate(_stack(t, x))

    def jacobian(self, t, x, a=None) -> np.ndarray:
        return self.poly.gradient(_stack(t, x))[..., 1:]

    def time_partial(self, t, x, a=None) -> np.ndarray:
        return self.poly.gradient(_stack(t, x))[..., 0]


class CallableField(Field):
    def __init__(self, func: Callable, dim: int, jacobian: Optional[Callable] = None, uses_params: bool = True):
        self.func = func
        self.dim = dim
        self._jacobian = jacobian
        self.uses_params = uses_params

    def __call__(self, t, x, a=None) -> np.ndarray:
        return np.asarray(self.func(t, x, a), dtype=float)

    def jacobian(self, t, x, a=None) -> np.ndarray:
        if self._jacobian is not None:
            return np.asarray(self._jacobian(t, x, a), dtype=float)
        return super(CallableField, self).jacobian(t, x, a)


class ScalarFunction:
    """
    Scalar map (t, x, v) -> R. gradient() is taken over (t, x_1..x_n, v).
    generators() lists gradients of the active pieces at one point: a single gradient
    where the function is smooth.
    """
    smooth = True

    def value(self, t, x, v=None) -> np.ndarray:
        raise NotImplementedError()

    def gradient(self, t, x, v=None) -> np.ndarray:
        z = _stack(t, x, 0.0 if v is None else v)
        out = np.empty(z.shape)
        for i in range(z.shape[-1]):
            h = FD_PROBE * (1.0 + np.abs(z[..., i]))
            zp, zm = z.copy(), z.copy()
            zp[..., i] += h
            zm[..., i] -= h
            out[..., i] = (self._value_z(zp) - self._value_z(zm)) / (2 * h)
        return out

    def generators(self, t: float, x: np.ndarray, v: float = 0.0, tol: float = 1e-6) -> np.ndarray:
        return np.atleast_2d(self.gradient(t, x, v))

    def _value_z(self, z: np.ndarray) -> np.ndarray:
        return self.value(z[..., 0], z[..., 1:-1], z[..., -1])


class ConstantScalar(ScalarFunction):
    def __init__(self, value: float):
        self.constant = float(value)

    def value(self, t, x, v=None) -> np.ndarray:
        return np.full(np.asarray(x).shape[:-1], self.constant)

    def gradient(self, t, x, v=None) -> np.ndarray:
        x = np.asarray(x)
        return np.zeros(x.shape[:-1] + (x.shape[-1] + 2,))


class PolynomialScalar(ScalarFunction):
    """
    Polynomial in (t, x_1..x_n, v); `poly` has one row and n + 2 variables.
    """
    def __init__(self, poly: Polynomial):
        if poly.dim != 1:
            raise ValueError('scalar polynomial must have a single row')
        self.poly = poly

    def value(self, t, x, v=None) -> np.ndarray:
        return self.poly.evaluate(_stack(t, x, 0.0 if v is None else v))[..., 0]

    def gradient(self, t, x, v=None) -> np.ndarray:
        return self.poly.gradient(_stack(t, x, 0.0 if v is None else v))[..., 0, :]


class MaxScalar(ScalarFunction):
    """
    Pointwise maximum of scalar pieces. Generators are the gradients of the pieces within tol of the max.
    """
    smooth = False

    def __init__(self, pieces: Sequence[ScalarFunction]):
        if not pieces:
            raise ValueError('max needs at least one piece')
        self.pieces = list(pieces)

    def value(self, t, x, v=None) -> np.ndarray:
        return np.max(np.stack([p.value(t, x, v) for p in self.pieces]), axis=0)

    def gradient(self, t, x, v=None) -> np.ndarray:
        values = np.stack([p.value(t, x, v) for p in self.pieces])
        grads = np.stack([p.gradient(t, x, v) for p in self.pieces])
        best = np.argmax(values, axis=0)
        return np.take_along_axis(grads, best[None, ..., None], axis=0)[0]

    def generators(self, t: float, x: np.ndarray, v: float = 0.0, tol: float = 1e-6) -> np.ndarray:
        values = np.array([float(p.value(t, x, v)) for p in self.pieces])
        top = values.max()
        return np.array([p.gradient(t, x, v) for p, val in zip(self.pieces, values) if val >= top - tol])


class CallableScalar(ScalarFunction):
    def __init__(self, func: Callable, gradient: Optional[Callable] = None,
                 generators: Optional[Sequence[Callable]] = None):
        self.func = func
        self._gradient = gradient
        self._generators = list(generators or [])
        self.smooth = not self._generators

    def value(self, t, x, v=None) -> np.ndarray:
        return np.asarray(self.func(t, x, v), dtype=float)

    def gradient(self, t, x, v=None) -> np.ndarray:
        if self._gradient is not None:
            return np.asarray(self._gradient(t, x, v), dtype=float)
        return super(CallableScalar, self).gradient(t, x, v)

    def generators(self, t: float, x: np.ndarray, v: float = 0.0, tol: float = 1e-6) -> np.ndarray:
        if not self._generators:
            return super(CallableScalar, self).generators(t, x, v, tol)
        return np.array([np.asarray(g(t, x, v), dtype=float) for g in self._generators])


def _terms(raw_terms: Sequence[Dict[str, Any]], nx: int, with_v: bool) -> List[PolynomialTerm]:
    terms = []
    for raw in raw_terms:
        powers = list(raw.get('powers', [0] * nx))
        if len(powers) != nx:
            raise ValueError('term powers must list %d entries' % nx)
        full = [int(raw.get('t', 0))] + powers + ([int(raw.get('v', 0))] if with_v else [])
        if not with_v and raw.get('v', 0):
            raise ValueError('vector fields cannot depend on v')
        terms.append(PolynomialTerm(int(raw.get('row', 0)), float(raw['coef']), full))
    return terms


def build_field(cfg: Dict[str, Any], n: int) -> Field:
    """
    Builds a vector field from its problem-file mapping
    :param cfg: Mapping with `kind` and kind-specific keys
    :param n: State dimension
    :return: Field instance
    """
    kind = cfg.get('kind')
    if kind == 'const':
        return Constant(cfg['value'])
    elif kind == 'affine':
        return Affine(cfg['matrix'], cfg.get('offset'), cfg.get('time'), cfg.get('params'))
    elif kind == 'poly':
        dim = int(cfg.get('dim', n))
        return PolynomialField(Polynomial(dim, n + 1, _terms(cfg.get('terms', []), n, with_v=False)))
    elif kind == 'python':
        jac = import_callable(cfg['jacobian']) if cfg.get('jacobian') else None
        return CallableField(import_callable(cfg['path']), int(cfg.get('dim', n)), jac)
    raise ValueError('unknown vector field kind `%s`' % kind)


def build_scalar(cfg: Dict[str, Any], n: int) -> ScalarFunction:
    """
    Builds a scalar function (constraint or cost) from its problem-file mapping
    """
    kind = cfg.get('kind')
    if kind == 'const':
        return ConstantScalar(cfg['value'])
    elif kind == 'affine':
        coef = [float(c) for c in cfg.get('x', [0.0] * n)]
        if len(coef) != n:
            raise ValueError('affine scalar needs %d x-coefficients' % n)
        terms = [{'coef': float(cfg.get('offset', 0.0))}]
        terms += [{'coef': c, 'powers': [int(i == j) for j in range(n)]} for i, c in enumerate(coef) if c]
        if cfg.get('t'):
            terms.append({'coef': float(cfg['t']), 't': 1})
        if cfg.get('v'):
            terms.append({'coef': float(cfg['v']), 'v': 1})
        return PolynomialScalar(Polynomial(1, n + 2, _terms(terms, n, with_v=True)))
    elif kind == 'poly':
        return PolynomialScalar(Polynomial(1, n + 2, _terms(cfg.get('terms', []), n, with_v=True)))
    elif kind == 'max':
        return MaxScalar([build_scalar(piece, n) for piece in cfg['pieces']])
    elif kind == 'python':
        grad = import_callable(cfg['gradient']) if cfg.get('gradient') else None
        gens = [import_callable(g) for g in cfg.get('generators', [])]
        return CallableScalar(import_callable(cfg['path']), grad, gens)
    raise ValueError('unknown scalar kind `%s`' % kind)


def _box_pieces(n: int) -> List[Dict[str, Any]]:
    pieces = []
    for i in range(n):
        for sign in (1.0, -1.0):
            pieces.append({'kind': 'affine', 'x': [sign if j == i else 0.0 for j in range(n)], 'offset': -1.0})
    return pieces


# Named fields available to every problem file. Values are (kind, mapping) pairs
NAMED_FIELDS = {
    'ex51_f': ('vector', {'kind': 'poly', 'dim': 3, 'terms': [{'row': 1, 'coef': 1.0, 'powers': [0, 1, 1]}]}),
    'ex51_g1': ('vector', {'kind': 'const', 'value': [1.0, 0.0, 0.0]}),
    'ex51_g2': ('vector', {'kind': 'poly', 'dim': 3, 'terms': [
        {'row': 1, 'coef': -1.0, 'powers': [0, 0, 0]},
        {'row': 2, 'coef': -1.0, 'powers': [1, 0, 0]},
    ]}),
    'ex51_h': ('scalar', {'kind': 'max', 'pieces': _box_pieces(3)}),
    'ex51_cost': ('scalar', {'kind': 'affine', 'x': [-1.0, 0.0, 0.0]}),
    'zero1': ('vector', {'kind': 'const', 'value': [0.0]}),
    'one1': ('vector', {'kind': 'const', 'value': [1.0]}),
}


def named_field(name: str, n: int) -> Tuple[str, Any]:
    kind, cfg = NAMED_FIELDS[name]
    return kind, (build_field(cfg, n) if kind == 'vector' else build_scalar(cfg, n))
