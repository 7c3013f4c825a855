"""
Fixed-step RK4 for the extended and relaxed systems, vectorized over a batch axis.
"""
from typing import Optional

import numpy as np

from .exceptions import IntegrationError
from .model import Process, ProblemSpec


def simulate(spec: ProblemSpec, grid: np.ndarray, w0: np.ndarray, w: np.ndarray, a: np.ndarray,
             weights: np.ndarray, substeps: int = 1, raise_on_blowup: bool = True) -> np.ndarray:
    """
    Integrates (y0, y, nu)' = (sum_r l_r (w0_r)^d, sum_r l_r F(y0, y, w0_r, w_r, a_r), sum_r l_r |w_r|^d)
    with controls held constant on every grid interval.
    :param spec: Problem
    :param grid: (B, N + 1) node times
    :param w0: (B, N, R)
    :param w: (B, N, R, m)
    :param a: (B, N, R, q) parameter points
    :param weights: (B, N, R) simplex weights, ones for a single row
    :param substeps: RK4 steps per interval
    :param raise_on_blowup: Raise IntegrationError on non-finite states, else keep propagating inf/nan
    :return: (B, N + 1, n + 2) states
    """
    dyn = spec.dynamics
    n, d = dyn.n, dyn.d
    batch, intervals = w0.shape[0], w0.shape[1]

    rate0 = np.sum(weights * w0 ** d, axis=-1)
    rate_nu = np.sum(weights * np.linalg.norm(w, axis=-1) ** d, axis=-1)

    states = np.empty((batch, intervals + 1, n + 2))
    y = np.broadcast_to(spec.initial_state, (batch, n + 2)).copy()
    states[:, 0] = y

    for k in range(intervals):
        w0k, wk, ak, lk = w0[:, k], w[:, k], a[:, k], weights[:, k]
        r0, rnu = rate0[:, k], rate_nu[:, k]

        def rhs(state: np.ndarray) -> np.ndarray:
            rows = w0k.shape[1]
            t = np.broadcast_to(state[:, None, 0], (batch, rows))
            x = np.broadcast_to(state[:, None, 1:n + 1], (batch, rows, n))
            velocity = np.sum(lk[..., None] * dyn(t, x, w0k, wk, ak), axis=1)
            return np.concatenate([r0[:, None], velocity, rnu[:, None]], axis=1)

        h = ((grid[:, k + 1] - grid[:, k]) / substeps)[:, None]
        for _ in range(substeps):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * h * k1)
            k3 = rhs(y + 0.5 * h * k2)
            k4 = rhs(y + h * k3)
            y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

        if raise_on_blowup and not np.all(np.isfinite(y)):
            raise IntegrationError(k)
        states[:, k + 1] = y

    return states


def integrate(spec: ProblemSpec, layer: str, grid: np.ndarray, w0: np.ndarray, w: np.ndarray,
              a_index: np.ndarray, weights: Optional[np.ndarray] = None, substeps: int = 1) -> Process:
    """
    Integrates one process and wraps it as a Process of the given layer.
    Controls are (N, R) / (N, R, m) arrays; weights default to a single unit row.
    """
    grid = np.asarray(grid, dtype=float)
    w0 = np.asarray(w0, dtype=float)
    w = np.asarray(w, dtype=float)
    a_index = np.asarray(a_index, dtype=int)
    if w0.ndim == 1:
        w0, w, a_index = w0[:, None], w[:, None, :], a_index[:, None]
    weights = np.ones_like(w0) if weights is None else np.asarray(weights, dtype=float)

    points = spec.params[a_index]
    states = simulate(spec, grid[None], w0[None], w[None], points[None], weights[None], substeps)[0]
    xi = None
    if layer == 'relaxed':
        xi = np.concatenate([np.zeros((1, weights.shape[1])), np.cumsum(weights * np.diff(grid)[:, None], axis=0)])
    return Process(layer, grid, w0, w, a_index, weights, states, xi)


def dynamics_residual(spec: ProblemSpec, proc: Process, substeps: int = 1) -> float:
    """
    Largest deviation of the stored states from a fresh integration of the stored controls
    """
    fresh = integrate(spec, proc.layer, proc.grid, proc.w0, proc.w, proc.a_index, proc.weights, substeps)
    return float(np.max(np.abs(fresh.states - proc.states)))
