"""
Infimum trends per control layer, isolation probing of a reference process and evidence-graded gap verdicts.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from .configuration import config
from .embed import time_grid
from .exceptions import GapCertError, ParameterError
from .model import FeasibilityRecord, Process, ProblemSpec, check_feasibility
from .pmp import ABNORMAL_CLASSES
from .relax import inner_approximate
from .solve import SolveReport, multistart, transcribe
from .utils import exec_multi_arg_func

logger = logging.getLogger('gapcert')

VERDICTS = ('gap-evidence', 'no-gap-evidence', 'inconclusive')
PROBE_VERDICTS = ('isolated-evidence', 'controllable-evidence', 'inconclusive')


@dataclass(eq=False)
class Trend:
    layer: str
    points: List[Dict[str, Any]]
    objectives: np.ndarray
    best_so_far: np.ndarray
    statuses: List[str]
    reports: List[Optional[SolveReport]] = field(default_factory=list, repr=False)

    @property
    def limit(self) -> float:
        return float(self.best_so_far[-1])

    @property
    def spread(self) -> float:
        finite = self.best_so_far[np.isfinite(self.best_so_far)]
        if len(finite) < 2:
            return 0.0
        return float(abs(finite[-1] - finite[-2]))


def _sweep_point(index: int, spec: ProblemSpec, layer: str, schedule: Sequence[Dict[str, Any]], seeds: int,
                 seed: int, init: Optional[Process]):
    point = schedule[index]
    options = {'w0_floor': point.get('w0_floor')} if layer == 'strict' else {}
    try:
        trans = transcribe(spec, layer, int(point['nodes']), **options)
        report = multistart(trans, seeds=seeds, rng_seed=seed, init=init, threads_count=1)
    except GapCertError as e:
        logger.warning('gapcert: %s sweep point %s failed: %s' % (layer, point, e))
        return index, None
    return index, report


def infimum_sweep(spec: ProblemSpec, layer: str, schedule: Sequence[Dict[str, Any]], seeds: int = 1, seed: int = 0,
                  init: Optional[Process] = None) -> Trend:
    """
    Solves one layer along a refinement schedule
    :param spec: Problem
    :param layer: strict, extended or relaxed
    :param schedule: Points {'nodes': N, 'w0_floor': f}; the floor is used by the strict layer only
    :param seeds: Multistart count per point
    :param seed: Multistart rng seed
    :param init: Optional warm start shared by every point
    :return: Trend with the running minimum over feasible points
    """
    schedule = list(schedule)
    if not schedule:
        raise ParameterError('refinement schedule is empty')
    if layer == 'strict' and any(point.get('w0_floor') is None for point in schedule):
        raise ParameterError('strict sweep points need a w0_floor')

    results = dict(exec_multi_arg_func(_sweep_point, range(len(schedule)), spec, layer, schedule, seeds, seed, init,
                                       threads_count=config.THREADS))
    reports = [results[i] for i in range(len(schedule))]

    objectives = np.array([r.objective if r is not None else np.nan for r in reports])
    statuses = [r.status if r is not None else 'failed' for r in reports]
    feasible = np.array([r is not None and r.feasible for r in reports])
    best_so_far = np.minimum.accumulate(np.where(feasible, objectives, np.inf))

    logger.info('gapcert: %s sweep over %d points, limit %.8g' % (layer, len(schedule), best_so_far[-1]))
    return Trend(layer, schedule, objectives, best_so_far, statuses, reports)


@dataclass(eq=False)
class IsolationProbe:
    delta: float
    floors_used: List[float]
    values: np.ndarray
    tube_excess: np.ndarray
    verdict: str
    records: List[FeasibilityRecord] = field(default_factory=list)
    processes: List[Process] = field(default_factory=list, repr=False)


def _probe_objective(spec: ProblemSpec, ref: Process, delta: float, intervals: int):
    grid = time_grid(ref.S, 0.0, intervals)[0]
    reference = np.column_stack([np.interp(grid, ref.grid, ref.states[:, i]) for i in range(spec.n + 1)])

    def objective(states: np.ndarray, grids: np.ndarray) -> np.ndarray:
        end = states[:, -1]
        value = np.maximum(spec.constraint.value(states[..., 0], states[..., 1:-1]).max(axis=1), 0.0) \
            if spec.constrained else np.zeros(len(states))
        value = value + spec.target.violation(end[:, :-1])
        if np.isfinite(spec.budget):
            value = value + np.maximum(end[:, -1] - spec.budget, 0.0)
        tube = np.max(np.abs(states[..., :-1] - reference), axis=(1, 2))
        return value + config.TUBE_PENALTY * np.maximum(tube - delta, 0.0)

    return objective, reference


def _isolation_level(point: Dict[str, Any], spec: ProblemSpec, ref: Process, delta: float, seeds: int, seed: int):
    floor = point['w0_floor']
    intervals = int(point.get('nodes', ref.N))
    objective, reference = _probe_objective(spec, ref, delta, intervals)
    trans = transcribe(spec, 'strict', intervals, w0_floor=floor, free_time=False, horizon=ref.S,
                       objective=objective, constraints=())
    init = inner_approximate(spec, ref, floor).process
    report = multistart(trans, seeds=seeds, rng_seed=seed, init=init, threads_count=1)
    record = check_feasibility(spec, report.process)
    tube = float(np.max(np.abs(report.process.states[:, :-1] - reference)))
    logger.info('gapcert: isolation probe w0_floor=%g: feasibility defect %.6g, tube %.4g'
                % (floor, record.total, tube))
    return record, tube, report.process


def isolation_probe(spec: ProblemSpec, ref: Process, delta: float, schedule: Sequence[Union[float, Dict[str, Any]]],
                    seeds: int = 1, seed: int = 0) -> IsolationProbe:
    """
    Looks for strict-sense processes near a reference: per w0 floor, minimizes the feasibility defect over
    the strict layer on [0, S(ref)] with the tube |(y0, y) - ref| <= delta penalized.
    :param spec: Problem
    :param ref: Feasible extended process
    :param delta: Tube radius
    :param schedule: Decreasing w0 floors, or points {'w0_floor': f, 'nodes': N}
    :return: IsolationProbe; the floor per level is the feasibility defect of the best probe process
    """
    if delta <= 0:
        raise ParameterError('tube radius must be positive')
    points = [p if isinstance(p, dict) else {'w0_floor': float(p)} for p in schedule]
    if not points:
        raise ParameterError('refinement schedule is empty')
    if not check_feasibility(spec, ref, 10 * config.TOL_FEAS).feasible:
        raise ParameterError('isolation probe needs a feasible reference process')

    levels = exec_multi_arg_func(_isolation_level, points, spec, ref, delta, seeds, seed, threads_count=config.THREADS)
    floors = [point['w0_floor'] for point in points]
    records = [record for record, _, _ in levels]
    values = np.array([record.total for record in records])
    excess = np.array([max(tube - delta, 0.0) for _, tube, _ in levels])
    processes = [proc for _, _, proc in levels]

    if delta < 10 * config.TOL_FEAS:
        verdict = 'inconclusive'
    elif values[-1] <= config.CONTROLLABLE_FLOOR:
        verdict = 'controllable-evidence'
    elif np.all(values >= config.ISOLATION_FLOOR):
        verdict = 'isolated-evidence'
    else:
        verdict = 'inconclusive'
    return IsolationProbe(delta, floors, values, excess, verdict, records, processes)


@dataclass(eq=False)
class GapVerdict:
    verdict: str
    margin: float
    differences: Dict[str, float]


def gap_verdict(strict: Trend, extended: Trend, relaxed: Optional[Trend] = None, solver_tol: Optional[float] = None,
                spread: Optional[float] = None) -> GapVerdict:
    """
    Compares layer limits. Gap evidence needs the strict limit above the extended (or relaxed) limit by more
    than 3 * (solver_tol + spread); spread defaults to the largest last-step change of the trends.
    """
    trends = [t for t in (strict, extended, relaxed) if t is not None]
    if any(len(t.best_so_far) == 0 for t in trends):
        raise ParameterError('trends must be nonempty')
    solver_tol = config.GAP_TOLERANCE if solver_tol is None else solver_tol
    spread = max(t.spread for t in trends) if spread is None else spread
    margin = 3.0 * (solver_tol + spread)

    differences = {}
    for other in trends[1:]:
        differences[other.layer] = strict.limit - other.limit
    lower_limits = [t.limit for t in trends[1:]]

    if not np.isfinite(strict.limit) or any(not np.isfinite(v) for v in lower_limits):
        verdict = 'inconclusive'
    elif any(diff > margin for diff in differences.values()):
        verdict = 'gap-evidence'
    else:
        verdict = 'no-gap-evidence'
    return GapVerdict(verdict, margin, differences)


@dataclass(eq=False)
class GapReport:
    strict: Trend
    extended: Trend
    relaxed: Optional[Trend]
    verdict: GapVerdict
    probe: Optional[IsolationProbe] = None
    classification: Optional[str] = None
    warnings: List[str] = field(default_factory=list)
    note: str = ''


def layer_warnings(strict: Trend, extended: Trend, relaxed: Optional[Trend] = None,
                   tol: Optional[float] = None) -> List[str]:
    tol = config.GAP_TOLERANCE if tol is None else tol
    warnings = []
    if strict.limit < extended.limit - tol:
        warnings.append('strict limit %.8g below extended limit %.8g' % (strict.limit, extended.limit))
    if relaxed is not None and extended.limit < relaxed.limit - tol:
        warnings.append('extended limit %.8g below relaxed limit %.8g' % (extended.limit, relaxed.limit))
    return warnings


def _dichotomy_note(probe: Optional[IsolationProbe], classification: Optional[str]) -> str:
    if probe is None or classification is None:
        return ''
    abnormal = classification in ABNORMAL_CLASSES
    if probe.verdict == 'isolated-evidence':
        if abnormal:
            return 'isolation evidence together with an abnormal multiplier'
        return 'isolation evidence but no abnormal multiplier: refine the grid or the sample set'
    if probe.verdict == 'controllable-evidence':
        return 'strict processes reach the tube; the reference is not isolated at this resolution'
    return 'probe inconclusive'


def build_report(strict: Trend, extended: Trend, relaxed: Optional[Trend] = None,
                 probe: Optional[IsolationProbe] = None, classification: Optional[str] = None,
                 solver_tol: Optional[float] = None, spread: Optional[float] = None) -> GapReport:
    verdict = gap_verdict(strict, extended, relaxed, solver_tol, spread)
    warnings = layer_warnings(strict, extended, relaxed, solver_tol)
    for warning in warnings:
        logger.warning('gapcert: %s' % warning)
    return GapReport(strict, extended, relaxed, verdict, probe, classification, warnings,
                     _dichotomy_note(probe, classification))
