"""
Structured text reports (INI-like sections) and SVG trend plots
"""
import io
from typing import Any, Iterable, Optional, Sequence, Tuple

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .csvio import emit_multiplier_csv, emit_probe_csv, emit_trend_csv

SVG_SALT = 'gapcert'


def _value(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return '%.10g' % value
    if isinstance(value, np.ndarray):
        return ' '.join(_value(v) for v in value.ravel())
    if isinstance(value, (list, tuple)):
        return ' '.join(_value(v) for v in value)
    return str(value)


def section(name: str, items: Iterable[Tuple[str, Any]]) -> str:
    lines = ['[%s]' % name]
    lines += ['%s = %s' % (key, _value(value)) for key, value in items]
    return '\n'.join(lines) + '\n'


def block(name: str, text: str) -> str:
    """
    Verbatim block, used for embedded CSV
    """
    return '[%s]\n%s\n' % (name, text.rstrip('\n'))


def solve_report(report, spec) -> str:
    proc = report.process
    items = [
        ('problem', spec.name),
        ('layer', proc.layer),
        ('nodes', proc.N),
        ('status', report.status),
        ('objective', report.objective),
        ('violation', report.violation),
        ('kkt_residual', report.kkt_residual),
        ('horizon', proc.S),
        ('iterations', report.iterations),
        ('inner_iterations', report.inner_iterations),
        ('evaluations', report.evaluations),
        ('start', report.start),
    ]
    text = section('solve', items)
    text += section('multipliers', [(name, float(np.max(values, initial=0.0)))
                                    for name, values in report.multipliers.items() if len(values)])
    return text


def extremal_report(report, spec, proc) -> str:
    text = section('certify', [('problem', spec.name), ('mode', report.mode),
                               ('classification', report.classification), ('status', report.status)])
    text += section('values', list(report.values.items()))
    for note in report.notes:
        text += section('note', [('text', note)])
    for name, mult in report.witnesses.items():
        text += section('witness.%s' % name, [('gamma', mult.gamma), ('pi', mult.pi),
                                              ('atoms', list(mult.nodes)), ('masses', mult.masses)])
        text += section('residuals.%s' % name, list(report.residuals[name].items()))
        buffer = io.StringIO()
        emit_multiplier_csv(spec, proc, mult, buffer)
        text += block('witness.%s.csv' % name, buffer.getvalue())
    return text


def cq_report(report, s_bar: float) -> str:
    items = [('s_bar', s_bar), ('boundary', report.boundary), ('branch', report.branch or 'none'),
             ('verdict', report.verdict), ('margin', report.margin), ('delta', report.delta),
             ('delta1', report.delta1), ('intervals', len(report.intervals))]
    text = section('cq', items)
    for i, (w0, w, a_index) in enumerate(report.witnesses):
        text += section('cq.witness.%d' % i, [('w0', w0), ('w', w), ('a_index', a_index)])
    return text


def gap_report(report) -> str:
    verdict = report.verdict
    text = section('gap', [('verdict', verdict.verdict), ('margin', verdict.margin)] +
                   [('difference.%s' % layer, diff) for layer, diff in verdict.differences.items()])
    for trend in (report.strict, report.extended, report.relaxed):
        if trend is None:
            continue
        text += section('trend.%s' % trend.layer, [('limit', trend.limit), ('spread', trend.spread),
                                                   ('statuses', ' '.join(trend.statuses))])
        buffer = io.StringIO()
        emit_trend_csv(trend, buffer)
        text += block('trend.%s.csv' % trend.layer, buffer.getvalue())
    if report.probe is not None:
        text += section('probe', [('delta', report.probe.delta), ('verdict', report.probe.verdict)])
        buffer = io.StringIO()
        emit_probe_csv(report.probe, buffer)
        text += block('probe.csv', buffer.getvalue())
    if report.classification is not None:
        text += section('dichotomy', [('classification', report.classification), ('note', report.note)])
    for warning in report.warnings:
        text += section('warning', [('text', warning)])
    return text


def plot_trends(trends: Sequence, path: str, title: Optional[str] = None) -> None:
    """
    Writes best-so-far objective per refinement point as SVG. Output is byte-identical for identical input.
    """
    with matplotlib.rc_context({'svg.hashsalt': SVG_SALT, 'svg.fonttype': 'none'}):
        fig = Figure(figsize=(6, 4))
        ax = fig.subplots()
        for trend in trends:
            if trend is None:
                continue
            ax.plot(np.arange(1, len(trend.best_so_far) + 1), trend.best_so_far, marker='o', label=trend.layer)
        ax.set_xlabel('refinement point')
        ax.set_ylabel('best objective')
        if title:
            ax.set_title(title)
        ax.legend()
        fig.savefig(path, format='svg', metadata={'Date': None})
