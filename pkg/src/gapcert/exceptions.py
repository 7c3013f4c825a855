from typing import Iterable, Optional

from .configuration import PREFIX
from .utils import format_ranges


class GapCertError(Exception):
    pass


class ConfigurationError(GapCertError):
    def __init__(self, param_name):
        param_name = PREFIX + param_name
        super(ConfigurationError, self).__init__("Config parameter '%s' is not set properly" % param_name)


class ProblemLoadError(GapCertError):
    def __init__(self, path: str, message: str):
        self.path = path
        super(ProblemLoadError, self).__init__('%s: %s' % (path, message) if path else message)


class NumericError(GapCertError):
    pass


class IntegrationError(NumericError):
    def __init__(self, interval: int, message: str = 'non-finite state'):
        self.interval = interval
        super(IntegrationError, self).__init__('%s on interval %d' % (message, interval))


class InvariantError(GapCertError):
    pass


class SampleError(InvariantError):
    pass


class LayerError(InvariantError):
    pass


class ImpulsiveArcError(GapCertError):
    def __init__(self, intervals: Iterable[int], w0_min: float):
        self.intervals = sorted(intervals)
        super(ImpulsiveArcError, self).__init__(
            'inverse embedding undefined: w0 < %g on intervals %s' % (w0_min, format_ranges(self.intervals)))


class RangeError(GapCertError):
    pass


class DegenerateSampleError(GapCertError):
    def __init__(self, interval: int):
        self.interval = interval
        super(DegenerateSampleError, self).__init__(
            'interval %d has w0 below the floor and w = 0: no direction to renormalize' % interval)


class ParameterError(GapCertError):
    pass


class ParseError(GapCertError):
    def __init__(self, message: str, column: Optional[str] = None):
        self.column = column
        super(ParseError, self).__init__("%s (column '%s')" % (message, column) if column else message)
