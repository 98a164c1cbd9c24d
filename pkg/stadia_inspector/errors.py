"""Exception hierarchy for Stadia Inspector"""

from pathlib import Path
from typing import List, Optional, Tuple


class StadiaInspectorError(Exception):
    """Base class for every error raised by the toolkit"""


class ConfigError(StadiaInspectorError):
    """A manifest, preset, scenario or targets file failed validation"""


class TraceParseError(StadiaInspectorError):
    """A trace line could not be parsed"""

    def __init__(self, message: str, line_number: int, path: Optional[Path] = None):
        self.reason = message
        self.line_number = line_number
        self.path = path
        where = f"{path}:" if path else "line "
        super().__init__(f"{where}{line_number}: {message}")


class TraceValidationError(StadiaInspectorError):
    """A parsed record violates a packet or trace invariant"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")


class DatasetLoadError(StadiaInspectorError):
    """One or more manifest entries failed to load

    Attributes:
        failures: (file path, underlying error) pairs
    """

    def __init__(self, failures: List[Tuple[Path, Exception]]):
        self.failures = failures
        lines = [f"{path}: {error}" for path, error in failures]
        super().__init__(f"{len(failures)} trace(s) failed to load:\n" + "\n".join(lines))


class InsufficientDataError(StadiaInspectorError):
    """Not enough samples for the requested statistic"""


class FitError(StadiaInspectorError):
    """Generator parameters could not be fitted from a trace"""


class RateScaleError(StadiaInspectorError):
    """A requested rate is below what the stream can be scaled to"""


class ScheduleError(StadiaInspectorError):
    """A capacity or state schedule lookup fell outside its span"""


class UnknownMetricError(StadiaInspectorError):
    """A comparison target names a metric the report does not provide"""
