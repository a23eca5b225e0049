"""
Exception types for the carbon_uq application.
"""

from typing import Optional


class CarbonUQError(ValueError):
    """Base class for all domain errors raised by carbon_uq."""


class ConfigError(CarbonUQError):
    """Invalid or inconsistent configuration."""


# Core time series


class EmptyOverlap(CarbonUQError):
    pass


class OutOfRange(CarbonUQError):
    pass


class AlignmentError(CarbonUQError):
    pass


# Ingestion


class ParseError(CarbonUQError):
    """
    Malformed input file.

    Carries the file path, the 1-based line number (header is line 1) and,
    where known, the offending column.
    """

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[str] = None,
    ):
        self.path = path
        self.line = line
        self.column = column

        location = []
        if path:
            location.append(str(path))
        if line is not None:
            location.append(f"line {line}")
        if column:
            location.append(f"column '{column}'")

        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class GapTooLarge(CarbonUQError):
    def __init__(self, first_missing: str, last_missing: str, hours: int, path: Optional[str] = None):
        self.first_missing = first_missing
        self.last_missing = last_missing
        self.hours = hours
        self.path = path
        where = f"{path}: " if path else ""
        super().__init__(
            f"{where}gap of {hours} hours from {first_missing} to {last_missing} "
            f"exceeds the forward-fill limit"
        )


class ZeroGeneration(CarbonUQError):
    def __init__(self, stamp: int):
        self.stamp = stamp
        super().__init__(f"total generation is zero at hour {stamp}")


class MissingFactor(CarbonUQError):
    def __init__(self, source: str):
        self.source = source
        super().__init__(f"no emission factor for source '{source}'")


class InconsistentHorizon(CarbonUQError):
    pass


class ValueOutOfUnitRange(CarbonUQError):
    pass


# Forecast accuracy


class InsufficientHistory(CarbonUQError):
    pass


class ZeroTruthValue(CarbonUQError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"truth value at index {index} is zero")


class LengthMismatch(CarbonUQError):
    pass


class HorizonMismatch(CarbonUQError):
    pass


class TruthMissing(CarbonUQError):
    pass


class DateOutOfStudyRange(CarbonUQError):
    pass


# Conformal


class EmptyInput(CarbonUQError):
    pass


class EmptyWindow(CarbonUQError):
    pass


class WindowTooSmall(CarbonUQError):
    pass


class LagLengthMismatch(CarbonUQError):
    pass


# Load shifting and pipeline


class InsufficientDays(CarbonUQError):
    pass


class AlphaMismatch(CarbonUQError):
    pass


class EmptyTestSplit(CarbonUQError):
    pass
