"""
Exceptions raised by the laboratory.

Every error also derives from the builtin a caller would expect, so
``except ValueError`` keeps working around library calls.
"""


class LabError(Exception):
    """Base class for all laboratory errors."""


class DomainError(LabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(LabError, ValueError):
    """A configuration or a step size violates a stability or consistency rule."""


class StateError(LabError, RuntimeError):
    """Internal state is missing or out of date, e.g. a ring underflow."""


class SizeError(LabError, ValueError):
    """Inputs have incompatible or unsupported sizes."""


class FormatError(LabError, ValueError):
    """A binary snapshot or trajectory file is malformed."""
