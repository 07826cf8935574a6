"""Exception hierarchy shared by all prunebias modules.

Everything raised on bad user input derives from :class:`InputError`, so the
CLI can map it to exit code 1 and leave genuine bugs (exit code 2) visible.
"""

from __future__ import annotations


class PruneBiasError(Exception):
    """Base class for all errors raised by this package."""


class InputError(PruneBiasError):
    """A problem with user-supplied data or arguments."""


class FormatError(InputError):
    """A file does not conform to its declared on-disk format."""


class DataValueError(InputError):
    """A cell holds a value outside its legal domain (non-binary label, score outside [0, 1])."""


class UniquenessError(InputError):
    """Duplicate sample id or attribute name where uniqueness is required."""


class AlignmentError(InputError):
    """Two structures that must share sample/attribute keys do not."""


class LengthError(FormatError):
    """Binary payload shorter or longer than its declared dimensions."""


class ArgumentError(InputError):
    """An operation was called with arguments violating its preconditions."""


class EmptyInputError(ArgumentError):
    """An operation that needs at least one sample received none."""


class DegenerateInputError(InputError):
    """Input is structurally valid but the quantity is undefined on it
    (single-class labels for AUC, zero denominator counts, zero-variance target)."""
