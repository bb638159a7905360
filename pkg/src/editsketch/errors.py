"""Exception types shared across the package.

Decoding and recovery failures are signalled by returning None (callers treat
them as protocol failures); exceptions are reserved for contract violations.
"""

from __future__ import annotations


class EditSketchError(Exception):
    """Base class for all package errors."""


class ParameterError(EditSketchError):
    """A caller-supplied parameter is out of its documented range."""


class CapacityError(EditSketchError):
    """Requested parameters exceed a configured maximum."""


class RangeError(EditSketchError):
    """An index is outside its domain."""


class ScriptInvalidError(EditSketchError):
    """An edit script references a position that does not exist."""


class SearchExhaustedError(EditSketchError):
    """A seed search ran out of budget, including after escalation."""


class PropertyError(EditSketchError):
    """An input violates a precondition that is checked explicitly."""
