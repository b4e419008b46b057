"""Exception hierarchy shared by every module."""

from __future__ import annotations

import numpy as np


class RanddetError(Exception):
    """Base class for all library errors."""


class DimensionError(RanddetError, ValueError):
    """Operand shapes are incompatible."""


class DomainError(RanddetError, ValueError):
    """An argument lies outside the domain of the operation."""


class CapacityError(RanddetError):
    """An exhaustive computation would exceed its enumeration cap."""


class SingularityError(RanddetError, np.linalg.LinAlgError):
    """A factorization met a non-positive (or vanishing) pivot.

    ``pivot`` is the zero-based index of the failing pivot, when known.
    """

    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


class ParseError(RanddetError, ValueError):
    """A text input file could not be parsed."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
        self.path = path
        self.line = line
