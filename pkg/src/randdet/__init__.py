"""Expected determinants of random sums of rank-one matrices and their applications."""

from .errors import (
    CapacityError,
    DimensionError,
    DomainError,
    ParseError,
    RanddetError,
    SingularityError,
)

__version__ = "0.1.0"
