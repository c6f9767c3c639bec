"""Exception hierarchy shared across the package.

Exceptions map onto CLI exit codes: configuration problems exit 2,
file/raster I/O problems exit 3, dataset integrity problems exit 4.
"""

from __future__ import annotations


class MatteforgeError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(MatteforgeError):
    """Invalid parameter value or combination of parameters."""

    exit_code = 2


class PipelineIOError(MatteforgeError):
    """File, directory, decode, or raster-shape failure."""

    exit_code = 3


class ShapeError(PipelineIOError):
    """Raster dimensions do not match what the operation requires."""


class PoolError(PipelineIOError):
    """A foreground or background pool cannot be assembled."""


class IntegrityError(MatteforgeError):
    """A plan or manifest references data inconsistently."""

    exit_code = 4


class MissingIdError(IntegrityError):
    """A plan references an entry that does not exist in a pool."""
