"""Exception types raised by hardylab."""


class HardyLabError(Exception):
    """Base class for all hardylab errors."""


class GeometryError(HardyLabError, ValueError):
    """A grid, ball, annulus or band does not satisfy a geometric constraint."""


class GridMismatchError(HardyLabError, ValueError):
    """Two fields (or a field and an operator) live on different grids."""


class BasisError(HardyLabError):
    """An annular polynomial basis could not be built reliably."""


class DecompositionError(HardyLabError):
    """Molecule decomposition failed to reconstruct its input.

    The offending residual field is attached as ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CostGuardError(HardyLabError):
    """A requested evaluation would exceed the configured cost guard."""


class ConfigError(HardyLabError, ValueError):
    """A run configuration is malformed or violates a declared constraint."""
