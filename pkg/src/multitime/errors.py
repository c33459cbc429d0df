"""Exception types shared across the package."""


class MultitimeError(Exception):
    """Base class for all package-specific errors."""


class QuadratureError(MultitimeError):
    """An adaptive quadrature failed to reach the requested tolerance."""


class MemoryTailError(MultitimeError):
    """The memory-coefficient tail never fell below the requested tolerance."""


class AutomatonSizeError(MultitimeError):
    """The exact history automaton would exceed the state-count cap."""


class CompressionError(MultitimeError):
    """Bond compression failed its contraction-error validation."""


class DefectiveDecompositionError(MultitimeError):
    """Left/right eigenvector pairing is too ill-conditioned to biorthogonalize."""


class PoleOnAxisError(MultitimeError):
    """A spectrum was requested with an undamped mode and no damping floor."""


class CacheFormatError(MultitimeError):
    """A propagator cache file is corrupt or has an incompatible version."""


class ConfigError(MultitimeError):
    """A run configuration is malformed or inconsistent."""
