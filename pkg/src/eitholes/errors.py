"""Exception hierarchy shared by all modules."""


class EitHolesError(Exception):
    """Base class for every error raised by the package."""


class MeshError(EitHolesError):
    """Invalid mesh input or violated mesh invariant."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class AssemblyError(EitHolesError):
    """Singular or degenerate finite-element system."""


class MeanViolation(EitHolesError):
    """A trace handed to the boundary integration has nonzero mean."""

    def __init__(self, mean, norm):
        super().__init__(f"trace mean {mean:.3e} exceeds tolerance (rms {norm:.3e})")
        self.mean = mean
        self.norm = norm


class Indeterminate(EitHolesError):
    """Boundary data cannot be assigned to one of the three cases."""

    def __init__(self, message, kernel_dim=None, lambda1_norm=None):
        super().__init__(message)
        self.kernel_dim = kernel_dim
        self.lambda1_norm = lambda1_norm


class CriterionFailure(EitHolesError):
    """A generator trace does not pass its holomorphy criterion."""


class AlgebraClosureError(EitHolesError):
    """A product of trace-algebra elements left the algebra numerically."""


class SeparationFailure(EitHolesError):
    """Generators do not separate boundary points."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class TopologyError(EitHolesError):
    """Seam removal did not split the character cloud into two sheets."""


class NeedsMoreGenerators(EitHolesError):
    """Too few independent harmonic functions for the metric fit."""


class FormatError(EitHolesError):
    """Malformed input file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
