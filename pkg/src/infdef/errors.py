"""Exception types shared across the package."""


class InfdefError(Exception):
    """Base class for all package errors."""


class DomainError(InfdefError):
    """A latent point lies outside the chart's latent domain."""


class ChartError(InfdefError):
    """Chart index out of range for the manifold."""


class SingularityError(InfdefError):
    """Chart is rank deficient / degenerate at the requested point."""


class UnknownDensityError(InfdefError):
    """Requested latent density name is not registered."""


class UnknownManifoldError(InfdefError):
    """Requested manifold name is not registered."""


class ParamError(InfdefError):
    """Bad (non-finite or out-of-range) parameter value."""


class FormulaDomainError(InfdefError):
    """Closed-form expression evaluated outside its validity range."""


class NumericalError(InfdefError):
    """A non-finite value appeared during flow evaluation."""


class DivergenceError(InfdefError):
    """Training loss stayed non-finite for too many consecutive steps."""


class GridMismatchError(InfdefError):
    """Two gridded densities do not share the same evaluation grid."""


class ConfigError(InfdefError):
    """Experiment configuration failed validation."""
