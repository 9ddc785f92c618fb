"""Inflation-deflation density estimation on known low-dimensional manifolds.

Add noise in the manifold's normal space (or the full ambient space), fit
a normalizing flow to the inflated density by maximum likelihood, then
divide by the closed-form noise constant to recover the density on the
manifold, together with the evaluation protocol (KS statistics, noise
magnitude bounds, reachability checks, latent-flow baseline).
"""

from .densities import LatentDensity, make_density
from .errors import (
    ChartError,
    ConfigError,
    DivergenceError,
    DomainError,
    FormulaDomainError,
    GridMismatchError,
    InfdefError,
    NumericalError,
    ParamError,
    SingularityError,
    UnknownDensityError,
    UnknownManifoldError,
)
from .flow import FlowHyper, FlowModel
from .manifolds import (
    ChartSpec,
    ManifoldSpec,
    NormalFrame,
    embed,
    get_manifold,
    gram_det,
    jacobian,
    nearest_point,
    normal_frame,
    sqrt_gram,
)
from .noise import (
    IsotropicGaussian,
    NormalChiSquared,
    NormalGaussian,
    NormalUniformBall,
    NormalUniformInterval,
    deflation_constant,
    gaussian_vs_normal_error,
    gaussian_vs_normal_error_mc,
    inflate,
    reachability_check,
)
from .training import Adam, TrainConfig, TrainResult, train

__version__ = "0.1.0"
