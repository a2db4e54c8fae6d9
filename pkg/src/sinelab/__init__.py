"""Numerical laboratory for the sine-process.

Modules
-------
spectral_core      closed-form Fourier descriptors, seminorms, band decomposition
sine_kernel        sine kernel, Palm kernels, Dirichlet approximation
sampler            seeded CUE sampling, Palm samples, persistence
functionals        additive, multiplicative and pair functionals, G_X, Jacobians
operator_engine    continual Toeplitz/Hankel determinants and identity checks
deviation_lab      band large-deviation events and number tails
completeness_lab   removed-particle trends, Gram codimension, growth exponents
orchestrator       CLI, configuration and reports
"""
from .spectral_core import DomainError, QuadratureError

__version__ = "0.1.0"
__all__ = ["DomainError", "QuadratureError", "__version__"]
