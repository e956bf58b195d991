"""Mittag-Leffler functions, fractional operators and Hölder exponents of
time-fractional stochastic diffusion."""

from .errors import AccuracyError, DomainError, FracHolderError, InstabilityError
from .fracops import (FracOrder, LFDResult, RealFunction, caputo_derivative,
                      fractional_taylor_remainder, local_frac_derivative, power_function,
                      rl_derivative, rl_integral)
from .holder import (FitResult, HolderOrder, IncrementCurve, caputo_h, caputo_h_limit,
                     fit_exponent, h_derivatives_at_s, h_s, increment_space, increment_tail,
                     increment_time)
from .kernels import (ModelParams, exponents, fourier_Y, int_Y_squared, j0_periodic, kernel_Y,
                      plancherel_constant)
from .sim import Field2D, Sigma, SimConfig, empirical_holder, simulate
from .special import BACKEND, ml_envelope, mittag_leffler

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "DomainError", "FracHolderError", "InstabilityError",
    "FracOrder", "LFDResult", "RealFunction", "caputo_derivative", "fractional_taylor_remainder",
    "local_frac_derivative", "power_function", "rl_derivative", "rl_integral",
    "FitResult", "HolderOrder", "IncrementCurve", "caputo_h", "caputo_h_limit", "fit_exponent",
    "h_derivatives_at_s", "h_s", "increment_space", "increment_tail", "increment_time",
    "ModelParams", "exponents", "fourier_Y", "int_Y_squared", "j0_periodic", "kernel_Y",
    "plancherel_constant", "Field2D", "Sigma", "SimConfig", "empirical_holder", "simulate",
    "BACKEND", "ml_envelope", "mittag_leffler", "__version__",
]
