"""Stationary photon numbers and output spectra of quantum-dot superluminescent diodes.

Multimode rate equations for three-level dots coupled to waveguide modes,
their steady states (closed form, time integration, Newton, order
parameter), Lorentzian output spectra, passive-waveguide transmission and
least-squares fits of measured spectra.
"""
from .errors import (ClampingError, ConfigError, ConvergenceError, DataFormatError, DegenerateDataError,
                     DomainError, FitInfeasibleError, GridError, LinewidthInstabilityError, NoRootError,
                     NonMonotoneGridError, PreconditionError, QdsldError, SingularJacobianError)
from .model import (DecayRates, DotParams, GaussianProfile, ModeSet, PumpParams, SystemParams,
                    WaveguideParams, build_params, cooperativity, decay_rates, gain_threshold,
                    gaussian_coupling)
from .single import SingleModeSolution, critical_pump_rate, no_se_branch, single_mode_steady
from .multi import (SteadyState, SystemState, integrate_to_steady, integrate_trajectory,
                    newton_steady, order_parameter_approx, order_parameter_exact, rate_rhs)
from .spectrum import (LorentzianResponse, Spectrum, continuum_spectrum, discrete_spectrum, g1,
                       linewidth, passive_transmission, passive_white_noise_spectrum,
                       transmission_matrix)
from .fit import FitResult, ModelFitSetup, fit_gaussian, fit_model, residual_norm

__version__ = "0.1.0"

__all__ = [
    "QdsldError",
    "DomainError",
    "PreconditionError",
    "NoRootError",
    "ConvergenceError",
    "SingularJacobianError",
    "ClampingError",
    "LinewidthInstabilityError",
    "GridError",
    "DegenerateDataError",
    "FitInfeasibleError",
    "ConfigError",
    "DataFormatError",
    "NonMonotoneGridError",
    "DecayRates",
    "DotParams",
    "GaussianProfile",
    "ModeSet",
    "PumpParams",
    "SystemParams",
    "WaveguideParams",
    "build_params",
    "cooperativity",
    "decay_rates",
    "gain_threshold",
    "gaussian_coupling",
    "SingleModeSolution",
    "critical_pump_rate",
    "no_se_branch",
    "single_mode_steady",
    "SteadyState",
    "SystemState",
    "integrate_to_steady",
    "integrate_trajectory",
    "newton_steady",
    "order_parameter_approx",
    "order_parameter_exact",
    "rate_rhs",
    "LorentzianResponse",
    "Spectrum",
    "continuum_spectrum",
    "discrete_spectrum",
    "g1",
    "linewidth",
    "passive_transmission",
    "passive_white_noise_spectrum",
    "transmission_matrix",
    "FitResult",
    "ModelFitSetup",
    "fit_gaussian",
    "fit_model",
    "residual_norm",
]
