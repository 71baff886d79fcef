"""Joint transmit/receive filter design for sub-Nyquist delay-Doppler radar.

The package models a periodic wideband probing signal observed through a
receive filter and a sub-Nyquist sampler, provides exact and approximated
Bayesian Fisher information for the (delay, Doppler) pair, optimizes both
filters by alternating eigenvector steps, and verifies designs with a
maximum-a-posteriori estimator in Monte-Carlo simulation.
"""

from .estimator import (
    AmbiguitySurface,
    McReport,
    ambiguity_surfaces,
    map_estimate,
    monte_carlo,
    sample_noise,
)
from .fim_approx import efim_approx, fim_approx
from .fim_exact import FimResult, bcrlb, efim, fim_exact, relative_gain
from .freqops import (
    NoiseModel,
    get_bundle,
    noise_covariance,
    received_signal,
)
from .model import (
    AliasPartition,
    ParameterPrior,
    SystemConfig,
    build_config,
    harmonic_limits,
    load_config,
    prior_quadrature,
)
from .optimizer import (
    DesignResult,
    SweepResult,
    alternate_optimize,
    pareto_sweep,
    scalarization_weight,
)
from .waveforms import (
    lfm_waveform,
    reference_lowpass,
    reference_pair,
    rpc_waveform,
)

__version__ = "0.1.0"

__all__ = [
    "AliasPartition",
    "AmbiguitySurface",
    "DesignResult",
    "FimResult",
    "McReport",
    "NoiseModel",
    "ParameterPrior",
    "SweepResult",
    "SystemConfig",
    "alternate_optimize",
    "ambiguity_surfaces",
    "bcrlb",
    "build_config",
    "efim",
    "efim_approx",
    "fim_approx",
    "fim_exact",
    "get_bundle",
    "harmonic_limits",
    "lfm_waveform",
    "load_config",
    "map_estimate",
    "monte_carlo",
    "noise_covariance",
    "pareto_sweep",
    "prior_quadrature",
    "received_signal",
    "reference_lowpass",
    "reference_pair",
    "relative_gain",
    "rpc_waveform",
    "sample_noise",
    "scalarization_weight",
    "__version__",
]
