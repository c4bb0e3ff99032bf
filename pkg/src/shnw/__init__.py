"""Pseudospectral simulator and verification harness for the stochastic
Hartree nonlinear wave equation on a periodic box."""

from .spectral import (
    Field,
    FourierMultiplier,
    SpectralGrid,
    apply_multiplier,
    lebesgue_norm,
    lp_project,
    make_grid,
    riesz_convolve,
    sobolev_norm,
    transform,
)
from .linwave import WaveState, apply_Q, apply_Stilde, propagate
from .stochastic import (
    NoiseModel,
    RandomizationSpec,
    RngStream,
    StepNoiseCovariance,
    advance_convolution,
    hs_norm,
    step_covariance,
    wiener_randomize,
)
from .dynamics import (
    BlowupMonitor,
    SimConfig,
    hartree_nonlinearity,
    residual_split,
    run_trajectory,
    step,
)
from .diagnostics import (
    DiagnosticsRecord,
    EnsembleSummary,
    energy,
    interpolation_check,
    ito_drift_fit,
    spacetime_norm,
    strichartz_exponents,
    tail_estimate,
    yz_norms,
)
from .config import parse_config

__version__ = "0.1.0"
