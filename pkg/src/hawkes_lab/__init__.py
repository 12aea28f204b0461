"""Simulation and diffusion-limit toolkit for compound Hawkes mid-price models."""

__version__ = "0.1.0"

from .chains import (
    MarkChainSpec,
    RegimeSpec,
    ctmc_stationary,
    simulate_chain,
    simulate_regime_path,
    stationary_distribution,
    two_state_chain,
)
from .hawkes import (
    EventStream,
    HawkesSpec,
    Identity,
    Saturating,
    ScaledSoft,
    compensator,
    intensity_at,
    simulate,
    time_rescale,
)
from .kernels import Exponential, PowerLaw, Zero, branching_ratio, eval_kernel, validate_stationarity
from .limits import (
    DiffusionLimit,
    chpdo_coefficients,
    diffusion_limit,
    event_rate,
    lln_drift,
    nstate_coefficients,
    regime_rate,
)
from .price import PriceModelSpec, sample_at, simulate_price
