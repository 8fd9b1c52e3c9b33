"""Numerical toolkit for turbulent free-space optical quantum channels."""

__version__ = "0.1.0"

from .channel import ChannelParams, rytov_parameter
from .kernels import (BeamStats, StatsBudget, channel_stats, eta2_qmc,
                      gamma2, gamma2_metadata, gamma4,
                      phase_structure_function)
from .pdt import (CompositeMoments, CompositePdt, TruncLogNormal,
                  WeibullParams, composite_expectation, composite_moments,
                  composite_mu, composite_pdt_build, composite_pdt_density,
                  composite_pdt_sample, composite_load, composite_save,
                  trunc_lognormal_density, trunc_lognormal_from_moments,
                  trunc_lognormal_sample, weibull_params,
                  weibull_pdt_density)
from .tracking import (TrackingConfig, postselected_moments,
                       tracked_exceedance, tracked_pdt,
                       tracking_from_fraction, transmitted_squeezing_db)
from .qkd import (DecoyParams, KeyRateResult, averaged_key_rate,
                  binary_entropy, extinction_transmittance, gain,
                  key_rate_integrand, mean_loss_db, one_photon_gain_lower,
                  qber, relative_improvement)
from .config import Scenario, load_scenario
from .cache import (cached_channel_stats, default_cache_dir, stats_cache_get,
                    stats_cache_put, stats_key)

__all__ = [
    "__version__",
    "ChannelParams", "rytov_parameter",
    "BeamStats", "StatsBudget", "channel_stats",
    "phase_structure_function", "gamma2", "gamma2_metadata",
    "gamma4", "eta2_qmc",
    "WeibullParams", "weibull_params", "weibull_pdt_density",
    "TruncLogNormal", "trunc_lognormal_from_moments",
    "trunc_lognormal_density", "trunc_lognormal_sample",
    "CompositePdt", "CompositeMoments", "composite_pdt_build",
    "composite_pdt_density", "composite_pdt_sample", "composite_mu",
    "composite_expectation", "composite_moments", "composite_save",
    "composite_load",
    "TrackingConfig", "tracking_from_fraction", "tracked_pdt",
    "tracked_exceedance", "postselected_moments",
    "transmitted_squeezing_db",
    "DecoyParams", "KeyRateResult", "binary_entropy", "gain", "qber",
    "one_photon_gain_lower", "key_rate_integrand", "averaged_key_rate",
    "relative_improvement", "extinction_transmittance", "mean_loss_db",
    "Scenario", "load_scenario",
    "stats_key", "stats_cache_get", "stats_cache_put",
    "cached_channel_stats", "default_cache_dir",
]
