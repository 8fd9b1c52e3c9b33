"""Channel statistics: mean transmittance, mean square, wander, beam width.

The isotropy of the mean-intensity integrand reduces every aperture
functional of Gamma_2 to a 1-D integral over the source-plane radius rho of
the damping profile g(rho) = exp(-rho^2/(2 W0^2) - D_S(0, rho)/2):

    mass(R)  = (k R / L) Int_0^inf g(rho) J1(k R rho / L) drho
    M2(R)    = (R^2 / 2) mass(R) - R^2 Int_0^inf g(rho) J2(k R rho / L) / rho drho

where mass(R) is the beam mass inside radius R (the mean transmittance for
R = a) and M2(R) is Int x^2 Gamma_2 over the same disk. The total mass is
exactly 1 for any turbulence strength.

For a pure 5/3-law structure function the full-plane second moment diverges
like R^(1/3) (the far halo), so the short-term width is cutoff-defined: M2 is
evaluated at the radius enclosing 99.9% of the beam mass, and the 99% value
is reported in the diagnostics as a sensitivity indicator.

The wandering variance uses the first-order (tilt) reduction of the same
delta-correlated phase statistics, normalized so the plane-wave structure
function is exactly 2 Cn2 k^2 L rho^(5/3):

    sigma_bw^2 = (5/3) Gamma(11/6) Cn2 Int_0^L (L - z)^2 W(z)^(-1/3) dz,

with W(z) the vacuum width of the focused beam at distance z. Its
diffractionless limit (5/8) Gamma(11/6) Cn2 L^3 W0^(-1/3) is used as an
oracle in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, optimize, special

from ..channel import ChannelParams
from ..errors import QuadratureNotConverged, StatsInvariantViolation
from .gamma2 import envelope
from .gamma4 import (DEFAULT_LOG2_POINTS, DEFAULT_REPLICATES, QmcResult,
                     aperture_cov_qmc)

# Relative floor applied to quoted standard errors: deterministic quadrature
# results are exact only to their tolerance, and exact closed forms (vacuum)
# would otherwise quote zero error.
SE_FLOOR = 1e-9

WANDER_COEFF = (5.0 / 3.0) * float(special.gamma(11.0 / 6.0))
MASS_FRACTION = 0.999


@dataclass(frozen=True)
class StatsBudget:
    """Point budgets for the quadrature and QMC stages."""
    eta2_log2_points: int = DEFAULT_LOG2_POINTS
    eta2_replicates: int = DEFAULT_REPLICATES
    gh_nodes: int = 96

    def __post_init__(self):
        if self.eta2_log2_points < 4 or self.eta2_replicates < 2 or self.gh_nodes < 16:
            raise ValueError("budget too small")

    @classmethod
    def from_log2_total(cls, log2_total: int) -> "StatsBudget":
        """Budget with 2**log2_total QMC points split over 16 replicates."""
        if log2_total < 8:
            raise ValueError("log2_total must be >= 8")
        return cls(eta2_log2_points=log2_total - 4, eta2_replicates=16)

    def scaled(self, **kw) -> "StatsBudget":
        return replace(self, **kw)


@dataclass(frozen=True)
class BeamStats:
    """The four statistics that parameterize the transmittance distribution.

    mean_eta and mean_eta2 are dimensionless transmittance moments; sigma_bw2
    is the per-axis beam-wandering variance in m^2; wst2 is the squared
    short-term beam width in m^2. Standard errors carry the quoted floor of
    SE_FLOOR relative units; diagnostics hold convergence metadata.
    """
    mean_eta: float
    mean_eta2: float
    sigma_bw2: float
    wst2: float
    se_mean_eta: float = 0.0
    se_mean_eta2: float = 0.0
    se_sigma_bw2: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mean_eta": self.mean_eta,
            "mean_eta2": self.mean_eta2,
            "sigma_bw2": self.sigma_bw2,
            "wst2": self.wst2,
            "se_mean_eta": self.se_mean_eta,
            "se_mean_eta2": self.se_mean_eta2,
            "se_sigma_bw2": self.se_sigma_bw2,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BeamStats":
        return cls(**d)


def _radial_quad(f, hi, **kw):
    val, err = integrate.quad(f, 0.0, hi, limit=500,
                              epsabs=1e-13, epsrel=1e-10, **kw)
    return val, err


def _support_radius(params: ChannelParams) -> float:
    # g decays at least as fast as the Gaussian envelope.
    return 14.0 * params.w0


def enclosed_mass(radius: float, params: ChannelParams) -> tuple[float, float]:
    """Beam mass inside the given receiver radius, with quadrature error."""
    c = params.k * radius / params.length

    def f(rho):
        return envelope(rho, params) * special.j1(c * rho)

    val, err = _radial_quad(f, _support_radius(params))
    return c * val, c * err


def mean_eta_quad(params: ChannelParams) -> tuple[float, float]:
    """Mean transmittance: aperture integral of the mean intensity."""
    return enclosed_mass(params.aperture_radius, params)


def mass_cut_radius(params: ChannelParams, fraction: float = MASS_FRACTION) -> float:
    """Radius enclosing the given fraction of the (unit) beam mass."""
    lo = 0.25 * params.w_vac
    hi = 4.0 * params.w_vac
    while enclosed_mass(hi, params)[0] < fraction:
        hi *= 2.0
        if hi > 1e4 * params.w_vac:
            raise QuadratureNotConverged("mass quantile bracket failed")
    return optimize.brentq(
        lambda r: enclosed_mass(r, params)[0] - fraction, lo, hi,
        xtol=1e-12, rtol=1e-12)


def x2_moment(radius: float, params: ChannelParams) -> tuple[float, float]:
    """Int x^2 Gamma_2 over the centered disk of the given radius."""
    c = params.k * radius / params.length

    def f(rho):
        if rho == 0.0:
            return 0.0
        return envelope(rho, params) * special.jv(2, c * rho) / rho

    mass, mass_err = enclosed_mass(radius, params)
    tail, tail_err = _radial_quad(f, _support_radius(params))
    val = 0.5 * radius ** 2 * mass - radius ** 2 * tail
    err = 0.5 * radius ** 2 * mass_err + radius ** 2 * tail_err
    return val, err


def sigma_bw2_quad(params: ChannelParams) -> tuple[float, float]:
    """Beam-wandering variance (per axis) from the tilt path integral."""
    k, length, w0 = params.k, params.length, params.w0

    def f(z):
        wv2 = w0 * w0 * (1.0 - z / length) ** 2 + (2.0 * z / (k * w0)) ** 2
        return (length - z) ** 2 * wv2 ** (-1.0 / 6.0)

    val, err = integrate.quad(f, 0.0, length, limit=200,
                              epsabs=1e-16, epsrel=1e-12)
    scale = WANDER_COEFF * params.cn2
    return scale * val, scale * err


def _floored(se: float, value: float) -> float:
    return max(se, SE_FLOOR * (1.0 + abs(value)))


def eta2_qmc(params: ChannelParams,
             log2_points: int = DEFAULT_LOG2_POINTS,
             replicates: int = DEFAULT_REPLICATES,
             seed: int = 0,
             mean_eta: float | None = None) -> QmcResult:
    """Mean-square transmittance: squared mean plus the sampled covariance.

    The squared mean transmittance comes from the 1-D radial quadrature
    (error well under the QMC noise); only the flux covariance is sampled.
    In vacuum the covariance integrand vanishes identically and the exact
    closed form (1 - exp(-2 a^2 / W_vac^2))^2 is recovered with zero
    standard error.
    """
    if mean_eta is None:
        mean_eta = min(mean_eta_quad(params)[0], 1.0)
    cov = aperture_cov_qmc(params, log2_points, replicates, seed)
    diag = dict(cov.diagnostics)
    diag["flux_covariance"] = cov.value
    diag["mean_eta_sq"] = mean_eta ** 2
    return QmcResult(mean_eta ** 2 + cov.value, cov.std_error, diag)


def channel_stats(params: ChannelParams, budget: StatsBudget | None = None,
                  seed: int = 0) -> BeamStats:
    """All four channel statistics with standard errors and diagnostics.

    The moment inequalities mean_eta^2 <= mean_eta2 <= mean_eta can be broken
    by sampling noise; violations within 3 standard errors are clamped to the
    nearest boundary and recorded in diagnostics["clamped"], larger ones raise
    StatsInvariantViolation. A non-positive short-term width also raises.
    """
    budget = budget or StatsBudget()
    diagnostics: dict = {}

    mean_eta, me_err = mean_eta_quad(params)
    mean_eta = min(mean_eta, 1.0)
    se_me = _floored(me_err, mean_eta)

    sbw2, sbw_err = sigma_bw2_quad(params)
    se_sbw = _floored(sbw_err, sbw2)

    rcut = mass_cut_radius(params, MASS_FRACTION)
    x2, x2_err = x2_moment(rcut, params)
    wst2 = 4.0 * (x2 - sbw2)
    rcut99 = mass_cut_radius(params, 0.99)
    x2_99, _ = x2_moment(rcut99, params)
    diagnostics["mass_fraction"] = MASS_FRACTION
    diagnostics["rcut_m"] = rcut
    diagnostics["wst2_sensitivity_99"] = 4.0 * (x2_99 - sbw2)
    diagnostics["x2_error"] = x2_err

    if wst2 <= 0.0:
        raise StatsInvariantViolation(
            "short-term width squared is non-positive (%.3g)" % wst2)

    res = eta2_qmc(params, budget.eta2_log2_points,
                   budget.eta2_replicates, seed, mean_eta=mean_eta)
    mean_eta2 = res.value
    se_me2 = _floored(res.std_error, mean_eta2)
    diagnostics["eta2"] = res.diagnostics

    clamped = []
    lo, hi = mean_eta ** 2, mean_eta
    if mean_eta2 < lo:
        if lo - mean_eta2 > 3.0 * se_me2:
            raise StatsInvariantViolation(
                "mean_eta2 %.6g below mean_eta^2 %.6g by more than 3 se"
                % (mean_eta2, lo))
        clamped.append("mean_eta2->mean_eta^2")
        mean_eta2 = lo
    elif mean_eta2 > hi:
        if mean_eta2 - hi > 3.0 * se_me2:
            raise StatsInvariantViolation(
                "mean_eta2 %.6g above mean_eta %.6g by more than 3 se"
                % (mean_eta2, hi))
        clamped.append("mean_eta2->mean_eta")
        mean_eta2 = hi
    if clamped:
        diagnostics["clamped"] = clamped

    return BeamStats(
        mean_eta=mean_eta, mean_eta2=mean_eta2,
        sigma_bw2=sbw2, wst2=wst2,
        se_mean_eta=se_me, se_mean_eta2=se_me2, se_sigma_bw2=se_sbw,
        diagnostics=diagnostics)


def sigma_bw2_geometric(params: ChannelParams) -> float:
    """Diffractionless (large-k) limit of the wander integral; test oracle."""
    return (0.625 * float(special.gamma(11.0 / 6.0))
            * params.cn2 * params.length ** 3 * params.w0 ** (-1.0 / 3.0))
