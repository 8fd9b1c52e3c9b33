"""Beam tracking, exceedance functions, and postselection statistics.

A tracking system removes part of the centroid wandering variance; the
residual wandering reshapes the composite transmittance mixture while the
conditional law at fixed displacement stays untouched.  This module rebuilds
tracked mixtures, evaluates exceedance probabilities, and computes moments
conditioned on a postselection threshold, including the transmitted
squeezing of a squeezed-vacuum input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from .errors import (DegenerateDistribution, DomainError, EmptyPostselection,
                     InvalidTracking)
from .pdt import COMPONENT_CHUNK, composite_mu

MIN_ACCEPTANCE = 1e-6


@dataclass(frozen=True)
class TrackingConfig:
    """Tracking strength against a given wandering variance.

    Attributes
    ----------
    sigma_tr2 : float
        Variance removed by the tracking system, in m^2.
    sigma_bw2 : float
        Wandering variance of the untracked channel the config applies to,
        in m^2.
    jitter2 : float
        Optional additive variance from mechanical vibrations, applied to
        the wandering before tracking.
    """

    sigma_tr2: float
    sigma_bw2: float
    jitter2: float = 0.0

    def __post_init__(self):
        if self.sigma_tr2 < 0.0 or self.jitter2 < 0.0 or self.sigma_bw2 < 0.0:
            raise InvalidTracking("variances must be non-negative")
        if self.sigma_tr2 > self.sigma_bw2 + self.jitter2:
            raise InvalidTracking(
                "tracked variance %.4g exceeds available wandering %.4g"
                % (self.sigma_tr2, self.sigma_bw2 + self.jitter2))

    @property
    def delta2(self):
        """Residual wandering variance after tracking, in m^2."""
        return self.sigma_bw2 + self.jitter2 - self.sigma_tr2


def tracking_from_fraction(sigma_bw2, fraction, jitter2=0.0):
    """TrackingConfig with sigma_tr = fraction * sigma_bw.

    fraction = 0 leaves the channel untracked, fraction = 1 removes the
    wandering entirely (perfect tracking).  The fraction applies to the
    wandering including any jitter term.
    """
    if not 0.0 <= fraction <= 1.0:
        raise InvalidTracking("tracking fraction must lie in [0, 1], got %g"
                              % fraction)
    return TrackingConfig(fraction * fraction * (sigma_bw2 + jitter2),
                          sigma_bw2, jitter2)


def _check_match(c, t):
    if t.sigma_bw2 != c.sigma_bw2:
        raise InvalidTracking(
            "tracking config built for wandering variance %.6g, composite "
            "has %.6g" % (t.sigma_bw2, c.sigma_bw2))


def tracked_pdt(c, t):
    """Composite mixture after tracking.

    Only the displacement distribution changes: the radii are redrawn
    Rayleigh(sqrt(delta2)) from the composite's own seed, so fraction zero
    reproduces the input radii bit for bit, while (eta0_norm, zeta0_sq,
    r_scale, shape_lambda, sigma_r0) stay fixed.  Perfect tracking collapses
    the mixture onto the single zero-displacement component.

    Raises
    ------
    InvalidTracking
        If t was built against a different wandering variance.
    DegenerateDistribution
        If perfect tracking meets a zero conditional width (point mass).
    """
    _check_match(c, t)
    delta2 = t.delta2
    if delta2 == 0.0 and c.sigma_r0 == 0.0:
        raise DegenerateDistribution(
            "perfect tracking of a zero-width mixture leaves a point mass "
            "at %g" % c.eta0_norm)
    u = np.random.default_rng(c.seed).random(c.sample_count)
    radii = math.sqrt(delta2) * np.sqrt(-2.0 * np.log1p(-u))
    return replace(c, sigma_bw2=delta2, radii=radii)


def _resolve(c, t):
    if t is None:
        return c
    return tracked_pdt(c, t)


def tracked_exceedance(eta, c, t=None):
    """Probability that the tracked transmittance exceeds eta.

    Averages the per-component exceedance of the truncated log-normal
    conditionals over the tracked displacement radii; this is the exact
    complement of the integrated mixture density, so it is non-increasing
    in eta with value 1 at eta = 0 and 0 at eta = 1.

    Parameters
    ----------
    eta : float or ndarray
        Threshold transmittances.
    c : CompositePdt
    t : TrackingConfig, optional
        Omit for the untracked channel.

    Returns
    -------
    float or ndarray
    """
    ct = _resolve(c, t)
    eta_arr = np.atleast_1d(np.asarray(eta, dtype=float))
    out = np.zeros_like(eta_arr)
    out[eta_arr <= 0.0] = 1.0
    inside = (eta_arr > 0.0) & (eta_arr < 1.0)
    if inside.any():
        e = eta_arr[inside]
        mu = composite_mu(ct, ct.radii)
        if ct.sigma_r0 == 0.0:
            vals = np.exp(-mu)
            # Point-mass components: count those strictly above threshold.
            out[inside] = (vals[:, None] > e[None, :]).mean(axis=0)
        else:
            x = np.log(e)
            acc = np.zeros(e.size)
            for start in range(0, mu.size, COMPONENT_CHUNK):
                m = mu[start:start + COMPONENT_CHUNK, None]
                ratio = (special.ndtr((x[None, :] + m) / ct.sigma_r0)
                         / special.ndtr(m / ct.sigma_r0))
                acc += ratio.sum(axis=0)
            out[inside] = 1.0 - acc / mu.size
    return float(out[0]) if np.ndim(eta) == 0 else out


def postselected_moments(c, t, eta_min):
    """Transmittance moments conditioned on exceeding a threshold.

    Computes the first two moments of the tracked mixture restricted to
    eta > eta_min via closed-form partial moments of each truncated
    log-normal component, together with the acceptance probability (the
    exceedance at eta_min).

    Parameters
    ----------
    c : CompositePdt
    t : TrackingConfig or None
    eta_min : float
        Postselection threshold in [0, 1).

    Returns
    -------
    (mean_ps, mean2_ps, acceptance) : tuple of float

    Raises
    ------
    EmptyPostselection
        If the acceptance probability is at or below MIN_ACCEPTANCE.
    """
    if not 0.0 <= eta_min < 1.0:
        raise DomainError("postselection threshold must lie in [0, 1), "
                          "got %g" % eta_min)
    ct = _resolve(c, t)
    mu = composite_mu(ct, ct.radii)
    if ct.sigma_r0 == 0.0:
        vals = np.exp(-mu)
        sel = vals > eta_min
        acceptance = float(np.mean(sel))
        if acceptance <= MIN_ACCEPTANCE:
            raise EmptyPostselection("acceptance %.3g at threshold %g"
                                     % (acceptance, eta_min))
        kept = vals[sel]
        return float(np.mean(kept)), float(np.mean(kept * kept)), acceptance
    sig = ct.sigma_r0
    f1 = special.ndtr(mu / sig)
    if eta_min > 0.0:
        ln_min = math.log(eta_min)
        below = special.ndtr((ln_min + mu) / sig)
    else:
        below = np.zeros_like(mu)
    acceptance = float(np.mean((f1 - below) / f1))
    if acceptance <= MIN_ACCEPTANCE:
        raise EmptyPostselection("acceptance %.3g at threshold %g"
                                 % (acceptance, eta_min))

    def partial(n):
        # E[eta^n; eta_min < eta <= 1] for the nontruncated component, then
        # renormalized by f1 to match the truncated conditional law.
        shift = n * sig * sig
        top = special.ndtr((mu - shift) / sig)
        if eta_min > 0.0:
            bot = special.ndtr((ln_min + mu - shift) / sig)
        else:
            bot = 0.0
        weight = np.exp(-n * mu + 0.5 * n * n * sig * sig)
        return float(np.mean(weight * (top - bot) / f1))

    mean_ps = partial(1) / acceptance
    mean2_ps = partial(2) / acceptance
    return mean_ps, mean2_ps, acceptance


def transmitted_squeezing_db(v_in_db, c, t, eta_min):
    """Detected squeezing after the fluctuating channel with postselection.

    A squeezed-vacuum quadrature variance V_in (shot-noise units) turns into
    V_out = 1 + <eta>_ps (V_in - 1) under fluctuating loss, where <eta>_ps
    is the postselected mean transmittance; the output stays between the
    input level and the shot noise.

    Parameters
    ----------
    v_in_db : float
        Input squeezing in dB, negative for a squeezed state.
    c : CompositePdt
    t : TrackingConfig or None
    eta_min : float
        Postselection threshold.

    Returns
    -------
    float
        Output variance in dB, in (v_in_db, 0).
    """
    if v_in_db >= 0.0:
        raise DomainError("input must be squeezed (negative dB), got %g"
                          % v_in_db)
    mean_ps, _, _ = postselected_moments(c, t, eta_min)
    v_in = 10.0 ** (v_in_db / 10.0)
    v_out = 1.0 + mean_ps * (v_in - 1.0)
    return 10.0 * math.log10(v_out)
