"""Transmittance probability distributions for turbulent optical channels.

Three families cover the regimes of interest:

* log-negative Weibull: the transmittance distribution of a Gaussian beam
  whose centroid wanders around the aperture axis and suffers no other
  fading mechanism;
* truncated log-normal: matched to the first two transmittance moments,
  adequate when beam wandering is weak;
* displacement-conditioned composite: a log-normal law for the transmittance
  conditioned on the centroid displacement radius, mixed over the Rayleigh
  displacement distribution.  The mixture reproduces the moments it was
  built from and interpolates between the two pure families.

The composite supports density evaluation, sampling, expectations, moment
recovery with standard errors, and a versioned JSON serialization so that
downstream runs are exactly reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import (ApproximationBreakdown, DegenerateDistribution,
                     DomainError, RejectionStall)

RATIO_RANGE = (0.1, 10.0)      # validated a/W_ST range of the Weibull fit
XI_CUTOFF = 12.0               # Rayleigh quadrature cutoff; tail mass exp(-72)
NORM_RTOL = 1e-8
DEFAULT_SAMPLE_COUNT = 10_000  # mixture size for density work
MOMENT_SAMPLE_COUNT = 100_000  # mixture size for moment checks
REJECTION_MIN_F1 = 1e-3
# Mixing widths below this are indistinguishable from point masses at double
# precision (the variance ratio sits within rounding of 1); snapped to the
# closed-form zero-width branch so densities stay evaluable.
SIGMA_R0_FLOOR = 1e-7
GH_NODES = 64
COMPONENT_CHUNK = 4096

SERIAL_FORMAT = "turbchan.composite-pdt"
SERIAL_VERSION = 1

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class WeibullParams:
    """Log-negative Weibull fit of an offset Gaussian beam through a disk.

    Attributes
    ----------
    eta0_max : float
        Transmittance at zero displacement, 1 - exp(-2 a^2 / W_ST^2).
    r_scale : float
        Displacement scale of the attenuation law, in metres.
    shape_lambda : float
        Shape exponent of the attenuation law.
    ratio : float
        Aperture-to-beam ratio a / W_ST the fit was built from.
    """

    eta0_max: float
    r_scale: float
    shape_lambda: float
    ratio: float


def weibull_params(a, wst):
    """Fit the displacement-attenuation law of a Gaussian beam on a disk.

    The transmitted fraction of a beam of short-term radius ``wst`` displaced
    by ``r0`` from the centre of an aperture of radius ``a`` is modelled as
    eta0_max * exp(-(r0 / r_scale)**shape_lambda).  The scale and shape are
    matched to the exact offset overlap at r0 = a, using exponentially scaled
    Bessel functions so large aperture-to-beam ratios do not overflow.

    Parameters
    ----------
    a : float
        Aperture radius in metres.
    wst : float
        Short-term beam radius in metres.

    Returns
    -------
    WeibullParams

    Raises
    ------
    DomainError
        If a/wst falls outside the validated range RATIO_RANGE.
    """
    if a <= 0.0 or wst <= 0.0:
        raise DomainError("aperture and beam radii must be positive, got "
                          "a=%g wst=%g" % (a, wst))
    ratio = a / wst
    if not (RATIO_RANGE[0] <= ratio <= RATIO_RANGE[1]):
        raise DomainError("a/W_ST = %.4g outside validated range [%g, %g]"
                          % (ratio, RATIO_RANGE[0], RATIO_RANGE[1]))
    t = 4.0 * a * a / (wst * wst)
    eta0 = -math.expm1(-0.5 * t)
    i0 = special.i0e(t)
    i1 = special.i1e(t)
    logterm = math.log(2.0 * eta0 / (1.0 - i0))
    lam = 2.0 * t * (i1 / (1.0 - i0)) / logterm
    r_scale = a * logterm ** (-1.0 / lam)
    return WeibullParams(eta0, r_scale, lam, ratio)


def _weibull_form_density(eta_arr, eta0, r_scale, lam, sigma_bw2):
    # Density of eta = eta0 * exp(-(r/r_scale)**lam) with r Rayleigh(sigma_bw),
    # supported on (0, eta0). Array in, array out.
    out = np.zeros_like(eta_arr)
    inside = (eta_arr > 0.0) & (eta_arr < eta0)
    if inside.any():
        e = eta_arr[inside]
        ln_ratio = np.log(eta0 / e)
        g = 2.0 / lam
        pref = r_scale * r_scale / (sigma_bw2 * lam * e)
        out[inside] = (pref * ln_ratio ** (g - 1.0)
                       * np.exp(-0.5 * r_scale * r_scale / sigma_bw2
                                * ln_ratio ** g))
    return out


def weibull_pdt_density(eta, wp, sigma_bw2):
    """Transmittance density under beam wandering alone.

    Parameters
    ----------
    eta : float or ndarray
        Transmittance values.
    wp : WeibullParams
    sigma_bw2 : float
        Beam-wandering variance in m^2, must be positive.

    Returns
    -------
    float or ndarray
        Density on the support (0, eta0_max), zero outside.
    """
    if sigma_bw2 <= 0.0:
        raise DomainError("sigma_bw2 must be positive, got %g" % sigma_bw2)
    eta_arr = np.atleast_1d(np.asarray(eta, dtype=float))
    out = _weibull_form_density(eta_arr, wp.eta0_max, wp.r_scale,
                                wp.shape_lambda, sigma_bw2)
    return float(out[0]) if np.ndim(eta) == 0 else out


@dataclass(frozen=True)
class TruncLogNormal:
    """Log-normal law for the transmittance truncated to (0, 1].

    ln(eta) is normal with mean -mu and standard deviation sigma; f1 is the
    nontruncated cumulative at eta = 1 and renormalizes the density.
    """

    mu: float
    sigma: float
    f1: float


def trunc_lognormal_from_moments(mean_eta, mean_eta2):
    """Match a truncated log-normal to the first two transmittance moments.

    Parameters
    ----------
    mean_eta, mean_eta2 : float
        First and second moments, 0 < mean_eta**2 < mean_eta2 <= mean_eta <= 1.

    Returns
    -------
    TruncLogNormal

    Raises
    ------
    DegenerateDistribution
        If mean_eta2 == mean_eta**2 (zero variance; callers substitute a
        point mass at mean_eta).
    DomainError
        If the moments violate the moment inequalities.
    """
    if not (0.0 < mean_eta <= 1.0):
        raise DomainError("mean transmittance must lie in (0, 1], got %g"
                          % mean_eta)
    if mean_eta2 > mean_eta:
        raise DomainError("second moment %g exceeds first moment %g"
                          % (mean_eta2, mean_eta))
    msq = mean_eta * mean_eta
    if mean_eta2 < msq:
        raise DomainError("second moment %g below squared mean %g"
                          % (mean_eta2, msq))
    if mean_eta2 == msq:
        raise DegenerateDistribution(
            "zero transmittance variance; use a point mass at %g" % mean_eta)
    mu = -math.log(msq / math.sqrt(mean_eta2))
    sigma = math.sqrt(math.log(mean_eta2 / msq))
    f1 = special.ndtr(mu / sigma)
    return TruncLogNormal(mu, sigma, f1)


def trunc_lognormal_density(eta, p):
    """Density of a TruncLogNormal on (0, 1], zero outside."""
    eta_arr = np.atleast_1d(np.asarray(eta, dtype=float))
    out = np.zeros_like(eta_arr)
    inside = (eta_arr > 0.0) & (eta_arr <= 1.0)
    if inside.any():
        e = eta_arr[inside]
        z = (np.log(e) + p.mu) / p.sigma
        out[inside] = np.exp(-0.5 * z * z) / (e * p.sigma * _SQRT_2PI * p.f1)
    return float(out[0]) if np.ndim(eta) == 0 else out


def trunc_lognormal_sample(p, n, seed=0):
    """Draw n transmittance samples by rejection from the log-normal.

    Proposals come from the nontruncated log-normal; draws above 1 are
    rejected, so the acceptance rate equals p.f1.

    Raises
    ------
    RejectionStall
        If p.f1 < REJECTION_MIN_F1 (pathological truncation).
    """
    if n < 1:
        raise DomainError("sample count must be >= 1, got %d" % n)
    if p.f1 < REJECTION_MIN_F1:
        raise RejectionStall("acceptance rate F(1)=%.3g below %.0e"
                             % (p.f1, REJECTION_MIN_F1))
    rng = np.random.default_rng(seed)
    out = np.empty(n)
    got = 0
    rounds = 0
    while got < n:
        m = int((n - got) / p.f1 * 1.2) + 16
        draw = np.exp(rng.normal(-p.mu, p.sigma, size=m))
        keep = draw[draw <= 1.0][: n - got]
        out[got:got + keep.size] = keep
        got += keep.size
        rounds += 1
        if rounds > 100_000:
            raise RejectionStall("rejection loop failed to terminate")
    return out


@dataclass(frozen=True, eq=False)
class CompositePdt:
    """Displacement-conditioned transmittance mixture.

    Given a centroid displacement radius r0, the transmittance is log-normal
    with constant width sigma_r0 and location composite_mu(self, r0); the
    mixture averages over sample_count Rayleigh(sigma_bw) radii drawn once at
    build time from seed.  eta0_norm and zeta0_sq are normalized so the
    mixture's first two moments reproduce the channel moments it was built
    from (see composite_moments).
    """

    eta0_norm: float
    zeta0_sq: float
    weibull: WeibullParams
    sigma_bw2: float
    sigma_r0: float
    radii: np.ndarray
    sample_count: int
    seed: int
    aperture_radius: float

    def __post_init__(self):
        self.radii.setflags(write=False)


def _displacement_average(n, sigma_bw, wp):
    # E[exp(-n (r/r_scale)**lam)] over r ~ Rayleigh(sigma_bw); equals 1 when
    # the beam does not wander.
    if sigma_bw == 0.0:
        return 1.0
    s = sigma_bw / wp.r_scale
    lam = wp.shape_lambda

    def integrand(xi):
        return xi * math.exp(-0.5 * xi * xi - n * (s * xi) ** lam)

    val, _ = integrate.quad(integrand, 0.0, XI_CUTOFF,
                            epsabs=0.0, epsrel=NORM_RTOL, limit=200)
    return val


def composite_pdt_build(stats, a, sample_count=DEFAULT_SAMPLE_COUNT, seed=0):
    """Compose the transmittance distribution from channel moments.

    The conditional transmittance at displacement r0 is log-normal with
    r0-independent width; its location is normalized so that averaging the
    conditional moments over the Rayleigh displacement law returns exactly
    the input mean_eta and mean_eta2.  The normalization integrals are done
    by adaptive quadrature on [0, XI_CUTOFF] with relative tolerance
    NORM_RTOL.

    Parameters
    ----------
    stats : BeamStats
        Channel moments and beam geometry (mean_eta, mean_eta2, sigma_bw2,
        wst2).
    a : float
        Aperture radius in metres.
    sample_count : int
        Number of displacement radii in the mixture.
    seed : int
        Seed for the Rayleigh radii; the draw happens once, here.

    Returns
    -------
    CompositePdt

    Raises
    ------
    ApproximationBreakdown
        If the normalized second moment falls below the squared normalized
        first moment, which makes the conditional width imaginary; the
        weak-wandering closure does not apply to these stats.
    DegenerateDistribution
        If both the wandering and the conditional width vanish (the
        distribution is a point mass).
    """
    if a <= 0.0:
        raise DomainError("aperture radius must be positive, got %g" % a)
    if sample_count < 1:
        raise DomainError("sample_count must be >= 1, got %d" % sample_count)
    wst = math.sqrt(stats.wst2)
    wp = weibull_params(a, wst)
    sigma_bw = math.sqrt(stats.sigma_bw2)
    i1 = _displacement_average(1.0, sigma_bw, wp)
    i2 = _displacement_average(2.0, sigma_bw, wp)
    eta0 = stats.mean_eta / i1
    zeta0_sq = stats.mean_eta2 / i2
    ratio = zeta0_sq / (eta0 * eta0)
    if ratio < 1.0:
        # Rounding in the normalization can land a hair below 1 when the
        # true variance is zero; anything further below is a real failure.
        if 1.0 - ratio > 1e-12:
            raise ApproximationBreakdown(
                "normalized second moment %.6g < squared normalized mean "
                "%.6g; conditional width would be imaginary"
                % (zeta0_sq, eta0 * eta0))
        ratio = 1.0
    sigma_r0 = math.sqrt(math.log(ratio)) if ratio > 1.0 else 0.0
    if sigma_r0 < SIGMA_R0_FLOOR:
        sigma_r0 = 0.0
    if sigma_r0 == 0.0 and sigma_bw == 0.0:
        raise DegenerateDistribution(
            "no wandering and zero conditional width; point mass at %g"
            % eta0)
    u = np.random.default_rng(seed).random(sample_count)
    radii = sigma_bw * np.sqrt(-2.0 * np.log1p(-u))
    return CompositePdt(eta0, zeta0_sq, wp, stats.sigma_bw2, sigma_r0,
                        radii, sample_count, seed, a)


def composite_mu(c, r0):
    """Location parameter of the conditional log-normal at displacement r0.

    Equals -ln(eta0_norm^2 / sqrt(zeta0_sq)) + (r0 / r_scale)**shape_lambda,
    increasing in r0: a larger displacement can only attenuate.  Vectorized
    in r0.
    """
    mu0 = -math.log(c.eta0_norm * c.eta0_norm / math.sqrt(c.zeta0_sq))
    return mu0 + (r0 / c.weibull.r_scale) ** c.weibull.shape_lambda


def composite_pdt_density(eta, c):
    """Density of the composite mixture at eta.

    With a positive conditional width this is the equal-weight average of
    the truncated log-normal component densities, each renormalized to
    (0, 1].  With zero conditional width every component is a point mass
    and the mixture's continuum limit is the log-negative Weibull form,
    evaluated in closed form with eta0_norm in place of eta0_max.
    """
    eta_arr = np.atleast_1d(np.asarray(eta, dtype=float))
    if c.sigma_r0 == 0.0:
        out = _weibull_form_density(eta_arr, c.eta0_norm, c.weibull.r_scale,
                                    c.weibull.shape_lambda, c.sigma_bw2)
        return float(out[0]) if np.ndim(eta) == 0 else out
    out = np.zeros_like(eta_arr)
    inside = (eta_arr > 0.0) & (eta_arr <= 1.0)
    if inside.any():
        x = np.log(eta_arr[inside])
        mu = composite_mu(c, c.radii)
        acc = np.zeros(x.size)
        for start in range(0, mu.size, COMPONENT_CHUNK):
            m = mu[start:start + COMPONENT_CHUNK, None]
            z = (x[None, :] + m) / c.sigma_r0
            acc += (np.exp(-0.5 * z * z)
                    / special.ndtr(m / c.sigma_r0)).sum(axis=0)
        out[inside] = acc / (mu.size * c.sigma_r0 * _SQRT_2PI
                             * eta_arr[inside])
    return float(out[0]) if np.ndim(eta) == 0 else out


def composite_pdt_sample(c, n, seed=0):
    """Draw n transmittances: pick a component uniformly, then draw from its
    truncated log-normal by rejection (point evaluation when the conditional
    width is zero).

    Raises
    ------
    RejectionStall
        If the mildest component's acceptance rate falls below
        REJECTION_MIN_F1.
    """
    if n < 1:
        raise DomainError("sample count must be >= 1, got %d" % n)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, c.sample_count, size=n)
    mu_all = composite_mu(c, c.radii)
    mu = mu_all[idx]
    if c.sigma_r0 == 0.0:
        return np.exp(-mu)
    # The smallest location has the most mass above 1, so it bounds the
    # acceptance rate from below across components.
    f1_min = special.ndtr(float(np.min(mu_all)) / c.sigma_r0)
    if f1_min < REJECTION_MIN_F1:
        raise RejectionStall("worst component acceptance F(1)=%.3g below %.0e"
                             % (f1_min, REJECTION_MIN_F1))
    out = np.empty(n)
    pending = np.arange(n)
    rounds = 0
    while pending.size:
        z = rng.standard_normal(pending.size)
        cand = np.exp(-mu[pending] + c.sigma_r0 * z)
        ok = cand <= 1.0
        out[pending[ok]] = cand[ok]
        pending = pending[~ok]
        rounds += 1
        if rounds > 100_000:
            raise RejectionStall("rejection loop failed to terminate")
    return out


def composite_expectation(c, f):
    """Average a transmittance function over the composite law.

    Each component is integrated against its full log-normal conditional in
    log space with a GH_NODES-point Gauss-Hermite rule, without the
    unit-transmittance truncation that the density and the sampler apply.
    This keeps the conditional moment identities exact, so f(eta) = eta and
    f(eta) = eta**2 recover the moments the composite was built from up to
    the displacement-sampling error (composite_moments reports that error).
    The price is that f is also evaluated on the conditional tail above 1;
    when a component's mean sits near 1 that tail carries real weight and
    sampled averages, which truncate it, fall below this expectation.

    Parameters
    ----------
    c : CompositePdt
    f : callable
        Vectorized function of the transmittance; receives ndarrays.

    Returns
    -------
    float
    """
    mu = composite_mu(c, c.radii)
    if c.sigma_r0 == 0.0:
        return float(np.mean(f(np.exp(-mu))))
    nodes, weights = np.polynomial.hermite.hermgauss(GH_NODES)
    scale = _SQRT2 * c.sigma_r0
    acc = 0.0
    for start in range(0, mu.size, COMPONENT_CHUNK):
        m = mu[start:start + COMPONENT_CHUNK, None]
        vals = np.asarray(f(np.exp(-m + scale * nodes[None, :])))
        acc += float((vals @ weights).sum())
    return acc / (mu.size * _SQRT_PI)


@dataclass(frozen=True)
class CompositeMoments:
    """First two composite moments with displacement-sampling errors."""

    mean_eta: float
    mean_eta2: float
    se_mean_eta: float
    se_mean_eta2: float


def composite_moments(c):
    """Recover the first two transmittance moments of the composite.

    Uses the closed-form conditional moments eta0_norm * exp(-x) and
    zeta0_sq * exp(-2 x) with x = (r0 / r_scale)**shape_lambda, averaged
    over the stored radii; by construction this reproduces the build inputs
    up to the Rayleigh sampling error reported alongside.
    """
    excess = (c.radii / c.weibull.r_scale) ** c.weibull.shape_lambda
    m1 = c.eta0_norm * np.exp(-excess)
    m2 = c.zeta0_sq * np.exp(-2.0 * excess)
    n = m1.size
    if n > 1:
        se1 = float(np.std(m1, ddof=1) / math.sqrt(n))
        se2 = float(np.std(m2, ddof=1) / math.sqrt(n))
    else:
        se1 = se2 = 0.0
    return CompositeMoments(float(np.mean(m1)), float(np.mean(m2)), se1, se2)


def composite_save(c, path):
    """Write a CompositePdt to a versioned JSON file (exact roundtrip)."""
    payload = {
        "format": SERIAL_FORMAT,
        "version": SERIAL_VERSION,
        "eta0_norm": c.eta0_norm,
        "zeta0_sq": c.zeta0_sq,
        "weibull": {
            "eta0_max": c.weibull.eta0_max,
            "r_scale": c.weibull.r_scale,
            "shape_lambda": c.weibull.shape_lambda,
            "ratio": c.weibull.ratio,
        },
        "sigma_bw2": c.sigma_bw2,
        "sigma_r0": c.sigma_r0,
        "sample_count": c.sample_count,
        "seed": c.seed,
        "aperture_radius": c.aperture_radius,
        "radii": c.radii.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def composite_load(path):
    """Read a CompositePdt written by composite_save."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("format") != SERIAL_FORMAT:
        raise ValueError("not a composite PDT file: format=%r"
                         % data.get("format"))
    if data.get("version") != SERIAL_VERSION:
        raise ValueError("unsupported composite PDT version %r"
                         % data.get("version"))
    wp = WeibullParams(**data["weibull"])
    radii = np.asarray(data["radii"], dtype=float)
    return CompositePdt(data["eta0_norm"], data["zeta0_sq"], wp,
                        data["sigma_bw2"], data["sigma_r0"], radii,
                        data["sample_count"], data["seed"],
                        data["aperture_radius"])
