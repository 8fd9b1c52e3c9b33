"""Fourth-order field correlation and the transmittance covariance integral.

The intensity-intensity correlation of the focused beam is a 6-D source-plane
integral with a Gaussian envelope exp(-sum |r_i'|^2 / W0^2), an oscillatory
phase coupling the receiver offsets u = r1 - r2 and v = r1 + r2 to two of the
source variables, and a grouped structure-function exponent

    S = [ D_S(u, r1'-r2') + D_S(u, r1'+r2') - D_S(u, r1'-r3')
        - D_S(u, r1'+r3') - D_S(0, r2'-r3') - D_S(0, r2'+r3') ] / 2.

S is invariant under r2' -> -r2' alone and under r3' -> -r3' alone (the terms
swap pairwise), so averaging the phase factor over the sign group replaces it
exactly by cos(beta u.r2') cos(beta v.r3'): the integrand used here is real by
construction and carries no imaginary residue to discard.

A second exact reduction controls the variance. Writing the product of two
mean intensities on the same variables (substitute w1 = r3' + r2',
w2 = r3' - r2' in the two independent source integrals) reproduces the same
Gaussian envelope and the same phase, with exponent

    S2 = -[ D_S(0, r2'-r3') + D_S(0, r2'+r3') ] / 2,

which is exactly the u-independent pair of terms inside S. Sampling
h (e^S - e^{S2}) with h the symmetrized phase therefore estimates
Gamma_4 - Gamma_2 Gamma_2 directly: the integrand vanishes identically in
vacuum, is bounded by 1, and is exponentially damped in the region where the
raw phase oscillation dominates. Fourth-order values are then assembled as
product-of-mean-intensities plus the sampled covariance part; the same
estimator folded over the two aperture integrals (10 dimensions total) gives
the flux variance integral for the mean-square transmittance.

Evaluation is randomized quasi-Monte Carlo: scrambled digital (Sobol) points,
with the Gaussian envelope absorbed into the sampling density of the source
variables (importance sampling) and uniform polar disk sampling for the
aperture points. Standard errors come from independently scrambled
replicates. The plain centered estimator h expm1(S) with the closed-form
vacuum control variate was measured 10x noisier on a Rytov-1.7 configuration
and is not used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from ..channel import ChannelParams
from .gamma2 import gamma2
from .structure_function import ds_colinear, ds_prefactor, ds_segment

CHUNK = 8192  # fixed evaluation block; keeps reductions worker-independent
DEFAULT_LOG2_POINTS = 16
DEFAULT_REPLICATES = 16


@dataclass(frozen=True)
class QmcResult:
    """Estimate with replicate standard error and convergence diagnostics."""
    value: float
    std_error: float
    diagnostics: dict = field(default_factory=dict)


def _gaussian_coords(u, w0):
    # Inverse-CDF map to N(0, w0^2/2) per axis; uniforms clipped away from
    # the endpoints where ndtri diverges.
    z = ndtri(np.clip(u, 1e-13, 1.0 - 1e-13))
    return z * (w0 / math.sqrt(2.0))


def grouped_exponent(ux, uy, r1x, r1y, r2x, r2y, r3x, r3y, prefactor):
    """The grouped structure-function exponent S (non-positive up to noise)."""
    s = ds_segment(ux, uy, r1x - r2x, r1y - r2y, prefactor)
    s = s + ds_segment(ux, uy, r1x + r2x, r1y + r2y, prefactor)
    s = s - ds_segment(ux, uy, r1x - r3x, r1y - r3y, prefactor)
    s = s - ds_segment(ux, uy, r1x + r3x, r1y + r3y, prefactor)
    s = s - ds_colinear(np.hypot(r2x - r3x, r2y - r3y), prefactor)
    s = s - ds_colinear(np.hypot(r2x + r3x, r2y + r3y), prefactor)
    return 0.5 * s


def pair_exponent(r2x, r2y, r3x, r3y, prefactor):
    """Exponent S2 of the product of two mean intensities, same variables."""
    return -0.5 * (ds_colinear(np.hypot(r2x - r3x, r2y - r3y), prefactor)
                   + ds_colinear(np.hypot(r2x + r3x, r2y + r3y), prefactor))


def _replicate_rngs(seed, replicates):
    return [np.random.default_rng(s)
            for s in np.random.SeedSequence(seed).spawn(replicates)]


def _scan_chunks(points, params: ChannelParams, disk_radius=None, fixed_uv=None):
    """Per-chunk accumulation of the covariance integrand h (e^S - e^{S2}).

    Either ``disk_radius`` is given (first four columns are folded into two
    uniform aperture points) or ``fixed_uv`` pins (u, v) for a pointwise
    fourth-order value. Returns the mean with running diagnostics.
    """
    pref = ds_prefactor(params)
    beta = params.k / params.length
    n = points.shape[0]
    total = 0.0
    total_sq = 0.0
    n_pos = 0
    s_max = -math.inf
    for lo in range(0, n, CHUNK):
        p = points[lo:lo + CHUNK]
        if disk_radius is not None:
            rad1 = disk_radius * np.sqrt(p[:, 0])
            th1 = 2.0 * math.pi * p[:, 1]
            rad2 = disk_radius * np.sqrt(p[:, 2])
            th2 = 2.0 * math.pi * p[:, 3]
            x1, y1 = rad1 * np.cos(th1), rad1 * np.sin(th1)
            x2, y2 = rad2 * np.cos(th2), rad2 * np.sin(th2)
            ux, uy = x1 - x2, y1 - y2
            vx, vy = x1 + x2, y1 + y2
            g = _gaussian_coords(p[:, 4:], params.w0)
        else:
            ux, uy, vx, vy = fixed_uv
            g = _gaussian_coords(p, params.w0)
        s = grouped_exponent(ux, uy, g[:, 0], g[:, 1], g[:, 2], g[:, 3],
                             g[:, 4], g[:, 5], pref)
        s2 = pair_exponent(g[:, 2], g[:, 3], g[:, 4], g[:, 5], pref)
        h = (np.cos(beta * (ux * g[:, 2] + uy * g[:, 3]))
             * np.cos(beta * (vx * g[:, 4] + vy * g[:, 5])))
        z = h * (np.exp(s) - np.exp(s2))
        total += float(np.sum(z))
        total_sq += float(np.sum(z * z))
        n_pos += int(np.count_nonzero(s > 1e-12))
        s_max = max(s_max, float(np.max(s)))
    var = max(total_sq / n - (total / n) ** 2, 0.0)
    return total / n, {"positive_s": n_pos, "s_max": s_max,
                       "integrand_std": math.sqrt(var)}


def _run_replicates(params, dim, log2_points, replicates, seed, disk_radius, fixed_uv):
    means = []
    n_pos = 0
    s_max = -math.inf
    z_std = 0.0
    for rng in _replicate_rngs(seed, replicates):
        sob = qmc.Sobol(d=dim, scramble=True, seed=rng)
        pts = sob.random_base2(log2_points)
        m, diag = _scan_chunks(pts, params, disk_radius, fixed_uv)
        means.append(m)
        n_pos += diag["positive_s"]
        s_max = max(s_max, diag["s_max"])
        z_std = max(z_std, diag["integrand_std"])
    means = np.asarray(means)
    value = float(np.mean(means))
    se = float(np.std(means, ddof=1) / math.sqrt(len(means))) if len(means) > 1 else 0.0
    total_points = replicates * 2 ** log2_points
    diagnostics = {
        "points": total_points,
        "replicates": replicates,
        "log2_points": log2_points,
        "positive_s_fraction": n_pos / total_points,
        "s_max": s_max,
        "integrand_std": z_std,
    }
    return value, se, diagnostics


def vacuum_gamma2(r2, params: ChannelParams) -> float:
    """Closed-form vacuum mean intensity at squared radius r2."""
    pref = params.k ** 2 * params.w0 ** 2 / (2.0 * math.pi * params.length ** 2)
    return pref * math.exp(-2.0 * r2 / params.w_vac ** 2)


def gamma4(r1, r2, params: ChannelParams,
           log2_points: int = 14, replicates: int = DEFAULT_REPLICATES,
           seed: int = 0) -> QmcResult:
    """Intensity correlation at receiver offsets (r1, r2), in m^-4.

    Assembled as the product of the two mean intensities plus the sampled
    covariance part; for cn2 = 0 the covariance integrand is identically zero
    and the exact factorized vacuum value is returned with zero standard
    error. The quoted error covers the sampled part only (the mean-intensity
    factors carry their own documented quadrature accuracy).
    """
    ux, uy = float(r1[0] - r2[0]), float(r1[1] - r2[1])
    vx, vy = float(r1[0] + r2[0]), float(r1[1] + r2[1])
    pref4 = params.k ** 4 * params.w0 ** 4 / (4.0 * math.pi ** 2 * params.length ** 4)
    if ds_prefactor(params) == 0.0:
        vac = (vacuum_gamma2(float(r1[0]) ** 2 + float(r1[1]) ** 2, params)
               * vacuum_gamma2(float(r2[0]) ** 2 + float(r2[1]) ** 2, params))
        return QmcResult(vac, 0.0, {"points": 0, "replicates": 0,
                                    "vacuum_closed_form": True})
    product = gamma2(r1, params) * gamma2(r2, params)
    mean, se, diag = _run_replicates(params, 6, log2_points, replicates, seed,
                                     None, (ux, uy, vx, vy))
    diag["pair_product"] = product
    return QmcResult(product + pref4 * mean, pref4 * se, diag)


def aperture_cov_qmc(params: ChannelParams,
                     log2_points: int = DEFAULT_LOG2_POINTS,
                     replicates: int = DEFAULT_REPLICATES,
                     seed: int = 0) -> QmcResult:
    """Flux covariance: double aperture integral of Gamma_4 - Gamma_2 Gamma_2.

    Ten dimensions per point: four fold the two aperture integrals through
    uniform polar disk sampling (avoiding nested quadrature error
    compounding), six sample the Gaussian source variables. The mean-square
    transmittance is this value plus the squared mean transmittance.
    """
    a = params.aperture_radius
    t = 2.0 * a * a / params.w_vac ** 2
    amp = t * t  # (pi a^2)^2 * pref4 * (pi W0^2)^3, the folded-weight scale
    if ds_prefactor(params) == 0.0:
        return QmcResult(0.0, 0.0, {"points": 0, "replicates": 0,
                                    "vacuum_closed_form": True})
    mean, se, diag = _run_replicates(params, 10, log2_points, replicates, seed,
                                     a, None)
    return QmcResult(amp * mean, amp * se, diag)
