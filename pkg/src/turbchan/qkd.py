"""Two-decoy-state BB84 key rates over a fluctuating channel.

Signal and weak-decoy pulses plus a vacuum decoy give a lower bound on the
one-photon gain; combined with the measured gain and error rate of the
signal this bounds the secure key fraction per pulse.  Averaging the bound
over the transmittance distribution yields the key rate of the turbulent
link.  All detector arithmetic is elementary and vectorized in the
transmittance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DecoyOrderingViolation, DivisionByZeroRate, DomainError
from .pdt import CompositePdt, composite_pdt_sample

DEFAULT_SAMPLES = 10_000


@dataclass(frozen=True)
class DecoyParams:
    """Source and detector parameters of the two-decoy protocol.

    Attributes
    ----------
    mu_s, mu_d : float
        Mean photon numbers of the signal and the weak decoy; the vacuum
        decoy mu_v is fixed at zero.
    y0 : float
        Background yield (dark counts and stray light).
    e_det : float
        Misalignment error rate.
    f_ec : float
        Error-correction inefficiency, >= 1.
    eta_d : float
        Deterministic transmittance multiplying the fluctuating one
        (detector efficiency and extinction losses).
    """

    mu_s: float = 0.27
    mu_d: float = 0.39
    y0: float = 1.7e-6
    e_det: float = 0.01
    f_ec: float = 1.2
    eta_d: float = 1.0
    mu_v: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.mu_s < self.mu_d < 1.0):
            raise DecoyOrderingViolation(
                "need 0 < mu_s < mu_d < 1, got mu_s=%g mu_d=%g"
                % (self.mu_s, self.mu_d))
        if self.mu_v != 0.0:
            raise DomainError("vacuum decoy intensity must be 0, got %g"
                              % self.mu_v)
        if self.y0 < 0.0:
            raise DomainError("background yield must be >= 0, got %g"
                              % self.y0)
        if not (0.0 <= self.e_det <= 0.5):
            raise DomainError("misalignment error must lie in [0, 0.5], "
                              "got %g" % self.e_det)
        if self.f_ec < 1.0:
            raise DomainError("error-correction inefficiency must be >= 1, "
                              "got %g" % self.f_ec)
        if not (0.0 < self.eta_d <= 1.0):
            raise DomainError("deterministic transmittance must lie in "
                              "(0, 1], got %g" % self.eta_d)


def binary_entropy(x):
    """Binary entropy in bits, zero at both endpoints by continuity."""
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(x_arr)
    inside = (x_arr > 0.0) & (x_arr < 1.0)
    if inside.any():
        v = x_arr[inside]
        out[inside] = -v * np.log2(v) - (1.0 - v) * np.log2(1.0 - v)
    return float(out[0]) if np.ndim(x) == 0 else out


def gain(eta, mu, p):
    """Detection probability of a pulse of mean photon number mu.

    Q = y0 + 1 - exp(-eta_d * eta * mu); monotone increasing in eta, mu,
    and eta_d.
    """
    eta_arr = np.asarray(eta, dtype=float)
    out = p.y0 + 1.0 - np.exp(-p.eta_d * eta_arr * mu)
    return float(out) if np.ndim(eta) == 0 else out


def qber(eta, mu, p):
    """Quantum bit error rate of a pulse of mean photon number mu.

    Background clicks are random (error rate 1/2); signal clicks err with
    the misalignment rate, so E = (y0/2 + e_det (Q - y0)) / Q, which sits
    in (0, 0.5].
    """
    q = gain(eta, mu, p)
    return (0.5 * p.y0 + p.e_det * (np.asarray(q) - p.y0)) / q


def one_photon_gain_lower(eta, p, clamp=True):
    """Lower bound on the one-photon gain of the signal pulses.

    Combines the signal and weak-decoy gains with the background yield;
    the raw bound can go negative at small eta from the background terms,
    so it is clamped to [0, Q_signal] unless clamp=False.

    Raises
    ------
    DecoyOrderingViolation
        If mu_s >= mu_d (enforced by DecoyParams, re-checked here for
        callers constructing parameters manually).
    """
    if p.mu_s >= p.mu_d:
        raise DecoyOrderingViolation("need mu_s < mu_d, got mu_s=%g mu_d=%g"
                                     % (p.mu_s, p.mu_d))
    mu_s, mu_d = p.mu_s, p.mu_d
    qs = gain(eta, mu_s, p)
    qd = gain(eta, mu_d, p)
    pref = mu_s ** 2 * math.exp(-mu_s) / (mu_s * mu_d - mu_d ** 2)
    raw = pref * (np.asarray(qd) * math.exp(mu_d)
                  - np.asarray(qs) * math.exp(mu_s) * mu_d ** 2 / mu_s ** 2
                  - (mu_s ** 2 - mu_d ** 2) / mu_s ** 2 * p.y0)
    if clamp:
        raw = np.minimum(np.maximum(raw, 0.0), qs)
    return float(raw) if np.ndim(eta) == 0 else raw


def key_rate_integrand(eta, p, clamp=True):
    """Secure key fraction per pulse at fixed transmittance.

    One-photon events contribute their gain bound times the phase-error
    entropy margin; error correction costs f_ec times the signal entropy.
    The phase error rate of the one-photon events is approximated by the
    signal QBER.  Negative raw values mean no key and are clamped to zero
    unless clamp=False (sensitivity analysis).
    """
    q1 = one_photon_gain_lower(eta, p)
    qs = gain(eta, p.mu_s, p)
    h_es = binary_entropy(qber(eta, p.mu_s, p))
    raw = 0.5 * (np.asarray(q1) * (1.0 - h_es)
                 - np.asarray(qs) * p.f_ec * h_es)
    if clamp:
        raw = np.maximum(raw, 0.0)
    return float(raw) if np.ndim(eta) == 0 else raw


@dataclass(frozen=True)
class KeyRateResult:
    """Averaged key rate with its sampling error and clamp diagnostics."""

    rate: float
    std_error: float
    improvement: Optional[float] = None
    diagnostics: Optional[dict] = None


def averaged_key_rate(pdt, p, sample_count=DEFAULT_SAMPLES, seed=0,
                      clamp_each=False):
    """Key rate averaged over the transmittance distribution.

    The secure fraction is the average of the raw per-transmittance bound
    (negative values allowed inside the average, since loss events where
    error correction outruns the one-photon margin genuinely eat into the
    key) and the reported rate is that average clamped at zero: the channel
    either yields key or it does not.  Averaging the per-sample clamped
    integrand instead (clamp_each=True) gives a sign-definite estimator
    that cannot reach zero while any sample sits above the threshold; it
    is kept as a sensitivity variant.

    Parameters
    ----------
    pdt : CompositePdt or array_like
        Either a composite distribution (sampled here with the given count
        and seed) or an explicit array of transmittance samples.
    p : DecoyParams
    sample_count : int
        Number of draws when pdt is a CompositePdt.
    seed : int
    clamp_each : bool
        Clamp the integrand per sample before averaging.

    Returns
    -------
    KeyRateResult
        rate (>= 0), standard error of the average, and diagnostics with
        the raw mean and the fractions of draws where the one-photon bound
        or the raw integrand went negative.
    """
    if isinstance(pdt, CompositePdt):
        samples = composite_pdt_sample(pdt, sample_count, seed)
    else:
        samples = np.asarray(pdt, dtype=float)
        if samples.ndim != 1 or samples.size < 1:
            raise DomainError("transmittance samples must be a non-empty "
                              "1-D array")
    vals = key_rate_integrand(samples, p, clamp=clamp_each)
    n = samples.size
    se = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    mean_raw = float(np.mean(vals))
    q1_raw = one_photon_gain_lower(samples, p, clamp=False)
    raw = key_rate_integrand(samples, p, clamp=False)
    diag = {
        "samples": n,
        "raw_mean": mean_raw,
        "q1_clamped_fraction": float(np.mean(q1_raw < 0.0)),
        "rate_clamped_fraction": float(np.mean(raw < 0.0)),
    }
    return KeyRateResult(max(0.0, mean_raw), se, None, diag)


def relative_improvement(rate_tracked, rate_untracked):
    """Fractional rate gain of perfect tracking: 1 - untracked / tracked.

    rate_tracked is the perfectly tracked rate (residual wandering zero)
    and must be positive; equal rates give 0, a dead untracked channel
    gives 1.
    """
    if rate_tracked <= 0.0:
        raise DivisionByZeroRate(
            "perfectly tracked rate must be positive, got %g" % rate_tracked)
    return 1.0 - rate_untracked / rate_tracked


def extinction_transmittance(length_m, db_per_km=1.0):
    """Deterministic transmittance of atmospheric extinction over a path."""
    if length_m < 0.0:
        raise DomainError("path length must be >= 0, got %g" % length_m)
    return 10.0 ** (-db_per_km * (length_m / 1000.0) / 10.0)


def mean_loss_db(mean_eta, eta_d=1.0):
    """Mean channel loss in dB, including deterministic losses."""
    if mean_eta <= 0.0 or eta_d <= 0.0:
        raise DomainError("transmittances must be positive")
    return -10.0 * math.log10(eta_d * mean_eta)
