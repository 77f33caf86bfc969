"""Closed-form performance of the adaptive feedback link.

Everything here is a pure function. Functions that take ``(p, dp)`` read
attributes from :class:`afcs.model.SystemParams` / :class:`afcs.model.DerivedParams`
but never mutate them.

Information quantities are in bits (base-2 logs), rates in bit/s, MSE in
signal units squared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

from .errors import DegenerateConfigurationError, DomainError

SPEED_OF_LIGHT = 3.0e8

PRE_THRESHOLD = "pre-threshold"
POST_THRESHOLD = "post-threshold"

# hard stop when searching for the noise-floor crossing
_MAX_CROSSING_SEARCH = 10_000_000


# --------------------------------------------------------------------------
# MSE recursions
# --------------------------------------------------------------------------

def mse_step(P_prev, A, M, sigma_v_sq, sigma_xi_sq):
    """One step of the linear-MMSE recursion for an arbitrary depth ``M``."""
    g = (A * M) ** 2
    den = sigma_xi_sq + g * (sigma_v_sq + P_prev)
    if den == 0:
        raise DegenerateConfigurationError("MSE update has a zero denominator")
    return (sigma_xi_sq + g * sigma_v_sq) * P_prev / den


def mse_closed_step(P_prev, Q_sq, sigma_v_sq):
    """MSE step with the depth already set to its optimum for the current uncertainty."""
    s = sigma_v_sq + P_prev
    if s == 0:
        return 0.0
    return (1.0 + Q_sq * sigma_v_sq / s) * P_prev / (1.0 + Q_sq)


def optimal_depth(alpha, sigma_v_sq, P_prev):
    s = sigma_v_sq + P_prev
    if s <= 0:
        raise DegenerateConfigurationError("sigma_v^2 + P_prev = 0 gives an infinite modulation depth")
    return 1.0 / (alpha * math.sqrt(s))


@dataclass
class MseCurve:
    values: List[float]          # P_0 .. P_n
    n_star: Optional[int]        # integer noise-floor crossing, None if never reached
    regimes: List[str]           # label for cycles 1..n (index 0 is cycle 1)

    def __len__(self):
        return len(self.values)


def _iterate_closed(sigma0_sq, sigma_v_sq, Q_sq, n):
    vals = [float(sigma0_sq)]
    for _ in range(n):
        vals.append(mse_closed_step(vals[-1], Q_sq, sigma_v_sq))
    return vals


def mse_curve(p, dp, n: int) -> MseCurve:
    if n < 1:
        raise DomainError("need at least one cycle")
    vals = _iterate_closed(p.sigma0_sq, p.sigma_v_sq, dp.Q_sq, n)
    regimes = [PRE_THRESHOLD if vals[k - 1] > p.sigma_v_sq else POST_THRESHOLD
               for k in range(1, n + 1)]
    return MseCurve(vals, dp.n_star, regimes)


def exponential_mse(k, sigma0_sq, Q_sq):
    """Early-cycle law, valid while P stays far above the input-noise floor."""
    return sigma0_sq * (1.0 + Q_sq) ** (-k)


def hyperbolic_mse(k, n_star, sigma_v_sq):
    """Late-cycle law, valid well after the noise-floor crossing."""
    return sigma_v_sq / (k - n_star + 1)


# --------------------------------------------------------------------------
# threshold cycle count
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdEstimate:
    analytic: float               # log2(sigma0^2/sigma_v^2) / log2(1+Q^2)
    crossing: Optional[int]       # first k with P_k <= sigma_v^2
    crossing_real: float          # log-interpolated position of the same crossing


def threshold_from_scalars(sigma0_sq, sigma_v_sq, Q_sq) -> ThresholdEstimate:
    if sigma_v_sq == 0:
        return ThresholdEstimate(math.inf, None, math.inf)
    if sigma0_sq <= sigma_v_sq:
        return ThresholdEstimate(1.0, 1, 1.0)
    if Q_sq <= 0:
        return ThresholdEstimate(math.inf, None, math.inf)

    analytic = math.log2(sigma0_sq / sigma_v_sq) / math.log2(1.0 + Q_sq)
    P_prev = float(sigma0_sq)
    for k in range(1, _MAX_CROSSING_SEARCH + 1):
        P = mse_closed_step(P_prev, Q_sq, sigma_v_sq)
        if P <= sigma_v_sq:
            frac = math.log(P_prev / sigma_v_sq) / math.log(P_prev / P) if P > 0 else 1.0
            return ThresholdEstimate(analytic, k, k - 1 + frac)
        P_prev = P
    return ThresholdEstimate(analytic, None, math.inf)


def threshold_cycles(p, dp) -> ThresholdEstimate:
    return threshold_from_scalars(p.sigma0_sq, p.sigma_v_sq, dp.Q_sq)


def early_termination_mse(n, n_star, Q_sq, sigma_v_sq):
    """MSE left on the table when stopping at cycle ``n`` before the threshold."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if n > n_star:
        raise DomainError("n beyond the threshold; use mse_curve")
    return sigma_v_sq * (1.0 + Q_sq) ** (n_star - n)


# --------------------------------------------------------------------------
# fixed-depth link without feedback (B_k = x0, M_k = M_1)
# --------------------------------------------------------------------------

def fixed_depth(p, dp):
    return optimal_depth(dp.alpha, p.sigma_v_sq, p.sigma0_sq)


def baseline_cs_snr(p, dp):
    """Per-observation SNR of the fixed-depth link.

    Input noise v_k passes through the modulator, so it adds ``(A*M1)^2 sigma_v^2``
    to the channel noise. With this denominator the hyperbola below equals the
    iterated recursion exactly.
    """
    g = (dp.A * fixed_depth(p, dp)) ** 2
    return g * p.sigma0_sq / (dp.sigma_xi_sq + g * p.sigma_v_sq)


def baseline_cs_mse(n, p, dp):
    if n < 0:
        raise DomainError("n must be >= 0")
    return p.sigma0_sq / (1.0 + n * baseline_cs_snr(p, dp))


def fixed_depth_curve(p, dp, n: int) -> List[float]:
    """Iterate the general MSE step with the depth pinned at M_1."""
    M1 = fixed_depth(p, dp)
    vals = [float(p.sigma0_sq)]
    for _ in range(n):
        vals.append(mse_step(vals[-1], dp.A, M1, p.sigma_v_sq, dp.sigma_xi_sq))
    return vals


def cs_snr_baseband(W_sign, N_xi, F):
    """SNR of a non-extending PAM link observed over the source band 2F."""
    return W_sign / (N_xi * F)


# --------------------------------------------------------------------------
# information and rates
# --------------------------------------------------------------------------

def entropy_terms(sigma_xi_sq, Q_sq):
    """(H(Y|X,past), H(Y|past)) per cycle, in bits, with the 2*pi constant kept as printed."""
    h_cond = 0.5 * math.log2(2.0 * math.pi * sigma_xi_sq)
    h_marg = 0.5 * math.log2(2.0 * math.pi * sigma_xi_sq * (1.0 + Q_sq))
    return h_cond, h_marg


def info_per_cycle(Q_sq):
    if Q_sq < 0:
        raise DomainError("Q^2 must be non-negative")
    return 0.5 * math.log2(1.0 + Q_sq)


def channel_capacity(F0, Q_sq):
    if F0 <= 0:
        raise DomainError("F0 must be positive")
    return F0 * math.log2(1.0 + Q_sq)


def info_per_sample(sigma0_sq, P_n):
    if P_n <= 0 or P_n > sigma0_sq:
        raise DomainError(f"P_n must lie in (0, sigma0^2], got {P_n!r}")
    return 0.5 * math.log2(sigma0_sq / P_n)


@dataclass(frozen=True)
class RateRow:
    n: int
    P_n: float
    I_n: float         # bits per sample
    R_n: float         # bit/s
    R_piecewise: float  # two-regime approximation, bit/s


def rate_piecewise(n, n_star, F0, Q_sq, sigma0_sq, sigma_v_sq):
    """Two-regime rate: capacity up to the threshold, slow decay after it."""
    if n <= n_star:
        return F0 * math.log2(1.0 + Q_sq)
    return F0 / n * (math.log2(sigma0_sq / sigma_v_sq) + math.log2(n - n_star + 1))


def rate_single_threshold(n, F0, Q_sq):
    """Rate when the input-noise floor is reached after the first cycle."""
    return F0 / n * (math.log2(1.0 + Q_sq) + math.log2(n))


def rate_large_feedback_noise(n, F0, sigma0_sq, sigma_v_sq):
    """Rate when the input noise dwarfs the source variance."""
    return F0 / n * math.log2(1.0 + n * sigma0_sq / sigma_v_sq)


def rate_curve(p, dp, n_max: int) -> List[RateRow]:
    curve = mse_curve(p, dp, n_max)
    n_star = dp.n_star_analytic
    rows = []
    for n in range(1, n_max + 1):
        P = curve.values[n]
        I = info_per_sample(p.sigma0_sq, P)
        R = p.F0 / n * math.log2(p.sigma0_sq / P)
        if p.sigma_v_sq > 0:
            Rp = rate_piecewise(n, n_star, p.F0, dp.Q_sq, p.sigma0_sq, p.sigma_v_sq)
        else:
            Rp = channel_capacity(p.F0, dp.Q_sq)
        rows.append(RateRow(n, P, I, R, Rp))
    return rows


def output_rate(n, p, dp) -> RateRow:
    if n < 1:
        raise DomainError("n must be >= 1")
    return rate_curve(p, dp, n)[-1]


# --------------------------------------------------------------------------
# energy and efficiency
# --------------------------------------------------------------------------

def energy_per_bit(n, p, dp):
    """Received energy spent on a sample divided by the bits it delivers."""
    row = output_rate(n, p, dp)
    energy = dp.W_sign * n / (2.0 * p.F0)
    return energy / row.I_n


def energy_per_bit_piecewise(n, n_star, W_sign, F0, N_xi, Q_sq, sigma0_sq, sigma_v_sq):
    if n <= n_star:
        return N_xi * Q_sq / math.log2(1.0 + Q_sq)
    return W_sign * n / (F0 * (math.log2(sigma0_sq / sigma_v_sq) + math.log2(n - n_star + 1)))


def shannon_boundary(c_over_f0):
    """Minimum E_bit/N for spectral efficiency ``C/F0`` (linear, not dB)."""
    if c_over_f0 <= 0:
        raise DomainError("spectral efficiency must be positive")
    # expm1 keeps the small-efficiency limit (ln 2) accurate
    return math.expm1(c_over_f0 * math.log(2.0)) / c_over_f0


def bitrate_gain(n_star, Q_cs_sq):
    """Bit-rate gain of a threshold system over the no-feedback link, closed form."""
    if n_star < 1 or Q_cs_sq <= 0:
        raise DomainError("need n_star >= 1 and Q_cs^2 > 0")
    return n_star * math.log2(1.0 + n_star * Q_cs_sq) / math.log2(1.0 + Q_cs_sq)


def bitrate_gain_oracle(p, dp):
    """Same gain from the rate definitions rather than the closed form.

    Numerator: feedback-link rate after ``n_cycles`` cycles from the exact MSE
    recursion. Denominator: the no-feedback link over the same cycles, whose
    MSE falls as ``sigma0^2 / (1 + n Q_cs^2)`` with ``Q_cs^2 = W/(N*F)``.
    """
    n = p.n_cycles
    afcs = output_rate(n, p, dp).R_n
    q_cs = cs_snr_baseband(dp.W_sign, p.N_xi, p.F)
    cs = p.F0 / n * math.log2(1.0 + n * q_cs)
    return afcs / cs


@dataclass(frozen=True)
class SnrIdentities:
    snr_in: float
    snr_out: float
    sigma_out_sq: float
    rate_lhs: float       # F * log2(sigma0^2 / sigma_v^2)
    capacity: float       # F0 * log2(1 + Q^2)


def output_snr_identities(p, dp) -> SnrIdentities:
    if p.sigma_v_sq <= 0:
        raise DomainError("threshold mode needs sigma_v^2 > 0")
    n_star = p.F0 / p.F
    sigma_out_sq = p.sigma0_sq * (1.0 + dp.Q_sq) ** (-n_star)
    return SnrIdentities(
        snr_in=p.sigma0_sq / p.sigma_v_sq,
        snr_out=p.sigma0_sq / sigma_out_sq,
        sigma_out_sq=sigma_out_sq,
        rate_lhs=p.F * math.log2(p.sigma0_sq / p.sigma_v_sq),
        capacity=channel_capacity(p.F0, dp.Q_sq),
    )


def max_distance(F0, delta_t_proc):
    """Largest TU-BS distance that still fits the round trip into one cycle.

    Returns ``(r_max, feasible)``; an infeasible budget yields ``(0.0, False)``.
    """
    if delta_t_proc < 0:
        raise DomainError("processing delay must be non-negative")
    r = 0.5 * SPEED_OF_LIGHT * (1.0 / (2.0 * F0) - delta_t_proc)
    if r <= 0:
        return 0.0, False
    return r, True
