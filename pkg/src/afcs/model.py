"""Physical model of the adaptive feedback link.

The simulation runs at baseband: the carrier is dropped and the DSB-SC power
factor is folded into ``gamma``. Feedback-channel error is not simulated as a
second link; its variance is part of ``sigma_v_sq`` together with the
transmitter's own input noise (``sigma_v_sq = sigma_v_int^2 + sigma_B^2``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from . import theory
from .errors import DegenerateConfigurationError, DomainError
from .gaussian import RngStream, draw_gaussian, normal_mass, saturation_factor


@dataclass(frozen=True)
class SystemParams:
    """Constants of one link configuration, SI units.

    ``sigma_xi_sq`` may be given directly (per-cycle channel noise variance);
    otherwise it is ``F0 * N_xi``. ``n_cycles`` defaults to ``round(F0 / F)``
    and ``F`` to ``F0 / n_cycles``; at least one of the two is required.
    """

    x0: float = 0.0
    sigma0_sq: float = 1.0
    sigma_v_sq: float = 0.0
    A0: float = 1.0
    gamma: float = 1.0
    r: float = 1.0
    N_xi: float = 1.0
    F0: float = 1.0
    F: Optional[float] = None
    mu: float = 1e-4
    n_cycles: Optional[int] = None
    sigma_xi_sq: Optional[float] = None

    def __post_init__(self):
        if not self.sigma0_sq > 0:
            raise DomainError("sigma0_sq must be positive")
        if not self.sigma_v_sq >= 0:
            raise DomainError("sigma_v_sq must be non-negative")
        for name in ("A0", "gamma", "r", "N_xi", "F0"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.sigma_xi_sq is not None and not self.sigma_xi_sq >= 0:
            raise DomainError("sigma_xi_sq must be non-negative")
        if not 0.0 < self.mu < 1.0:
            raise DomainError("mu must lie in (0, 1)")

        n, F = self.n_cycles, self.F
        if n is None and F is None:
            raise DomainError("give n_cycles or the source bandwidth F")
        if F is not None and not F > 0:
            raise DomainError("F must be positive")
        if n is None:
            if F > self.F0:
                raise DomainError("F0 must be at least F")
            n = max(1, int(round(self.F0 / F)))
        if int(n) != n or n < 1:
            raise DomainError("n_cycles must be a positive integer")
        if F is None:
            F = self.F0 / n
        object.__setattr__(self, "n_cycles", int(n))
        object.__setattr__(self, "F", float(F))

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedParams:
    A: float
    alpha: float
    W_sign: float
    sigma_xi_sq: float
    Q_sq: float
    C: float
    n_star: Optional[int]
    n_star_analytic: float


def derive_params(p: SystemParams) -> DerivedParams:
    A = p.A0 * p.gamma / p.r
    alpha = saturation_factor(p.mu)
    W = (A / alpha) ** 2
    sxi = p.F0 * p.N_xi if p.sigma_xi_sq is None else p.sigma_xi_sq
    if sxi > 0:
        Q_sq = W / sxi
    else:
        Q_sq = math.inf
    C = p.F0 * math.log2(1.0 + Q_sq)
    est = theory.threshold_from_scalars(p.sigma0_sq, p.sigma_v_sq, Q_sq)
    return DerivedParams(A, alpha, W, sxi, Q_sq, C, est.crossing, est.analytic)


@dataclass
class EstimatorState:
    k: int
    x_hat: float
    P: float
    L: float = 0.0
    M: float = math.nan
    B: float = math.nan


@dataclass
class CycleTrace:
    k: int
    M: float
    B: float
    e: float
    saturated: bool
    y_tilde: float
    L: float
    x_hat: float
    P_theory: float
    sq_error: float


def initial_state(p: SystemParams) -> EstimatorState:
    return EstimatorState(k=0, x_hat=p.x0, P=p.sigma0_sq)


# --------------------------------------------------------------------------
# transmitter and channel
# --------------------------------------------------------------------------

def is_saturated(x_k, M, B):
    return M * abs(x_k - B) > 1.0


def modulate(x_k, M, B):
    """Saturating PAM characteristic; the output never leaves [-1, 1]."""
    e = x_k - B
    if M * abs(e) <= 1.0:
        return M * e
    return math.copysign(1.0, e)


def forward_channel(level, A, stream: RngStream, sigma_xi_sq):
    return A * level + draw_gaussian(stream, 0.0, sigma_xi_sq)


def transmitter_input(x, stream: RngStream, sigma_v_sq):
    return draw_gaussian(stream, x, sigma_v_sq)


# --------------------------------------------------------------------------
# base station
# --------------------------------------------------------------------------

def optimal_gain(A, M, P_prev, sigma_v_sq, sigma_xi_sq):
    den = sigma_xi_sq + (A * M) ** 2 * (sigma_v_sq + P_prev)
    if den == 0:
        raise DegenerateConfigurationError("gain denominator vanishes (all noises and P_prev zero)")
    return A * M * P_prev / den


def compute_controls(x_hat_prev, P_prev, p: SystemParams, dp: DerivedParams):
    """Depth and offset for the coming cycle; neither needs the coming observation."""
    if P_prev < 0:
        raise DomainError("P_prev must be non-negative")
    return theory.optimal_depth(dp.alpha, p.sigma_v_sq, P_prev), x_hat_prev


def receiver_update(state: EstimatorState, y_tilde, dp: DerivedParams, p: SystemParams) -> EstimatorState:
    """Kalman-type update using the controls already stored in ``state``.

    The innovation subtracts the predicted observation ``A*M*(x_hat - B)``,
    which is zero whenever ``B`` tracks the previous estimate.
    """
    M, B = state.M, state.B
    L = optimal_gain(dp.A, M, state.P, p.sigma_v_sq, dp.sigma_xi_sq)
    innovation = y_tilde - dp.A * M * (state.x_hat - B)
    P = theory.mse_step(state.P, dp.A, M, p.sigma_v_sq, dp.sigma_xi_sq)
    return EstimatorState(k=state.k + 1, x_hat=state.x_hat + L * innovation, P=P, L=L, M=M, B=B)


def verify_fitting(M, B, x_hat_prev, P_prev, sigma_v_sq, mu, rtol=1e-9):
    """True when the linear window holds at least 1 - mu of the predictive mass.

    Compared on the tail side, ``P(outside) <= mu * (1 + rtol)``, so the
    optimum itself is not rejected over a rounding error.
    """
    var = sigma_v_sq + P_prev
    if var <= 0:
        return abs(x_hat_prev - B) <= 1.0 / M
    s = math.sqrt(var)
    hi = (B + 1.0 / M - x_hat_prev) / s
    lo = (B - 1.0 / M - x_hat_prev) / s
    if hi <= lo:
        return False
    # tails written with erfc so they keep precision when tiny
    upper = 0.5 * math.erfc(hi / math.sqrt(2.0))
    lower = 0.5 * math.erfc(-lo / math.sqrt(2.0))
    return upper + lower <= mu * (1.0 + rtol)


def fitting_mass(M, B, x_hat_prev, P_prev, sigma_v_sq):
    return normal_mass(B - 1.0 / M, B + 1.0 / M, x_hat_prev, sigma_v_sq + P_prev)
