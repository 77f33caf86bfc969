"""What happens after the modulator saturates.

A saturated cycle delivers ``sign*A + zeta`` regardless of the sample. A
receiver that does not notice keeps integrating it (corrupted estimate and
larger MSE). One that is told about it can simply drop the observation.
Detection is out of scope; callers pass an oracle flag.
"""

from __future__ import annotations

import math

from .gaussian import phi
from .model import DerivedParams, EstimatorState, SystemParams, receiver_update


def corrupted_update(x_hat_prev, L, A, zeta, sign=1):
    return x_hat_prev + L * (sign * A + zeta)


def corrupted_mse(P_prev, L, sigma_xi_sq):
    return P_prev + L * L * sigma_xi_sq


def recovery_probability_exact(x_tilde_corrupted, x_hat_prev, M_next, sigma_v_sq, P_prev):
    """Chance that the cycle after a corruption is linear again.

    The next input is still distributed around the pre-corruption estimate
    with variance ``sigma_v^2 + P_prev``, while the window now sits at the
    corrupted estimate with half-width ``1/M_next``.
    """
    s = math.sqrt(sigma_v_sq + P_prev)
    d = M_next * (x_tilde_corrupted - x_hat_prev)
    b1 = (d + 1.0) / (M_next * s)
    b2 = (d - 1.0) / (M_next * s)
    return phi(b1) - phi(b2)


def recovery_probability_after(x_tilde_corrupted, x_hat_prev, P_prev, P_k, L, alpha,
                               sigma_v_sq, sigma_xi_sq, depth_from="clean"):
    """Restoration chance with the next depth taken from a chosen MSE.

    ``depth_from="clean"`` sets M_{k+1} from the uncorrupted recursion value
    ``P_k`` (what a receiver unaware of the event would do). ``"corrupted"``
    uses the inflated ``P_prev + L^2 sigma_xi^2`` instead.
    """
    if depth_from == "clean":
        P_depth = P_k
    elif depth_from == "corrupted":
        P_depth = corrupted_mse(P_prev, L, sigma_xi_sq)
    else:
        raise ValueError(f"unknown depth_from {depth_from!r}")
    M_next = 1.0 / (alpha * math.sqrt(sigma_v_sq + P_depth))
    return recovery_probability_exact(x_tilde_corrupted, x_hat_prev, M_next, sigma_v_sq, P_prev)


def restoration_arguments(alpha, P_prev, P_k, sigma_v_sq, zeta_over_A=0.0):
    """(beta1, beta2) written through the MSE ratio of the corrupted cycle."""
    shrink = 1.0 - P_k / P_prev
    width = math.sqrt((sigma_v_sq + P_k) / (sigma_v_sq + P_prev))
    centre = shrink * (1.0 + zeta_over_A)
    return alpha * (centre + width), alpha * (centre - width)


def recovery_probability_prethreshold(alpha, Q_sq, zeta_over_A=0.0):
    """Restoration chance for a corruption while P is still far above sigma_v^2.

    Returns ``(asymptotic, two_phi)``. ``asymptotic`` is the first-order value
    ``alpha/Q*sqrt(2/pi)*exp(-alpha^2/2)``, which has no zeta dependence.
    ``two_phi`` is the difference of two half-CDFs at ``alpha*(1 +- 1/Q + zeta/A)``.
    """
    Q = math.sqrt(Q_sq)
    asymptotic = alpha / Q * math.sqrt(2.0 / math.pi) * math.exp(-0.5 * alpha * alpha)
    shift = alpha * zeta_over_A
    two_phi = phi(alpha * (1.0 + 1.0 / Q) + shift) - phi(alpha * (1.0 - 1.0 / Q) + shift)
    return asymptotic, two_phi


def recovery_probability_postthreshold(alpha, k_minus_nstar, zeta_over_A=0.0):
    """Restoration chance for a corruption ``k - n*`` cycles past the threshold."""
    if k_minus_nstar < 1:
        raise ValueError("k - n* must be at least 1")
    d = alpha * (1.0 + zeta_over_A) / (k_minus_nstar + 1.0)
    return phi(d + alpha) - phi(d - alpha)


def rejection_mode_update(state: EstimatorState, y_tilde, detected: bool,
                          dp: DerivedParams, p: SystemParams) -> EstimatorState:
    if detected:
        return state
    return receiver_update(state, y_tilde, dp, p)
