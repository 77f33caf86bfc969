"""Standard-normal helpers and reproducible Gaussian streams.

``phi`` is the *half* CDF: the normal density integrated from 0 to ``alpha``.
It is odd, zero at the origin and tends to 0.5.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def phi(alpha: float) -> float:
    """Half-CDF of the standard normal, ``P(0 < Z < alpha)``."""
    a = abs(alpha)
    if a < 1.0:
        val = 0.5 * math.erf(a / _SQRT2)
    else:
        val = 0.5 - 0.5 * math.erfc(a / _SQRT2)
    return math.copysign(val, alpha) if alpha != 0 else 0.0


def two_sided_tail(alpha: float) -> float:
    """``P(|Z| > alpha)`` computed without cancellation."""
    return math.erfc(abs(alpha) / _SQRT2)


def normal_mass(lo: float, hi: float, mean: float, variance: float) -> float:
    """Probability mass of N(mean, variance) on [lo, hi]."""
    if variance <= 0:
        return 1.0 if lo <= mean <= hi else 0.0
    s = math.sqrt(variance)
    return phi((hi - mean) / s) - phi((lo - mean) / s)


def saturation_factor(mu: float) -> float:
    """Solve ``2*phi(alpha) = 1 - mu`` for alpha >= 0.

    Works on the complement ``erfc(alpha/sqrt2) = mu`` so tiny ``mu`` keeps
    full relative accuracy. Newton steps are kept inside a bisection bracket.
    """
    if not (0.0 < mu < 1.0) or math.isnan(mu):
        raise DomainError(f"over-modulation probability must lie in (0, 1), got {mu!r}")

    lo, hi = 0.0, 40.0
    alpha = 1.0
    for _ in range(200):
        f = math.erfc(alpha / _SQRT2) - mu
        if f > 0:
            lo = alpha
        else:
            hi = alpha
        # d/da erfc(a/sqrt2) = -2 * pdf(a)
        slope = -2.0 * _INV_SQRT_2PI * math.exp(-0.5 * alpha * alpha)
        step = alpha - f / slope if slope != 0 else math.nan
        if not (lo < step < hi):
            step = 0.5 * (lo + hi)
        if abs(step - alpha) <= 1e-15 * max(1.0, alpha):
            alpha = step
            break
        alpha = step
    return alpha


class RngStream:
    """Counter-based Gaussian stream keyed by ``(seed, stream_id)``.

    Each stream owns a Philox generator whose 128-bit key packs the 64-bit
    seed and the stream id, so draws from one stream never depend on how
    many other streams exist or in which order they are consumed.
    """

    __slots__ = ("seed", "stream_id", "_gen")

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or seed >= 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if stream_id < 0 or stream_id >= 2**64:
            raise DomainError("stream_id must be an unsigned 64-bit integer")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = (self.stream_id << 64) | self.seed
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def draw_gaussian(stream: RngStream, mean: float, variance: float) -> float:
    if variance < 0:
        raise DomainError(f"variance must be non-negative, got {variance!r}")
    z = float(stream.standard_normal())
    if variance == 0:
        return float(mean)
    return mean + math.sqrt(variance) * z
