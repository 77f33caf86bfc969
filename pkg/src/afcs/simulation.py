"""Monte Carlo engine for the adaptive feedback link.

Samples are independent, so a batch is simulated as arrays over samples
with a Python loop over cycles. Each sample ``i`` draws all of its randomness
from ``RngStream(seed, i)``: first the sample value, then one ``(v_k, zeta_k)``
pair per cycle. Results therefore do not depend on chunking or thread count.

Depths and gains never depend on observations, so they are tabulated once per
configuration (:class:`Schedule`) and indexed by the number of observations a
sample's receiver has accepted so far. That count equals the cycle index
except in rejection mode, where a dropped observation leaves it unchanged.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import theory
from .gaussian import RngStream
from .model import CycleTrace, DerivedParams, SystemParams, derive_params, optimal_gain
from .overmod import recovery_probability_exact, recovery_probability_postthreshold, \
    recovery_probability_prethreshold

DEFAULT_SEED = 20240917
DEFAULT_SAMPLES = 5000
MODES = ("optimal", "fixed-depth", "rejection")
ABNORMAL_SIGMAS = 5.0
_CHUNK = 1024


@dataclass
class Schedule:
    """Per accepted-update index ``j``: depth, gain and the MSE reached.

    ``P[j]`` is the MSE after ``j`` accepted updates; ``M[j]`` and ``L[j]``
    are used for the update that takes it to ``P[j+1]``.
    """
    M: np.ndarray
    L: np.ndarray
    P: np.ndarray


def build_schedule(p: SystemParams, dp: DerivedParams, n: int, mode: str = "optimal") -> Schedule:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    M = np.empty(n + 1)
    L = np.empty(n + 1)
    P = np.empty(n + 1)
    P[0] = p.sigma0_sq
    M1 = theory.fixed_depth(p, dp) if mode == "fixed-depth" else None
    for j in range(n + 1):
        s = p.sigma_v_sq + P[j]
        if M1 is not None:
            M[j] = M1
        elif s > 0:
            M[j] = theory.optimal_depth(dp.alpha, p.sigma_v_sq, P[j])
        else:
            # nothing left to learn: no emission, no update
            M[j] = math.inf
        if math.isinf(M[j]):
            L[j] = 0.0
            nxt = 0.0
        else:
            L[j] = optimal_gain(dp.A, M[j], P[j], p.sigma_v_sq, dp.sigma_xi_sq)
            nxt = theory.mse_step(P[j], dp.A, M[j], p.sigma_v_sq, dp.sigma_xi_sq)
        if j < n:
            P[j + 1] = nxt
    return Schedule(M, L, P)


def draw_sample_noise(stream: RngStream, n: int, p: SystemParams, dp: DerivedParams):
    """(v, zeta) for ``n`` cycles, in the stream's fixed draw order."""
    z = stream.standard_normal(2 * n).reshape(n, 2)
    return math.sqrt(p.sigma_v_sq) * z[:, 0], math.sqrt(dp.sigma_xi_sq) * z[:, 1]


def _draw_block(seed, start, stop, n, p, dp):
    S = stop - start
    x = np.empty(S)
    v = np.empty((S, n))
    zeta = np.empty((S, n))
    s0 = math.sqrt(p.sigma0_sq)
    for i in range(S):
        stream = RngStream(seed, start + i)
        x[i] = p.x0 + s0 * stream.standard_normal()
        v[i], zeta[i] = draw_sample_noise(stream, n, p, dp)
    return x, v, zeta


def _kernel(x, v, zeta, p, dp, sched, mode, force_k=None, force_sign=1.0):
    """Run every sample through ``n`` cycles; returns per-cycle (S, n) arrays."""
    S, n = v.shape
    A = dp.A
    xhat = np.full(S, float(p.x0))
    j = np.zeros(S, dtype=np.intp)
    out = {name: np.empty((S, n)) for name in ("M", "B", "e", "y", "L", "x_hat", "P", "sq")}
    out["saturated"] = np.zeros((S, n), dtype=bool)
    out["accepted"] = np.zeros((S, n), dtype=bool)
    fixed = mode == "fixed-depth"

    for k in range(n):
        M = sched.M[j]
        L = sched.L[j]
        B = np.full(S, float(p.x0)) if fixed else xhat.copy()
        e = x + v[:, k] - B
        live = np.isfinite(M)
        Mf = np.where(live, M, 0.0)
        u = Mf * e
        sat = live & (np.abs(u) > 1.0)
        level = np.where(sat, np.sign(e), u)
        if force_k is not None and k + 1 == force_k:
            level = np.full(S, float(force_sign))
            forced = np.ones(S, dtype=bool)
        else:
            forced = np.zeros(S, dtype=bool)
        y = A * level + zeta[:, k]
        innov = y - A * Mf * (xhat - B)
        if mode == "rejection":
            accept = ~(sat | forced)
        else:
            accept = np.ones(S, dtype=bool)
        xhat = np.where(accept, xhat + L * innov, xhat)
        j = j + accept

        out["M"][:, k] = M
        out["B"][:, k] = B
        out["e"][:, k] = e
        out["y"][:, k] = y
        out["L"][:, k] = np.where(accept, L, 0.0)
        out["x_hat"][:, k] = xhat
        out["P"][:, k] = sched.P[j]
        out["sq"][:, k] = (x - xhat) ** 2
        out["saturated"][:, k] = sat
        out["accepted"][:, k] = accept
    return out


# --------------------------------------------------------------------------
# single sample
# --------------------------------------------------------------------------

def run_sample(x, p: SystemParams, dp: DerivedParams, stream: RngStream,
               mode: str = "optimal", force_k: Optional[int] = None,
               force_sign: float = 1.0) -> List[CycleTrace]:
    n = p.n_cycles
    sched = build_schedule(p, dp, n, mode)
    v, zeta = draw_sample_noise(stream, n, p, dp)
    out = _kernel(np.array([float(x)]), v[None, :], zeta[None, :], p, dp, sched, mode,
                  force_k, force_sign)
    traces = []
    for k in range(n):
        traces.append(CycleTrace(
            k=k + 1,
            M=float(out["M"][0, k]),
            B=float(out["B"][0, k]),
            e=float(out["e"][0, k]),
            saturated=bool(out["saturated"][0, k]),
            y_tilde=float(out["y"][0, k]),
            L=float(out["L"][0, k]),
            x_hat=float(out["x_hat"][0, k]),
            P_theory=float(out["P"][0, k]),
            sq_error=float(out["sq"][0, k]),
        ))
    return traces


# --------------------------------------------------------------------------
# batches
# --------------------------------------------------------------------------

@dataclass
class BatchResult:
    n_samples: int
    seed: int
    mode: str
    P_hat: np.ndarray          # empirical MSE after n = 1..n_cycles
    P_stderr: np.ndarray       # standard error of P_hat
    P_theory: np.ndarray
    R_hat: np.ndarray          # bit/s from P_hat
    sat_counts: np.ndarray     # natural saturations per cycle
    abnormal_count: int
    final_errors: np.ndarray = field(repr=False)
    linear_cycles: int = 0      # cycles with no earlier saturation on their trajectory
    linear_sat_count: int = 0   # saturations among those cycles

    @property
    def linear_saturation_rate(self):
        """Per-cycle saturation rate while the estimate is still uncorrupted."""
        return self.linear_sat_count / self.linear_cycles if self.linear_cycles else math.nan

    @property
    def n_cycles(self):
        return len(self.P_hat)

    @property
    def saturation_rate(self):
        return self.sat_counts.sum() / (self.n_samples * self.n_cycles)


def empirical_mse(samples, estimates):
    """Mean squared error over samples (axis 0); one value per column if 2-D."""
    x = np.asarray(samples, dtype=float)
    xh = np.asarray(estimates, dtype=float)
    if x.ndim == 1 and xh.ndim == 2:
        x = x[:, None]
    if x.shape[0] == 0:
        raise ValueError("need at least one sample")
    return np.mean((x - xh) ** 2, axis=0)


def _chunks(n_samples, size=_CHUNK):
    return [(a, min(a + size, n_samples)) for a in range(0, n_samples, size)]


def _simulate(p, dp, n_samples, seed, mode, threads, force_k=None, force_sign=1.0, keep=("sq", "saturated")):
    n = p.n_cycles
    sched = build_schedule(p, dp, n, "fixed-depth" if mode == "fixed-depth" else "optimal")

    def work(bounds):
        a, b = bounds
        x, v, zeta = _draw_block(seed, a, b, n, p, dp)
        out = _kernel(x, v, zeta, p, dp, sched, mode, force_k, force_sign)
        kept = {name: out[name] for name in keep}
        kept["x"] = x
        kept["zeta"] = zeta
        return kept

    parts = _chunks(n_samples)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, parts))
    else:
        results = [work(b) for b in parts]
    merged = {name: np.concatenate([r[name] for r in results]) for name in results[0]}
    return sched, merged


def run_batch(p: SystemParams, n_samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED,
              mode: str = "optimal", threads: int = 1, dp: Optional[DerivedParams] = None) -> BatchResult:
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    dp = dp or derive_params(p)
    sched, out = _simulate(p, dp, n_samples, seed, mode, threads, keep=("sq", "saturated", "x_hat"))
    sq = out["sq"]
    P_hat = empirical_mse(out["x"], out["x_hat"])
    if n_samples > 1:
        P_stderr = sq.std(axis=0, ddof=1) / math.sqrt(n_samples)
    else:
        P_stderr = np.full(sq.shape[1], math.nan)
    n = np.arange(1, sq.shape[1] + 1)
    with np.errstate(divide="ignore"):
        R_hat = p.F0 / n * np.log2(p.sigma0_sq / P_hat)
    P_theory = sched.P[1:].copy()
    final_err = out["x"] - out["x_hat"][:, -1]
    abnormal = int(np.sum(np.abs(final_err) > ABNORMAL_SIGMAS * math.sqrt(P_theory[-1])))
    sat = out["saturated"]
    clean = np.cumsum(sat, axis=1) - sat == 0
    return BatchResult(
        n_samples=n_samples, seed=seed, mode=mode,
        P_hat=P_hat, P_stderr=P_stderr, P_theory=P_theory, R_hat=R_hat,
        sat_counts=out["saturated"].sum(axis=0), abnormal_count=abnormal,
        final_errors=final_err,
        linear_cycles=int(clean.sum()), linear_sat_count=int((sat & clean).sum()),
    )


# --------------------------------------------------------------------------
# forced over-modulation
# --------------------------------------------------------------------------

@dataclass
class ForcedCorruptionResult:
    k_force: int
    regime: str
    n_trials: int
    restoration_frequency: float      # naive receiver, cycle k_force + 1 linear
    p_restore_theory: float           # asymptotic law for the regime
    p_restore_exact: float            # exact window probability averaged over the zeta draws
    mean_sq_error_naive: float
    mean_sq_error_reject: float
    abnormal_rate_naive: float
    abnormal_rate_reject: float
    P_final_theory: float             # clean MSE after n_cycles
    final_errors_naive: np.ndarray = field(repr=False)
    final_errors_reject: np.ndarray = field(repr=False)


def forced_corruption_experiment(p: SystemParams, k_force: int, n_trials: int = 10_000,
                                 seed: int = DEFAULT_SEED, sign: float = 1.0, threads: int = 1,
                                 dp: Optional[DerivedParams] = None) -> ForcedCorruptionResult:
    """Clamp the emitted level to one rail at ``k_force`` whatever the input.

    The same draws drive a naive receiver and an oracle-rejecting one.
    """
    n = p.n_cycles
    if not 1 <= k_force <= n:
        raise ValueError("k_force must lie in 1..n_cycles")
    dp = dp or derive_params(p)
    keep = ("sq", "saturated", "x_hat")
    sched, naive = _simulate(p, dp, n_trials, seed, "optimal", threads, k_force, sign, keep)
    _, reject = _simulate(p, dp, n_trials, seed, "rejection", threads, k_force, sign, keep)

    regime = theory.PRE_THRESHOLD if sched.P[k_force - 1] > p.sigma_v_sq else theory.POST_THRESHOLD
    if k_force < n:
        restored = ~naive["saturated"][:, k_force]
        freq = float(restored.mean())
    else:
        freq = math.nan

    if regime == theory.PRE_THRESHOLD:
        p_theory = recovery_probability_prethreshold(dp.alpha, dp.Q_sq)[0]
    else:
        n_star = dp.n_star if dp.n_star is not None else dp.n_star_analytic
        p_theory = recovery_probability_postthreshold(dp.alpha, max(k_force - n_star, 1))

    p_exact = math.nan
    if k_force < n:
        x_prev = naive["x_hat"][:, k_force - 2] if k_force > 1 else np.full(n_trials, float(p.x0))
        zeta_k = naive["zeta"][:, k_force - 1]
        L = sched.L[k_force - 1]
        M_next = sched.M[k_force]
        P_prev = sched.P[k_force - 1]
        vals = [recovery_probability_exact(xp + L * (sign * dp.A + z), xp, M_next, p.sigma_v_sq, P_prev)
                for xp, z in zip(x_prev, zeta_k)]
        p_exact = float(np.mean(vals))

    P_final = sched.P[n]
    cut = ABNORMAL_SIGMAS * math.sqrt(P_final)
    err_n = naive["x"] - naive["x_hat"][:, -1]
    err_r = reject["x"] - reject["x_hat"][:, -1]
    return ForcedCorruptionResult(
        k_force=k_force, regime=regime, n_trials=n_trials,
        restoration_frequency=freq, p_restore_theory=p_theory, p_restore_exact=p_exact,
        mean_sq_error_naive=float(np.mean(err_n ** 2)),
        mean_sq_error_reject=float(np.mean(err_r ** 2)),
        abnormal_rate_naive=float(np.mean(np.abs(err_n) > cut)),
        abnormal_rate_reject=float(np.mean(np.abs(err_r) > cut)),
        P_final_theory=float(P_final),
        final_errors_naive=err_n, final_errors_reject=err_r,
    )


def empirical_rate_stderr(n, n_samples, F0=1.0):
    """Delta-method standard error of the empirical rate at cycle ``n``."""
    return F0 / n * math.sqrt(2.0 / n_samples) / math.log(2.0)
