import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from afcs import theory
from afcs.errors import DegenerateConfigurationError, DomainError
from afcs.gaussian import RngStream
from afcs.model import (
    EstimatorState, SystemParams, compute_controls, derive_params, fitting_mass, forward_channel,
    initial_state, is_saturated, modulate, optimal_gain, receiver_update, transmitter_input, verify_fitting,
)
from afcs.presets import MU_ALPHA4


def test_params_need_cycle_count_or_band():
    with pytest.raises(DomainError):
        SystemParams()
    p = SystemParams(F0=10.0, F=2.5)
    assert p.n_cycles == 4
    q = SystemParams(F0=10.0, n_cycles=5)
    assert q.F == 2.0


@pytest.mark.parametrize("bad", [
    dict(sigma0_sq=0.0), dict(sigma_v_sq=-1.0), dict(A0=0.0), dict(N_xi=-1.0), dict(mu=0.0),
    dict(mu=1.0), dict(F0=0.0), dict(n_cycles=0), dict(sigma_xi_sq=-0.1), dict(n_cycles=2.5),
])
def test_params_validation(bad):
    kw = dict(n_cycles=3)
    kw.update(bad)
    with pytest.raises(DomainError):
        SystemParams(**kw)


def test_derive_link_budget_numbers():
    p = SystemParams(A0=5e-3, mu=MU_ALPHA4, N_xi=1e-10, F0=2500.0, F=2500.0, sigma0_sq=0.0625)
    dp = derive_params(p)
    assert dp.alpha == pytest.approx(4.0, abs=1e-12)
    assert dp.W_sign == pytest.approx(1.5625e-6, rel=1e-12)
    assert dp.Q_sq == pytest.approx(6.25, rel=1e-12)


def test_derive_unit_case():
    mu1 = math.erfc(1 / math.sqrt(2))
    dp = derive_params(SystemParams(A0=1.0, mu=mu1, N_xi=1.0, F0=1.0, n_cycles=1))
    assert dp.Q_sq == pytest.approx(1.0, rel=1e-12)


def test_derive_reference_snr():
    p = SystemParams(A0=1.25, mu=MU_ALPHA4, sigma_xi_sq=0.01, n_cycles=10, sigma0_sq=1.5625)
    assert derive_params(p).Q_sq == pytest.approx((1.25 / 4) ** 2 / 0.01, rel=1e-12)


def test_modulator_branches():
    assert modulate(0.5, 1.0, 0.0) == 0.5
    assert modulate(0.75, 2.0, 0.0) == 1.0
    assert modulate(-0.75, 2.0, 0.0) == -1.0
    assert modulate(3.0, 5.0, 3.0) == 0.0
    assert is_saturated(0.75, 2.0, 0.0)
    assert not is_saturated(0.5, 2.0, 0.0)


def test_forward_channel():
    s = RngStream(0, 0)
    assert forward_channel(1.0, 2.0, s, 0.0) == 2.0
    assert forward_channel(-1.0, 2.0, s, 0.0) == -2.0
    s = RngStream(5, 0)
    y = np.array([forward_channel(0.0, 1.0, s, 0.25) for _ in range(100_000)])
    assert abs(y.mean()) <= 3 * 0.5 / math.sqrt(1e5)


def test_transmitter_input():
    s = RngStream(9, 0)
    assert transmitter_input(1.0, s, 0.0) == 1.0
    xs = np.array([transmitter_input(1.0, s, 4.0) for _ in range(100_000)])
    assert xs.var() == pytest.approx(4.0, abs=0.15)
    assert xs.mean() == pytest.approx(1.0, abs=0.02)


def test_optimal_gain_examples():
    assert optimal_gain(1.0, 1.0, 1.0, 0.0, 1.0) == 0.5
    assert optimal_gain(1.0, 1.0, 0.0, 0.0, 1.0) == 0.0
    assert optimal_gain(2.0, 1.0, 1.0, 0.0, 4.0) == 0.25
    with pytest.raises(DegenerateConfigurationError):
        optimal_gain(1.0, 1.0, 0.0, 0.0, 0.0)


@given(
    st.floats(0.01, 10), st.floats(0.01, 10), st.floats(1e-6, 10), st.floats(0, 10), st.floats(1e-4, 10),
)
def test_gain_identity(A, M, P, sv, sxi):
    L = optimal_gain(A, M, P, sv, sxi)
    Pk = theory.mse_step(P, A, M, sv, sxi)
    # dimensionless form; dividing by 1 - Pk/P would amplify rounding when the ratio is near 1
    assert abs(A * M * L - (1.0 - Pk / P)) <= 1e-12


def _params(**kw):
    base = dict(A0=1.25, mu=MU_ALPHA4, sigma_xi_sq=0.01, n_cycles=10, sigma0_sq=1.5625, sigma_v_sq=1e-4)
    base.update(kw)
    return SystemParams(**base)


def test_receiver_update_arithmetic():
    p = _params(sigma_xi_sq=1.0, sigma_v_sq=0.0, sigma0_sq=1.0, A0=1.0,
                mu=math.erfc(1 / math.sqrt(2)))
    dp = derive_params(p)
    st0 = EstimatorState(k=0, x_hat=0.0, P=1.0, M=1.0, B=0.0)
    nxt = receiver_update(st0, 1.0, dp, p)
    assert nxt.L == 0.5 and nxt.x_hat == 0.5 and nxt.P == 0.5
    assert receiver_update(st0, 0.0, dp, p).x_hat == 0.0


def test_noiseless_one_cycle_exact():
    p = _params(sigma_xi_sq=0.0, sigma_v_sq=0.0)
    dp = derive_params(p)
    x = 0.37
    st0 = initial_state(p)
    M, B = compute_controls(st0.x_hat, st0.P, p, dp)
    st0.M, st0.B = M, B
    y = dp.A * modulate(x, M, B)
    nxt = receiver_update(st0, y, dp, p)
    assert nxt.L == pytest.approx(1.0 / (dp.A * M), rel=1e-15)
    assert nxt.x_hat == pytest.approx(x, abs=1e-15)
    assert nxt.P == 0.0


def test_controls():
    p = _params(sigma_v_sq=0.0)
    dp = derive_params(p)
    M, B = compute_controls(0.3, 0.0625, p, dp)
    assert M == pytest.approx(1.0, rel=1e-12)
    assert B == 0.3
    M1, _ = compute_controls(p.x0, p.sigma0_sq, p, dp)
    assert M1 == theory.fixed_depth(p, dp)


def test_power_invariant():
    p = _params()
    dp = derive_params(p)
    for P in (1.5625, 0.1, 1e-3, 1e-7, 0.0):
        M, _ = compute_controls(0.0, P, p, dp)
        assert (dp.A * M) ** 2 * (p.sigma_v_sq + P) == pytest.approx(dp.W_sign, rel=1e-12)


def test_fitting_condition():
    p = _params()
    dp = derive_params(p)
    P = 0.02
    M, B = compute_controls(0.1, P, p, dp)
    assert verify_fitting(M, B, 0.1, P, p.sigma_v_sq, p.mu)
    assert fitting_mass(M, B, 0.1, P, p.sigma_v_sq) == pytest.approx(1 - p.mu, abs=1e-9)
    assert not verify_fitting(2 * M, B, 0.1, P, p.sigma_v_sq, p.mu)
    shift = 3 * math.sqrt(p.sigma_v_sq + P)
    assert not verify_fitting(M, B + shift, 0.1, P, p.sigma_v_sq, p.mu)
