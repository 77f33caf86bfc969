import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from afcs import simulation as sim
from afcs import theory
from afcs.gaussian import RngStream
from afcs.model import (
    EstimatorState, SystemParams, compute_controls, derive_params, is_saturated, modulate, receiver_update,
)
from afcs.presets import MU_ALPHA4, fig4_base, preset_catalog


def fig4(sxi=0.01, n=30):
    p = fig4_base(n).with_(sigma_xi_sq=sxi)
    return p, derive_params(p)


def scalar_reference(x, p, dp, stream_after_x, mode="optimal"):
    """Cycle-by-cycle loop through the model functions, one sample at a time."""
    v, zeta = sim.draw_sample_noise(stream_after_x, p.n_cycles, p, dp)
    st = EstimatorState(k=0, x_hat=p.x0, P=p.sigma0_sq)
    M1 = theory.fixed_depth(p, dp)
    out = []
    for k in range(p.n_cycles):
        M, B = compute_controls(st.x_hat, st.P, p, dp)
        if mode == "fixed-depth":
            M, B = M1, p.x0
        xk = x + v[k]
        y = dp.A * modulate(xk, M, B) + zeta[k]
        st.M, st.B = M, B
        if mode == "rejection" and is_saturated(xk, M, B):
            pass
        else:
            st = receiver_update(st, y, dp, p)
        out.append(st.x_hat)
    return np.array(out)


@pytest.mark.parametrize("mode", ["optimal", "fixed-depth", "rejection"])
def test_kernel_matches_scalar_loop(mode):
    p, dp = fig4(0.01, 25)
    seed = 99
    x, v, zeta = sim._draw_block(seed, 0, 40, p.n_cycles, p, dp)
    sched = sim.build_schedule(p, dp, p.n_cycles, mode)
    out = sim._kernel(x, v, zeta, p, dp, sched, mode)
    for i in range(40):
        s = RngStream(seed, i)
        xi = p.x0 + math.sqrt(p.sigma0_sq) * s.standard_normal()
        assert xi == x[i]
        ref = scalar_reference(xi, p, dp, s, mode)
        assert np.allclose(out["x_hat"][i], ref, rtol=1e-12, atol=1e-15)


def test_run_sample_traces():
    p, dp = fig4(0.01, 12)
    s = RngStream(5, 0)
    x = 0.4
    traces = sim.run_sample(x, p, dp, s)
    assert len(traces) == 12
    assert [t.k for t in traces] == list(range(1, 13))
    assert traces[0].B == p.x0
    for a, b in zip(traces, traces[1:]):
        assert b.B == a.x_hat
    for t in traces:
        assert t.sq_error == pytest.approx((x - t.x_hat) ** 2)


def test_noiseless_run_is_exact():
    p = fig4_base(6).with_(sigma_xi_sq=0.0, sigma_v_sq=0.0)
    dp = derive_params(p)
    traces = sim.run_sample(0.81, p, dp, RngStream(1, 0))
    assert traces[0].x_hat == pytest.approx(0.81, abs=1e-15)
    assert all(t.sq_error < 1e-28 for t in traces)


def test_geometric_theory_without_input_noise():
    p = fig4_base(10).with_(sigma_v_sq=0.0)
    dp = derive_params(p)
    traces = sim.run_sample(0.2, p, dp, RngStream(1, 0))
    for t in traces:
        assert t.P_theory == pytest.approx(p.sigma0_sq * (1 + dp.Q_sq) ** (-t.k), rel=1e-12)


def test_any_saturation_fraction():
    p, dp = fig4(0.01, 30)
    n_s = 10_000
    _, out = sim._simulate(p, dp, n_s, 4321, "optimal", 1)
    frac = out["saturated"].any(axis=1).mean()
    expect = 1 - (1 - p.mu) ** p.n_cycles
    assert expect == pytest.approx(p.n_cycles * p.mu, rel=1e-2)
    assert abs(frac - expect) <= 3 * math.sqrt(expect * (1 - expect) / n_s)


def test_empirical_mse():
    assert sim.empirical_mse([1, 2], [1, 1]) == 0.5
    got = sim.empirical_mse([0.0, 1.0], np.array([[0.0, 1.0], [1.0, 1.0]]))
    assert np.array_equal(got, [0.0, 0.5])
    with pytest.raises(ValueError):
        sim.empirical_mse([], [])


def test_batch_tracks_theory_at_rate_preset():
    p, dp = fig4(0.01, 30)
    res = sim.run_batch(p, 5000, seed=7)
    n_star = dp.n_star
    for n in range(1, n_star + 6):
        assert abs(res.P_hat[n - 1] - res.P_theory[n - 1]) / res.P_theory[n - 1] <= 0.10
    assert np.all(res.P_hat >= 0)
    assert np.all(res.sat_counts <= res.n_samples)
    assert res.P_theory[-1] == pytest.approx(theory.mse_curve(p, dp, 30).values[30], rel=1e-12)


def test_batch_determinism_and_threads():
    p, dp = fig4(0.003, 20)
    a = sim.run_batch(p, 3000, seed=11)
    b = sim.run_batch(p, 3000, seed=11)
    c = sim.run_batch(p, 3000, seed=11, threads=4)
    for other in (b, c):
        assert np.array_equal(a.P_hat, other.P_hat)
        assert np.array_equal(a.final_errors, other.final_errors)
        assert np.array_equal(a.sat_counts, other.sat_counts)
        assert a.abnormal_count == other.abnormal_count
    d = sim.run_batch(p, 3000, seed=12)
    assert not np.array_equal(a.P_hat, d.P_hat)


def test_samples_do_not_depend_on_batch_size():
    p, dp = fig4(0.01, 10)
    small = sim.run_batch(p, 10, seed=3)
    large = sim.run_batch(p, 2500, seed=3)
    assert np.array_equal(small.final_errors, large.final_errors[:10])


def test_run_batch_validation():
    p, _ = fig4()
    with pytest.raises(ValueError):
        sim.run_batch(p, 0)
    with pytest.raises(ValueError):
        sim.run_batch(p, 10, mode="bogus")
    one = sim.run_batch(p, 1)
    assert np.all(np.isnan(one.P_stderr))


def test_empirical_rate_stderr():
    assert sim.empirical_rate_stderr(1, 5000, 1.0) == pytest.approx(math.sqrt(2 / 5000) / math.log(2))


def test_forced_corruption_bounds():
    p, _ = fig4(0.001, 20)
    with pytest.raises(ValueError):
        sim.forced_corruption_experiment(p, 0, 10)
    with pytest.raises(ValueError):
        sim.forced_corruption_experiment(p, 21, 10)
    last = sim.forced_corruption_experiment(p, 20, 100)
    assert math.isnan(last.restoration_frequency)


def test_forced_rail_is_emitted():
    p, dp = fig4(0.001, 6)
    sched = sim.build_schedule(p, dp, 6)
    x, v, zeta = sim._draw_block(1, 0, 50, 6, p, dp)
    out = sim._kernel(x, v, zeta, p, dp, sched, "optimal", force_k=2, force_sign=-1.0)
    assert np.allclose(out["y"][:, 1], -dp.A + zeta[:, 1])


def test_rejection_matches_one_cycle_shorter_run():
    p = preset_catalog()["appendixA"].configurations()[0][1]
    forced = sim.forced_corruption_experiment(p, 15, 10_000, seed=1)
    short = sim.run_batch(p.with_(n_cycles=p.n_cycles - 1, F=None), 10_000, seed=2, mode="rejection")
    assert ks_2samp(forced.final_errors_reject, short.final_errors).pvalue > 0.05


def test_fixed_depth_mode_keeps_offset():
    p, dp = fig4(0.01, 8)
    traces = sim.run_sample(0.3, p, dp, RngStream(2, 0), mode="fixed-depth")
    M1 = theory.fixed_depth(p, dp)
    assert all(t.B == p.x0 and t.M == M1 for t in traces)


def test_zero_variance_schedule():
    p = SystemParams(sigma0_sq=1.0, sigma_v_sq=0.0, A0=1.0, mu=MU_ALPHA4, sigma_xi_sq=0.0, n_cycles=3)
    dp = derive_params(p)
    sched = sim.build_schedule(p, dp, 3)
    assert sched.P[1] == 0.0 and math.isinf(sched.M[1]) and sched.L[1] == 0.0
    res = sim.run_batch(p, 20, seed=1)
    assert np.all(res.P_hat < 1e-28)


def test_rejection_holds_state_while_input_stays_outside():
    # with no input noise a sample outside the first window saturates again on
    # every cycle, so a rejecting receiver never moves
    p, dp = fig4(0.01, 8)
    p = p.with_(sigma_v_sq=0.0)
    dp = derive_params(p)
    x = p.x0 + 5.0 * math.sqrt(p.sigma0_sq)
    traces = sim.run_sample(x, p, dp, RngStream(4, 0), mode="rejection")
    assert all(t.saturated for t in traces)
    assert all(t.x_hat == p.x0 for t in traces)
    naive = sim.run_sample(x, p, dp, RngStream(4, 0), mode="optimal")
    assert not naive[-1].saturated


def test_linear_regime_counts_exclude_corrupted_trajectories():
    p = fig4_base(10).with_(mu=1e-2, sigma_xi_sq=0.01)
    res = sim.run_batch(p, 2000, seed=3)
    total = res.n_samples * res.n_cycles
    assert res.linear_sat_count <= res.sat_counts.sum()
    assert res.linear_cycles < total
    # first cycle is always linear
    assert res.linear_sat_count >= res.sat_counts[0]
    assert abs(res.linear_saturation_rate / 1e-2 - 1) < 0.3
