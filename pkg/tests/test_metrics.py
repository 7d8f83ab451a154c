import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reglab import (CostSegment, Example1Baseline, Example1Improved, LinearFeedback, RateCertificate,
                    ScheduleError, SteadyStatePair, SystemModel, certify_rate, classify_summability,
                    dynamic_regret, fit_input_bound, lyapunov_tail, lyapunov_tails, phi_envelope,
                    rollout, tracking_sums)
from reglab.metrics import identify_family, prefix_sum_fn

from conftest import constant_schedule, harmonic, schedule_at

BASEL = math.pi ** 2 / 6


def baseline_regret_oracle(T):
    return float(2 + harmonic(T) - Fraction(1, T + 1))


def test_baseline_regret_closed_form(baseline_run):
    traj = baseline_run(100)
    regret = dynamic_regret(traj, constant_schedule([0.0], [0.0], 100))
    assert regret == pytest.approx(baseline_regret_oracle(100), abs=1e-12)
    assert regret == pytest.approx(7.177, abs=1e-3)


def test_improved_regret_near_limit(improved_run):
    traj = improved_run(1000)
    regret = dynamic_regret(traj, constant_schedule([0.0], [0.0], 1000))
    assert regret <= 2 + BASEL
    assert 2 + BASEL - regret < 2e-3


def test_regret_zero_at_optimum(integrator):
    sched = constant_schedule([2.0], [0.0], 50)
    traj = rollout(integrator, Example1Improved(), sched, [2.0], 50)
    assert dynamic_regret(traj, sched) == 0.0


def test_tracking_sums_examples(baseline_run, improved_run):
    sched = constant_schedule([0.0], [0.0], 100)
    sx, _ = tracking_sums(improved_run(100), sched)
    assert sx == pytest.approx(1 + sum(1 / t ** 2 for t in range(1, 101)), rel=1e-13)
    assert sx == pytest.approx(2.635, abs=1e-3)
    sx, _ = tracking_sums(baseline_run(100), sched)
    assert sx == pytest.approx(1 + float(harmonic(100)), rel=1e-13)
    assert sx == pytest.approx(6.187, abs=1e-3)


def test_tracking_sums_at_optimum(integrator):
    sched = constant_schedule([1.0], [0.0], 10)
    assert tracking_sums(rollout(integrator, Example1Baseline(), sched, [1.0], 10), sched) == (0.0, 0.0)


@pytest.mark.parametrize("runner", ["baseline_run", "improved_run", "feedback_run"])
def test_telescoping(runner, request):
    traj = request.getfixturevalue(runner)(500)
    sched = constant_schedule([0.0], [0.0], 500)
    V = lyapunov_tails(traj, sched)
    assert np.max(np.abs(V[1:] - V[:-1] + traj.loss)) <= 1e-12
    assert np.all(V >= 0)
    assert lyapunov_tail(traj, sched, 7) == pytest.approx(V[7], abs=1e-12)


def test_lyapunov_start_value(improved_run):
    traj = improved_run(1000)
    V0 = lyapunov_tail(traj, constant_schedule([0.0], [0.0], 1000), 0)
    # the tail beyond 1000 of |x_t| + |u_t| is below 2/1000
    assert 2 + BASEL - 2e-3 < V0 <= 2 + BASEL


def test_lyapunov_zero_once_steady(integrator):
    sched = constant_schedule([1.0], [0.0], 20)
    traj = rollout(integrator, Example1Improved(), sched, [1.0], 20)
    assert lyapunov_tail(traj, sched, 5) == 0.0


def test_lyapunov_needs_constant_cost(integrator):
    sched = schedule_at([0, 5], [0.0, 1.0], 10)
    traj = rollout(integrator, Example1Improved(), sched, [1.0], 10)
    with pytest.raises(ScheduleError):
        lyapunov_tails(traj, sched)
    assert lyapunov_tail(traj, sched, 6) >= 0


def test_fit_improved(integrator):
    # the informed prior lets the first step apply the full gain of one
    sched = constant_schedule([0.0], [0.0], 200)
    traj = rollout(integrator, Example1Improved(), sched, [1.0], 200, prior="informed")
    k_u, k_zeta = fit_input_bound(traj, sched)
    assert abs(k_u - 1) <= 1e-9 and k_zeta == 0


def test_fit_improved_default_prior(improved_run):
    # with theta_{-1} = x0 the largest gain applied is 3/4
    k_u, _ = fit_input_bound(improved_run(200), constant_schedule([0.0], [0.0], 200))
    assert k_u == pytest.approx(0.75)


def test_fit_linear_feedback(scalar_plant):
    K = np.array([[-0.3]])
    sched = constant_schedule([1.0], [0.5], 50)
    traj = rollout(scalar_plant, LinearFeedback(K), sched, [3.0], 50, prior="informed")
    k_u, k_zeta = fit_input_bound(traj, sched)
    assert abs(k_u - 0.3) <= 1e-9 and k_zeta == 0


def test_fit_matrix_feedback():
    plant = SystemModel.linear([[0.9, 0.2], [0.0, 0.7]], [[1.0, 0.0], [0.0, 1.0]])
    K = np.array([[-0.5, 0.1], [0.2, -0.3]])
    sched = constant_schedule([0.0, 0.0], [0.0, 0.0], 60)
    norm_K = np.linalg.norm(K, 2)
    fits = [fit_input_bound(rollout(plant, LinearFeedback(K), sched, x0, 60, prior="informed"), sched)
            for x0 in ([1.0, 0.0], [0.0, 1.0], [0.3, -0.8])]
    assert all(f.k_u <= norm_K + 1e-9 and f.k_zeta == 0 for f in fits)


def test_fit_at_rest(integrator):
    sched = constant_schedule([2.0], [0.0], 10)
    assert fit_input_bound(rollout(integrator, Example1Improved(), sched, [2.0], 10), sched) == (0.0, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_fit_covers_every_step(seed):
    rng = np.random.default_rng(seed)
    starts = [0] + sorted(rng.choice(np.arange(1, 30), 3, replace=False).tolist())
    sched = schedule_at(starts, rng.normal(size=4).tolist(), 30)
    traj = rollout(SystemModel.integrator(1), Example1Improved(), sched, [rng.normal()], 30)
    k_u, k_zeta = fit_input_bound(traj, sched)
    _, theta, eta = sched.expand()
    zeta = np.hstack([theta, eta])
    prev = np.vstack([zeta[:1], zeta[:-1]])
    prev2 = np.vstack([zeta[:1], prev[:-1]])
    for t in range(31):
        lhs = np.linalg.norm(traj.u[t] - prev[t, 1:])
        rhs = k_u * np.linalg.norm(traj.x[t] - prev[t, :1]) + k_zeta * np.linalg.norm(prev[t] - prev2[t])
        assert lhs <= rhs * (1 + 1e-12) + 1e-12


def test_certify_improved(integrator):
    seg = CostSegment(0, SteadyStatePair([0.0], [0.0]))
    cert = certify_rate(integrator, Example1Improved(), seg, [[0.5], [1.0], [2.0]], t_max=200)
    t = np.arange(1, 201)
    assert cert.k == 1.0 and cert.family == "inverse_square"
    np.testing.assert_allclose(cert.sigma[1:], 1 / t ** 2, rtol=1e-12)


def test_certify_baseline(integrator):
    seg = CostSegment(0, SteadyStatePair([0.0], [0.0]))
    cert = certify_rate(integrator, Example1Baseline(), seg, [[0.5], [1.0], [2.0]], t_max=100)
    assert cert.family == "inverse"
    np.testing.assert_allclose(cert.sigma[1:], 1 / np.arange(1, 101), rtol=1e-12)


def test_certify_feedback(scalar_plant):
    seg = CostSegment(0, SteadyStatePair([0.0], [0.0]))
    cert = certify_rate(scalar_plant, LinearFeedback([[-0.3]]), seg, [[1.0], [-2.0]], t_max=50,
                        prior="informed")
    assert cert.k == 1.0 and cert.family == "geometric" and cert.lam == pytest.approx(0.2)
    np.testing.assert_allclose(cert.sigma, 0.2 ** np.arange(51), rtol=1e-12)


def test_certify_empirical_covers_grid():
    plant = SystemModel.linear([[0.5, 1.0], [0.0, 0.5]], [[1.0], [0.0]])
    seg = CostSegment(0, SteadyStatePair([0.0], [0.0, 0.0]))
    grid = [[1.0, 0.0], [0.0, 1.0], [1.0, -1.0]]
    cert = certify_rate(plant, LinearFeedback([[0.0, 0.0]]), seg, grid, t_max=60, prior="informed")
    assert cert.family == "empirical" and cert.k > 1
    for x0 in grid:
        traj = rollout(plant, LinearFeedback([[0.0, 0.0]]), constant_schedule([0.0, 0.0], [0.0], 60),
                       x0, 60, prior="informed")
        dist = np.linalg.norm(traj.x[:61], axis=1)
        assert np.all(dist <= cert.k * cert.sigma * np.linalg.norm(x0) * (1 + 1e-12))


def test_certify_rejects_uninformative_grid(integrator):
    seg = CostSegment(0, SteadyStatePair([0.0], [1.0]))
    with pytest.raises(ValueError, match="uninformative"):
        certify_rate(integrator, Example1Improved(), seg, [[1.0]])


def test_rate_certificate_validation():
    with pytest.raises(ValueError):
        RateCertificate(1.0, np.array([1.0, 0.5, 0.7]))
    with pytest.raises(ValueError):
        RateCertificate(0.5, np.array([1.0, 0.5]))
    cert = RateCertificate(2.0, np.array([1.0, 0.5, 0.25]))
    assert cert.sigma_at(10) == 0.25
    assert identify_family(0.3 ** np.arange(20)) == ("geometric", pytest.approx(0.3))


def test_phi_envelope_properties(integrator):
    seg = CostSegment(0, SteadyStatePair([0.0], [0.0]))
    env = phi_envelope(integrator, Example1Improved(), seg, [0.5, 1.0, 2.0], grid_density=4, t_max=60)
    assert np.all(np.diff(env.table, axis=1) <= 0)
    assert np.all(np.diff(env.table, axis=0) >= 0)
    t = np.arange(1, 61)
    np.testing.assert_allclose(env.table[1, 1:], 1 / t ** 2, rtol=1e-12)
    assert env(1.0, 3) == pytest.approx(1 / 9)


def test_summability_harmonic():
    H = [125, 250, 500, 1000, 2000]
    v = classify_summability(lambda n: float(harmonic(n)), H)
    assert v.verdict == "diverging" and v.D is None
    assert 0.68 <= v.growth_per_doubling <= 0.71


def test_summability_basel():
    H = [125, 250, 500, 1000, 2000]
    v = classify_summability(lambda n: 1 + sum(1 / t ** 2 for t in range(1, n + 1)), H)
    # the tail estimate may overshoot the limit by a little before the safety factor
    assert v.bounded and 1 + BASEL <= v.D <= (1 + BASEL + 1e-3) * 1.01


def test_summability_zero_and_inconclusive():
    H = [10, 20, 40, 80]
    assert classify_summability(lambda n: 0.0, H).D == 0.0
    noisy = iter([0.0, 0.1, 0.1, 0.13])
    assert classify_summability(lambda n: next(noisy), H).verdict == "inconclusive"
    with pytest.raises(ValueError):
        classify_summability(lambda n: 0.0, H[:3])


def test_prefix_sum_fn():
    f = prefix_sum_fn([1.0, 2.0, 3.0])
    assert (f(0), f(2)) == (1.0, 6.0)
