import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reglab import (CostSchedule, CostSegment, DwellSpec, ScheduleError, SteadyStatePair, SystemModel,
                    check_dwell, dwell_count, eval_cost, generate_admissible_schedule,
                    lipschitz_constant, path_length, steady_pair, switch_times)
from reglab.costs import InfeasibleDwellWarning, schedule_from_dict

from conftest import schedule_at


def seg(theta=0.0, eta=0.0, p=1, q=1.0, r=1.0, start=0):
    return CostSegment(start, SteadyStatePair([eta], [theta]), p, q, r)


def test_eval_cost_examples():
    assert eval_cost(seg(), [0.0], [3.0]) == 3.0
    assert eval_cost(seg(theta=1.0, p=2, q=2.0, r=0.5), [2.0], [3.0]) == 10.0
    s = seg(theta=4.0, eta=-1.0, p=2)
    assert eval_cost(s, s.eta, s.theta) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([1, 2]), st.floats(0.1, 5), st.floats(0.1, 5),
       st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_cost_lower_bound(p, q, r, v):
    s = CostSegment(0, SteadyStatePair([v[0]], [v[1]]), p, q, r)
    dist = math.hypot(v[2] - v[0], v[3] - v[1])
    assert eval_cost(s, [v[2]], [v[3]]) >= min(q, r) * dist ** p - 1e-12


def test_lipschitz_examples():
    assert lipschitz_constant(seg()) == pytest.approx(math.sqrt(2))
    assert lipschitz_constant(seg(q=3.0)) == pytest.approx(3 * math.sqrt(2))
    assert lipschitz_constant(seg(p=2), radius=2.0) == pytest.approx(4 * math.sqrt(2))
    with pytest.raises(ValueError, match="region-dependent"):
        lipschitz_constant(seg(p=2))


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([1, 2]), st.floats(0.1, 4), st.floats(0.1, 4),
       st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_lipschitz_certificate(p, q, r, v):
    # two points in the radius-2 ball around the steady pair (0, 0)
    s = seg(p=p, q=q, r=r)
    za, zb = np.array(v[:2]), np.array(v[2:])
    l = lipschitz_constant(s, radius=2.0)
    gap = abs(eval_cost(s, za[:1], za[1:]) - eval_cost(s, zb[:1], zb[1:]))
    assert gap <= l * np.linalg.norm(za - zb) + 1e-12


def test_switch_times_examples():
    assert switch_times(schedule_at([0], [0.0], 10)) == ([0], 1, 10)
    assert switch_times(schedule_at([0, 5, 10], [0.0, 1.0, 2.0], 20)) == ([0, 5, 10], 3, 20)
    assert switch_times(schedule_at([0, 1], [0.0, 1.0], 1)) == ([0, 1], 2, 1)


def test_dwell_count_examples():
    s = schedule_at([0, 5, 10], [0.0, 1.0, 2.0], 20)
    assert dwell_count(s, 0, 20) == 3
    assert dwell_count(s, 6, 9) == 0
    assert dwell_count(s, 5, 10) == 2


def test_check_dwell_examples():
    s = schedule_at([0, 5, 10, 15], [0.0, 1.0, 0.0, 1.0], 20)
    assert not check_dwell(s, DwellSpec(1, 5))
    assert check_dwell(s, DwellSpec(2, 5))
    chatter = schedule_at(range(11), [t % 2 for t in range(11)], 10)
    assert not check_dwell(chatter, DwellSpec(1, 5))
    res = check_dwell(chatter, DwellSpec(2, 5))
    assert not res.ok and dwell_count(chatter, *res.interval) >= 2 + Fraction(res.interval[1] - res.interval[0], 5)


def _brute_force_dwell(starts, T, n0, phi):
    """Every integer interval inside [0, T], counted directly."""
    for a in range(T + 1):
        for b in range(a, T + 1):
            count = sum(a <= s <= b for s in starts)
            if not count < n0 + Fraction(b - a) / Fraction(phi):
                return False
    return True


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_check_dwell_matches_brute_force(data):
    T = data.draw(st.integers(0, 25))
    rest = data.draw(st.sets(st.integers(1, max(T, 1)), max_size=T)) if T else set()
    starts = sorted({0} | rest)
    n0 = data.draw(st.integers(0, 4))
    phi = data.draw(st.sampled_from([0.5, 1, 1.5, 2, 7 / 3, 3, 5]))
    s = schedule_at(starts, [i % 2 for i in range(len(starts))], T)
    assert check_dwell(s, DwellSpec(n0, phi)).ok == _brute_force_dwell(starts, T, n0, phi)


def test_path_length_examples():
    assert path_length(schedule_at([0], [3.0], 10)).total == 0
    pl = path_length(schedule_at([0, 5, 10], [0.0, 1.0, -1.0], 20))
    assert (pl.total, pl.theta, pl.eta) == (3.0, 3.0, 0.0)
    plant = SystemModel.linear([[0.5]], [[1.0]])
    sched = schedule_from_dict({"horizon": 10, "segments": [{"start": 0, "theta": [0.0]},
                                                            {"start": 5, "theta": [1.0]}]}, plant)
    pl = path_length(sched)
    assert pl.total == pytest.approx(1.5) and pl.eta == pytest.approx(0.5)


def test_path_length_ignores_switches_beyond_T():
    s = schedule_at([0, 5, 10], [0.0, 1.0, -1.0], 20)
    assert path_length(s, 7).total == 1.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from([0.0, 1.0, -2.0]), min_size=1, max_size=12))
def test_path_length_invariant_under_merging(values):
    # repeated adjacent targets carry no variation, so merging them changes nothing
    segs = [CostSegment(t, SteadyStatePair([0.0], [v])) for t, v in enumerate(values)]
    merged = CostSchedule.build(segs, len(values))
    naive = sum(abs(b - a) for a, b in zip(values, values[1:]))
    assert path_length(merged).total == pytest.approx(naive)


def test_schedule_validation():
    a = seg(start=0)
    with pytest.raises(ScheduleError, match="merge"):
        CostSchedule([a, seg(start=3)], 5)
    with pytest.raises(ScheduleError, match="t=0"):
        CostSchedule([seg(start=1)], 5)
    with pytest.raises(ScheduleError, match="increasing"):
        CostSchedule([a, seg(theta=1.0, start=0)], 5)
    with pytest.raises(ScheduleError, match="cover"):
        CostSchedule([a, seg(theta=1.0, start=6)], 5)
    assert len(CostSchedule.build([a, seg(start=3)], 5)) == 1


def test_schedule_rejects_non_steady_pair():
    with pytest.raises(ScheduleError):
        schedule_from_dict({"horizon": 5, "segments": [{"start": 0, "theta": [1.0], "eta": [0.3]}]},
                           SystemModel.integrator(1))


def test_expand_and_segment_lookup():
    s = schedule_at([0, 2, 4], [0.0, 1.0, 2.0], 6)
    idx, theta, eta = s.expand()
    assert idx.tolist() == [0, 0, 1, 1, 2, 2, 2]
    assert theta[:, 0].tolist() == [0, 0, 1, 1, 2, 2, 2]
    assert s.segment_at(3).start == 2


def _pool(k):
    integ = SystemModel.integrator(1)
    return [steady_pair(integ, [float(v)]) for v in range(k)]


def test_generator_admissible_and_deterministic():
    spec = DwellSpec(2, 5)
    a = generate_admissible_schedule(1, spec, 50, _pool(3))
    b = generate_admissible_schedule(1, spec, 50, _pool(3))
    assert check_dwell(a, spec)
    assert a.starts == b.starts and all(x.same_cost(y) for x, y in zip(a, b))


def test_generator_single_segment_when_infeasible():
    with pytest.warns(InfeasibleDwellWarning):
        s = generate_admissible_schedule(0, DwellSpec(1, 51), 50, _pool(3))
    assert s.is_constant


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(2, 4), st.sampled_from([1, 2, 3.5, 6]))
def test_generator_always_admissible(seed, n0, phi):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        s = generate_admissible_schedule(seed, DwellSpec(n0, phi), 60, _pool(3), switch_prob=0.6)
    assert check_dwell(s, DwellSpec(n0, phi))
