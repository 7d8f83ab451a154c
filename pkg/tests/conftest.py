import numpy as np
import pytest

from reglab import (CostSchedule, CostSegment, SteadyStatePair, SystemModel, rollout,
                    Example1Baseline, Example1Improved, LinearFeedback)


def constant_schedule(theta, eta, T, p=1, q=1.0, r=1.0):
    return CostSchedule.constant(SteadyStatePair(eta, theta), T, p, q, r)


def schedule_at(starts, thetas, T, eta=0.0):
    segs = [CostSegment(s, SteadyStatePair([eta], [th])) for s, th in zip(starts, thetas)]
    return CostSchedule(segs, T)


@pytest.fixture
def integrator():
    return SystemModel.integrator(1)


@pytest.fixture
def scalar_plant():
    return SystemModel.linear([[0.5]], [[1.0]])


@pytest.fixture
def baseline_run(integrator):
    def run(T, x0=1.0):
        return rollout(integrator, Example1Baseline(), constant_schedule([0.0], [0.0], T), [x0], T)
    return run


@pytest.fixture
def improved_run(integrator):
    def run(T, x0=1.0):
        return rollout(integrator, Example1Improved(), constant_schedule([0.0], [0.0], T), [x0], T)
    return run


@pytest.fixture
def feedback_run(scalar_plant):
    def run(T, x0=1.0, prior="informed"):
        sched = constant_schedule([0.0], [0.0], T)
        return rollout(scalar_plant, LinearFeedback([[-0.3]]), sched, [x0], T, prior=prior)
    return run


def harmonic(T):
    from fractions import Fraction
    return sum(Fraction(1, t) for t in range(1, T + 1))


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)
