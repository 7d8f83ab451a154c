"""Closed-loop simulation with one-step cost information delay."""

from dataclasses import dataclass

import numpy as np

from .controllers import PRIOR
from .costs import eval_cost
from .dynamics import SteadyStatePair, as_vector, solve_steady_input, STEADY_STATE_TOL
from .errors import DimensionError, RolloutError, ScheduleError


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Aligned closed-loop sequences on ``t = 0..T``.

    ``x`` holds ``T + 2`` states (the last one is ``x_{T+1}``); all other
    arrays hold ``T + 1`` rows. ``loss[t]`` is the excess cost over the
    steady pair active at ``t``.
    """

    x: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    eta: np.ndarray
    segment: np.ndarray
    loss: np.ndarray
    regret_cum: np.ndarray

    @property
    def T(self):
        return len(self.u) - 1

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("x", "u", "theta", "eta", "segment", "loss", "regret_cum"))


def resolve_prior(system, schedule, x0, prior="x0", tol=STEADY_STATE_TOL):
    """Steady pair handed to the controller at ``t = 0``.

    ``"x0"`` uses ``theta = x0`` with the matching steady input when one
    exists (zero otherwise); ``"informed"`` uses the first segment's pair; a
    :class:`SteadyStatePair` is used as given.
    """
    if isinstance(prior, SteadyStatePair):
        return prior
    if prior == "x0":
        eta = solve_steady_input(system, x0, tol)
        if eta is None:
            eta = np.zeros(system.input_dim)
        return SteadyStatePair(eta, x0)
    if prior == "informed":
        return schedule.segments[0].steady
    raise ValueError(f"unknown prior {prior!r}")


def _transition(system):
    if system.kind == "integrator":
        return lambda x, u: x + u
    if system.kind == "linear":
        A, B = system.A, system.B
        return lambda x, u: A @ x + B @ u
    f, n = system.f, system.state_dim
    return lambda x, u: np.asarray(f(x, u), dtype=float).reshape(n)


def rollout(system, controller, schedule, x0, T=None, prior="x0"):
    """Run ``controller`` against ``system`` under ``schedule`` for ``T + 1`` steps."""
    T = schedule.horizon if T is None else int(T)
    if T < 0:
        raise ValueError("horizon must be nonnegative")
    if schedule.horizon < T:
        raise ScheduleError(f"schedule covers [0, {schedule.horizon}] but T={T}")
    n, m = system.state_dim, system.input_dim
    x = as_vector(x0, n, "x0").copy()
    first = resolve_prior(system, schedule, x, prior)
    controller.reset(system, x.copy(), first)

    idx, theta, eta = schedule.expand(T)
    segs = schedule.segments
    f = _transition(system)
    xs = np.empty((T + 2, n))
    us = np.empty((T + 1, m))
    xs[0] = x
    for t in range(T + 1):
        if t == 0:
            steady, key = first, PRIOR
        else:
            prev = segs[idx[t - 1]]
            steady, key = prev.steady, prev.start
        try:
            u = np.asarray(controller(x, steady, key), dtype=float).reshape(-1)
        except Exception as exc:
            raise RolloutError(t, f"controller failed: {exc}") from exc
        if u.shape != (m,):
            raise RolloutError(t, str(DimensionError("u", (m,), u.shape)))
        us[t] = u
        x = f(x, u)
        xs[t + 1] = x
    loss = stage_losses(schedule, xs[:-1], us, idx)
    return Trajectory(xs, us, theta, eta, idx, loss, np.cumsum(loss))


def stage_losses(schedule, x, u, idx):
    """Excess cost ``L_t(u_t, x_t) - L_t(eta_t, theta_t)`` for every row."""
    loss = np.empty(len(idx))
    for i, seg in enumerate(schedule.segments):
        rows = np.flatnonzero(idx == i)
        if not len(rows):
            continue
        if seg.fn is not None:
            base = eval_cost(seg, seg.eta, seg.theta)
            loss[rows] = [eval_cost(seg, u[t], x[t]) - base for t in rows]
            continue
        dx = np.sqrt(np.sum((x[rows] - seg.theta) ** 2, axis=1))
        du = np.sqrt(np.sum((u[rows] - seg.eta) ** 2, axis=1))
        loss[rows] = seg.q * dx ** seg.p + seg.r * du ** seg.p
    return loss
