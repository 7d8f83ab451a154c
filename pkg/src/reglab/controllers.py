"""Causal controllers driven by the previously revealed cost.

At time ``t`` a controller sees the state ``x_t`` and the steady pair of the
cost active at ``t - 1``. At ``t = 0`` it sees a prior pair instead. Each
segment is identified by its start time; the prior carries the key
:data:`PRIOR`.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotSchurStableError

PRIOR = "prior"


class StabilityWarning(UserWarning):
    pass


def baseline_gain(tau):
    return 1.0 / (tau + 1)


def improved_gain(tau):
    return (2 * tau + 1) / (tau + 1) ** 2


@dataclass
class TauCounter:
    """Steps since the revealed cost last changed.

    Starts at 0, resets to 1 whenever a new segment is revealed and
    increments otherwise.
    """

    tau: int = 0
    last_seen: object = None

    def observe(self, key):
        if self.last_seen is None:
            self.tau, self.last_seen = 0, key
        elif key != self.last_seen:
            self.tau, self.last_seen = 1, key
        else:
            self.tau += 1
        return self.tau


class Controller:
    """Base class: ``reset`` before a run, then call once per step.

    Subclasses implement :meth:`act`. ``declared_rate`` and
    ``declared_input_bound`` carry the certificates a controller is known to
    satisfy, if any.
    """

    name = "custom"
    declared_rate = None
    declared_input_bound = None

    def reset(self, system, x0, prior):
        self.system = system

    def act(self, x, steady, key):
        raise NotImplementedError

    def __call__(self, x, steady, key):
        return self.act(x, steady, key)


class _TauController(Controller):
    gain = None

    def reset(self, system, x0, prior):
        if system.state_dim != system.input_dim:
            raise DimensionError("u", (system.state_dim,), (system.input_dim,))
        self.system = system
        self.counter = TauCounter()

    def act(self, x, steady, key):
        g = self.gain(self.counter.observe(key))
        return g * steady.theta - g * np.asarray(x, dtype=float)


class Example1Baseline(_TauController):
    """``u = (theta_prev - x) / (tau + 1)``; converges like ``1/t``."""

    name = "example1-baseline"
    gain = staticmethod(baseline_gain)
    declared_rate = {"family": "inverse", "k": 1.0}
    declared_input_bound = (1.0, 0.0)


class Example1Improved(_TauController):
    """``u = g(tau) (theta_prev - x)`` with ``g = (2 tau + 1)/(tau + 1)^2``; converges like ``1/t^2``."""

    name = "example1-improved"
    gain = staticmethod(improved_gain)
    declared_rate = {"family": "inverse_square", "k": 1.0}
    declared_input_bound = (1.0, 0.0)


class LinearFeedback(Controller):
    """``u = K (x - theta_prev) + eta_prev`` on a linear plant."""

    name = "linear-feedback"

    def __init__(self, K):
        self.K = np.atleast_2d(np.asarray(K, dtype=float))
        self.declared_input_bound = (float(np.linalg.norm(self.K, 2)), 0.0)
        self.declared_rate = {"family": "spectral"}
        self.schur_stable = None

    def closed_loop_matrix(self, system):
        return system.A + system.B @ self.K

    def reset(self, system, x0, prior):
        if system.kind != "linear":
            raise ValueError("linear feedback needs a linear plant")
        if self.K.shape != (system.input_dim, system.state_dim):
            raise DimensionError("K", (system.input_dim, system.state_dim), self.K.shape)
        self.system = system
        rho = max(abs(np.linalg.eigvals(self.closed_loop_matrix(system))))
        self.schur_stable = bool(rho < 1)
        if not self.schur_stable:
            warnings.warn(f"A + BK has spectral radius {rho:.4g} >= 1", StabilityWarning, stacklevel=2)

    def act(self, x, steady, key):
        return self.K @ (x - steady.theta) + steady.eta


def _power_ratio(A_cl, lam, t_max):
    ratio = 1.0
    power = np.eye(A_cl.shape[0])
    for t in range(1, t_max + 1):
        power = power @ A_cl
        norm, scale = float(np.linalg.norm(power, 2)), lam ** t
        if norm == 0:
            break
        if scale == 0:
            return math.inf
        ratio = max(ratio, norm / scale)
    return ratio


def spectral_envelope(A_cl, t_max=200):
    """Constants ``(c, lam)`` with ``||A_cl^t|| <= c lam^t`` for ``t <= t_max``.

    When the powers decay at the spectral radius ``rho`` itself (normal
    matrices, up to a relative rounding slack of 1e-12) the result is
    ``(1, rho)``. Otherwise ``lam`` sits a margin ``min(0.05, (1 - rho)/2)``
    above ``rho`` and ``c`` is the largest ratio ``||A_cl^t|| / lam^t`` seen
    on the horizon, never below one.
    """
    A_cl = np.atleast_2d(np.asarray(A_cl, dtype=float))
    rho = float(max(abs(np.linalg.eigvals(A_cl))))
    if rho >= 1:
        raise NotSchurStableError(f"not Schur stable (spectral radius {rho:.6g})")
    if rho > 0 and _power_ratio(A_cl, rho, t_max) <= 1 + 1e-12:
        return 1.0, rho
    lam = rho + min(0.05, (1 - rho) / 2)
    return _power_ratio(A_cl, lam, t_max), lam


def make_controller(spec):
    """Controller from a config mapping ``{"kind": ..., ...}``."""
    kind = spec["kind"]
    if kind == "example1-baseline":
        return Example1Baseline()
    if kind == "example1-improved":
        return Example1Improved()
    if kind == "linear-feedback":
        return LinearFeedback(spec["K"])
    if kind == "custom":
        return CUSTOM_CONTROLLERS[spec["name"]]()
    raise ValueError(f"unknown controller kind {kind!r}")


CUSTOM_CONTROLLERS = {}


def register_controller(name, factory):
    """Make ``factory`` available to configs as ``{"kind": "custom", "name": name}``."""
    CUSTOM_CONTROLLERS[name] = factory
    return factory
