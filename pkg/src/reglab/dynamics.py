"""Discrete-time plant models ``x_{t+1} = f(x_t, u_t)`` and steady states."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import least_squares

from .errors import DimensionError

STEADY_STATE_TOL = 1e-9


def as_vector(value, dim, name):
    """Return ``value`` as a float vector of length ``dim`` or raise."""
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise DimensionError(name, (dim,), arr.shape)
    return arr


@dataclass(frozen=True, eq=False)
class SystemModel:
    """A plant ``x_{t+1} = f(x_t, u_t)``.

    Build one with :meth:`integrator`, :meth:`linear` or :meth:`custom`
    rather than calling the constructor directly.
    """

    kind: str
    state_dim: int
    input_dim: int
    A: Optional[np.ndarray] = None
    B: Optional[np.ndarray] = None
    f: Optional[Callable] = field(default=None, repr=False)
    name: str = ""

    @classmethod
    def integrator(cls, n=1):
        return cls("integrator", int(n), int(n))

    @classmethod
    def linear(cls, A, B):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.asarray(B, dtype=float)
        if B.ndim < 2:
            B = B.reshape(A.shape[0], -1)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError("A", (n, n), A.shape)
        if B.ndim != 2 or B.shape[0] != n:
            raise DimensionError("B", (n, "m"), B.shape)
        A.setflags(write=False)
        B.setflags(write=False)
        return cls("linear", n, B.shape[1], A=A, B=B)

    @classmethod
    def custom(cls, f, state_dim, input_dim, name="custom"):
        return cls("custom", int(state_dim), int(input_dim), f=f, name=name)

    def __post_init__(self):
        if self.kind not in ("integrator", "linear", "custom"):
            raise ValueError(f"unknown system kind {self.kind!r}")
        if self.state_dim < 1 or self.input_dim < 1:
            raise ValueError("dimensions must be positive")
        if self.kind == "integrator" and self.state_dim != self.input_dim:
            raise DimensionError("u", (self.state_dim,), (self.input_dim,))

    def __call__(self, x, u):
        return step(self, x, u)

    def to_dict(self):
        if self.kind == "integrator":
            return {"kind": "integrator", "n": self.state_dim}
        if self.kind == "linear":
            return {"kind": "linear", "A": self.A.tolist(), "B": self.B.tolist()}
        return {"kind": "custom", "name": self.name}


@dataclass(frozen=True, eq=False)
class SteadyStatePair:
    """Steady input ``eta`` and state ``theta`` with ``theta = f(theta, eta)``."""

    eta: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        eta = np.atleast_1d(np.asarray(self.eta, dtype=float)).copy()
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float)).copy()
        eta.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "theta", theta)

    def __eq__(self, other):
        if not isinstance(other, SteadyStatePair):
            return NotImplemented
        return np.array_equal(self.eta, other.eta) and np.array_equal(self.theta, other.theta)

    def __hash__(self):
        return hash((self.eta.tobytes(), self.theta.tobytes()))

    @property
    def zeta(self):
        """Stacked ``(theta, eta)``."""
        return np.concatenate([self.theta, self.eta])


def step(system, x, u):
    """Apply the transition map once."""
    x = as_vector(x, system.state_dim, "x")
    u = as_vector(u, system.input_dim, "u")
    if system.kind == "integrator":
        return x + u
    if system.kind == "linear":
        return system.A @ x + system.B @ u
    out = np.asarray(system.f(x, u), dtype=float).reshape(-1)
    if out.shape[0] != system.state_dim:
        raise DimensionError("f(x, u)", (system.state_dim,), out.shape)
    return out


def steady_state_residual(system, pair):
    return float(np.linalg.norm(step(system, pair.theta, pair.eta) - pair.theta))


def validate_steady_state(system, pair, tol=STEADY_STATE_TOL):
    """True iff ``||f(theta, eta) - theta|| <= tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return steady_state_residual(system, pair) <= tol


def solve_steady_input(system, theta, tol=STEADY_STATE_TOL):
    """Input ``eta`` making ``theta`` a fixed point, or None if there is none.

    Linear plants use a least-squares solve of ``B eta = (I - A) theta``;
    custom plants a nonlinear least-squares search started at zero, then
    at plus and minus one. Either way the result is accepted only if the
    residual is within ``tol``.
    """
    theta = as_vector(theta, system.state_dim, "theta")
    m = system.input_dim
    if system.kind == "integrator":
        return np.zeros(m)
    if system.kind == "linear":
        rhs = theta - system.A @ theta
        eta = np.linalg.lstsq(system.B, rhs, rcond=None)[0]
        if validate_steady_state(system, SteadyStatePair(eta, theta), tol):
            return eta
        return None
    # zero can be a stationary point of the residual, so retry from +-1
    for start in (np.zeros(m), np.ones(m), -np.ones(m)):
        sol = least_squares(lambda e: step(system, theta, e) - theta, start,
                            xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if validate_steady_state(system, SteadyStatePair(sol.x, theta), tol):
            return sol.x
    return None


def steady_pair(system, theta, eta="solve", tol=STEADY_STATE_TOL):
    """Build a pair, solving for ``eta`` when it is ``"solve"``."""
    if isinstance(eta, str):
        if eta != "solve":
            raise ValueError(f"eta must be a vector or 'solve', got {eta!r}")
        solved = solve_steady_input(system, theta, tol)
        if solved is None:
            raise ValueError(f"no steady input for theta={np.asarray(theta).tolist()}")
        eta = solved
    pair = SteadyStatePair(as_vector(eta, system.input_dim, "eta"),
                           as_vector(theta, system.state_dim, "theta"))
    return pair
