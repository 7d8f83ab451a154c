"""Regret, tail-regret Lyapunov values, rate certificates and summability tests."""

import math
from dataclasses import dataclass
from itertools import product
from typing import NamedTuple, Optional

import numpy as np

from .closedloop import rollout, stage_losses
from .costs import CostSchedule, CostSegment
from .errors import InputBoundViolation, ScheduleError

DIVERGENCE_FLOOR = 0.05


def _check_aligned(traj, schedule, T):
    T = traj.T if T is None else int(T)
    if T > traj.T or T > schedule.horizon:
        raise ScheduleError(f"T={T} exceeds trajectory ({traj.T}) or schedule ({schedule.horizon}) horizon")
    return T


def _losses(traj, schedule, T):
    idx, _, _ = schedule.expand(T)
    return stage_losses(schedule, traj.x[: T + 1], traj.u[: T + 1], idx)


def dynamic_regret(traj, schedule, T=None):
    """Accumulated excess cost over the steady pairs on ``[0, T]``."""
    T = _check_aligned(traj, schedule, T)
    return math.fsum(_losses(traj, schedule, T))


def lyapunov_tails(traj, schedule, T=None):
    """Truncated tail regret ``V_t = sum_{s=t}^{T} loss_s`` for ``t = 0..T+1``.

    Only defined while the cost is constant on ``[0, T]``.
    """
    T = _check_aligned(traj, schedule, T)
    idx, _, _ = schedule.expand(T)
    if idx[0] != idx[-1]:
        raise ScheduleError("tail regret needs a constant cost on the window")
    loss = _losses(traj, schedule, T)
    tails = np.zeros(T + 2)
    tails[:-1] = np.cumsum(loss[::-1])[::-1]
    return tails


def lyapunov_tail(traj, schedule, t, T=None):
    T = _check_aligned(traj, schedule, T)
    if not 0 <= t <= T + 1:
        raise ValueError(f"t={t} outside [0, {T + 1}]")
    idx, _, _ = schedule.expand(T)
    if t <= T and idx[t] != idx[T]:
        raise ScheduleError("tail regret needs a constant cost on [t, T]")
    return math.fsum(_losses(traj, schedule, T)[t:])


def tracking_sums(traj, schedule, T=None):
    """``(sum ||x_t - theta_t||, sum ||u_t - eta_t||)`` over ``[0, T]``."""
    T = _check_aligned(traj, schedule, T)
    _, theta, eta = schedule.expand(T)
    sx = np.linalg.norm(traj.x[: T + 1] - theta, axis=1)
    su = np.linalg.norm(traj.u[: T + 1] - eta, axis=1)
    return math.fsum(sx), math.fsum(su)


class InputBoundFit(NamedTuple):
    k_u: float
    k_zeta: float


ROUNDING_ULPS = 4


def fit_input_bound(traj, schedule, tol=1e-12):
    """Gains ``(k_u, k_zeta)`` for ``||u_t - eta_{t-1}|| <= k_u ||x_t - theta_{t-1}|| + k_zeta ||dzeta||``.

    ``dzeta = zeta_{t-1} - zeta_{t-2}`` with ``zeta = (theta, eta)`` held at
    ``zeta_0`` before time zero. ``k_u`` is the smallest gain covering every
    step where ``dzeta`` vanishes; ``k_zeta`` then covers the rest.

    Each difference carries a rounding allowance of a few ulps of its
    operands, so steps where the state has converged to working precision
    do not produce spurious gains.
    """
    T = traj.T
    _, theta, eta = schedule.expand(T)
    n = theta.shape[1]
    zeta = np.hstack([theta, eta])
    # rows shifted by one and two steps, padded with zeta_0
    prev = np.vstack([zeta[:1], zeta[:-1]])
    prev2 = np.vstack([zeta[:1], prev[:-1]])
    u, x = traj.u[: T + 1], traj.x[: T + 1]
    eps = ROUNDING_ULPS * np.finfo(float).eps
    num = np.linalg.norm(u - prev[:, n:], axis=1)
    num = np.maximum(num - eps * (np.linalg.norm(u, axis=1) + np.linalg.norm(prev[:, n:], axis=1)), 0)
    den = np.linalg.norm(x - prev[:, :n], axis=1)
    den = den + eps * (np.linalg.norm(x, axis=1) + np.linalg.norm(prev[:, :n], axis=1))
    dz = np.linalg.norm(prev - prev2, axis=1)

    k_u = 0.0
    quiet = dz == 0
    for t in np.flatnonzero(quiet):
        if den[t] == 0:
            if num[t] > tol:
                raise InputBoundViolation(int(t))
            continue
        k_u = max(k_u, num[t] / den[t])
    k_zeta = 0.0
    for t in np.flatnonzero(~quiet):
        k_zeta = max(k_zeta, (num[t] - k_u * den[t]) / dz[t])
    return InputBoundFit(float(k_u), float(k_zeta))


@dataclass(frozen=True, eq=False)
class RateCertificate:
    """Decay certificate ``||x_t - theta|| <= k ||x_0 - theta|| sigma(t)``.

    ``family`` is one of ``"inverse"`` (1/t), ``"inverse_square"`` (1/t^2),
    ``"geometric"`` (lam^t) or ``"empirical"``, in which case ``sigma``
    beyond the table is bounded by its last entry.
    """

    k: float
    sigma: np.ndarray
    family: str = "empirical"
    lam: Optional[float] = None

    @classmethod
    def from_family(cls, family, k=1.0, t_max=200, lam=None):
        t = np.arange(t_max + 1)
        if family == "geometric":
            sigma = float(lam) ** t
        elif family in ("inverse", "inverse_square"):
            power = 1 if family == "inverse" else 2
            sigma = np.ones(t_max + 1)
            sigma[1:] = 1.0 / t[1:].astype(float) ** power
        else:
            raise ValueError(f"unknown family {family!r}")
        return cls(float(k), sigma, family, lam)

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma[0] != 1 or np.any(sigma < 0) or np.any(np.diff(sigma) > 0):
            raise ValueError("sigma must start at 1, stay nonnegative and be nonincreasing")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        object.__setattr__(self, "sigma", sigma)

    @property
    def t_max(self):
        return len(self.sigma) - 1

    def sigma_at(self, t):
        if t < 0:
            raise ValueError("negative time")
        if self.family == "geometric":
            return self.lam ** t
        if self.family in ("inverse", "inverse_square") and t > 0:
            return 1.0 / t ** (1 if self.family == "inverse" else 2)
        return float(self.sigma[min(t, self.t_max)])

    def summary(self):
        out = {"k": self.k, "family": self.family, "t_max": self.t_max}
        if self.lam is not None:
            out["lam"] = self.lam
        return out


def identify_family(sigma, rtol=1e-9):
    """Name the closed-form law a tabulated ``sigma`` follows, if any."""
    sigma = np.asarray(sigma, dtype=float)
    if len(sigma) < 3 or sigma[0] != 1:
        return "empirical", None
    t = np.arange(1, len(sigma), dtype=float)
    tail = sigma[1:]
    for family, law in (("inverse_square", 1 / t**2), ("inverse", 1 / t)):
        if np.allclose(tail, law, rtol=rtol, atol=0):
            return family, None
    lam = sigma[1]
    if 0 < lam < 1 and np.allclose(tail, lam**t, rtol=rtol, atol=1e-300):
        return "geometric", float(lam)
    return "empirical", None


def _constant_schedule(segment, T):
    seg = CostSegment(0, segment.steady, segment.p, segment.q, segment.r, segment.fn, segment.lipschitz)
    return CostSchedule([seg], T)


def certify_rate(system, controller, segment, x0_grid, t_max=200, prior="x0", detect_family=True):
    """Fit a decay certificate from closed-loop runs under a constant cost.

    The worst normalized distance over the grid is made nonincreasing with
    a running maximum from the tail and then scaled so that its first entry
    is one; the scale becomes ``k``.
    """
    schedule = _constant_schedule(segment, t_max)
    theta = segment.theta
    raw = np.zeros(t_max + 1)
    informative = False
    for x0 in x0_grid:
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        r0 = np.linalg.norm(x0 - theta)
        if r0 == 0:
            continue
        informative = True
        traj = rollout(system, controller, schedule, x0, t_max, prior=prior)
        raw = np.maximum(raw, np.linalg.norm(traj.x[: t_max + 1] - theta, axis=1) / r0)
    if not informative:
        raise ValueError("uninformative grid: every initial state sits at theta")
    envelope = np.maximum.accumulate(raw[::-1])[::-1]
    k = max(1.0, float(envelope[0]))
    sigma = envelope / k
    sigma[0] = 1.0
    family, lam = identify_family(sigma) if detect_family else ("empirical", None)
    return RateCertificate(k, sigma, family, lam)


def initial_offsets(n, grid_density, seed=0):
    """Unit-ball sample of offsets: radial fractions times a set of directions."""
    if n <= 3:
        dirs = np.array([d for d in product((-1.0, 0.0, 1.0), repeat=n) if any(d)])
    else:
        dirs = np.random.default_rng(seed).standard_normal((2 * n * grid_density, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    fractions = np.linspace(1.0 / grid_density, 1.0, grid_density)
    return np.concatenate([f * dirs for f in fractions])


@dataclass(frozen=True, eq=False)
class PhiEnvelope:
    """Sampled lower estimate of the worst future distance, ``table[i, t]`` for ``radii[i]``."""

    radii: np.ndarray
    table: np.ndarray

    def __call__(self, s, t):
        i = int(np.searchsorted(self.radii, s))
        return float(self.table[i, t])


def phi_envelope(system, controller, segment, radii, grid_density=5, t_max=200, prior="x0", seed=0):
    """Largest ``||x_tau - theta||`` over sampled ``||x_0 - theta|| <= s`` and ``tau >= t``."""
    radii = np.sort(np.atleast_1d(np.asarray(radii, dtype=float)))
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    schedule = _constant_schedule(segment, t_max)
    offsets = initial_offsets(system.state_dim, grid_density, seed)
    table = np.zeros((len(radii), t_max + 1))
    for i, s in enumerate(radii):
        for off in offsets:
            traj = rollout(system, controller, schedule, segment.theta + s * off, t_max, prior=prior)
            dist = np.linalg.norm(traj.x[: t_max + 1] - segment.theta, axis=1)
            table[i] = np.maximum(table[i], np.maximum.accumulate(dist[::-1])[::-1])
    table = np.maximum.accumulate(table, axis=0)
    return PhiEnvelope(radii, table)


class SummabilityVerdict(NamedTuple):
    verdict: str
    D: Optional[float]
    horizons: tuple
    partial_sums: tuple
    growth_per_doubling: float

    @property
    def bounded(self):
        return self.verdict == "bounded"


def prefix_sum_fn(values):
    """Callable ``H -> sum(values[:H + 1])``."""
    sums = np.cumsum(np.asarray(values, dtype=float))
    return lambda H: float(sums[H])


def classify_summability(sum_fn, horizons, divergence_floor=DIVERGENCE_FLOOR, safety=0.01,
                         max_ratio=0.75):
    """Decide whether partial sums grow without bound from doubling horizons.

    Diverging when every doubling adds at least ``divergence_floor``;
    bounded when the increments shrink at least geometrically (ratio at most
    ``max_ratio``) and the last is below the floor. The bounded estimate
    adds the geometric tail of the increments and a relative ``safety``.
    """
    horizons = tuple(int(h) for h in horizons)
    if len(horizons) < 4:
        raise ValueError("need at least four horizons")
    sums = tuple(float(sum_fn(h)) for h in horizons)
    diffs = np.diff(sums)
    growth = float(diffs[-1])
    if np.all(diffs >= divergence_floor):
        return SummabilityVerdict("diverging", None, horizons, sums, growth)
    pairs = list(zip(diffs, diffs[1:]))
    shrinking = np.all(diffs >= 0) and all(b <= max_ratio * a for a, b in pairs)
    ratios = [b / a for a, b in pairs if a > 0]
    if shrinking and diffs[-1] < divergence_floor:
        rho = max(ratios, default=0.0)
        tail = diffs[-1] * rho / (1 - rho)
        D = (sums[-1] + tail) * (1 + safety)
        return SummabilityVerdict("bounded", D, horizons, sums, growth)
    return SummabilityVerdict("inconclusive", None, horizons, sums, growth)
