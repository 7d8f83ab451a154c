"""Piecewise-constant cost schedules, path length and dwell-time admissibility.

A schedule is a list of :class:`CostSegment`, each active from its start time
until the next one starts. Every segment is a weighted p-norm cost

    L(u, x) = q * ||x - theta||**p + r * ||u - eta||**p

around a declared steady pair, or a user-supplied callable with a declared
Lipschitz constant.
"""

import bisect
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple, Optional

import numpy as np

from .dynamics import SteadyStatePair, steady_pair, validate_steady_state, STEADY_STATE_TOL
from .errors import ScheduleError


class InfeasibleDwellWarning(UserWarning):
    """The requested dwell spec admits no schedule; a single segment was returned."""


@dataclass(frozen=True, eq=False)
class CostSegment:
    start: int
    steady: SteadyStatePair
    p: int = 1
    q: float = 1.0
    r: float = 1.0
    fn: Optional[Callable] = field(default=None, repr=False)
    lipschitz: Optional[float] = None

    def __post_init__(self):
        if int(self.start) != self.start or self.start < 0:
            raise ScheduleError(f"segment start must be a nonnegative integer, got {self.start}")
        object.__setattr__(self, "start", int(self.start))
        if self.fn is None:
            if self.p not in (1, 2):
                raise ScheduleError(f"p must be 1 or 2, got {self.p}")
            if not (self.q > 0 and self.r > 0):
                raise ScheduleError("weights q and r must be positive")

    @property
    def theta(self):
        return self.steady.theta

    @property
    def eta(self):
        return self.steady.eta

    def same_cost(self, other):
        return (self.steady == other.steady and self.p == other.p and self.q == other.q
                and self.r == other.r and self.fn is other.fn)

    def __call__(self, u, x):
        return eval_cost(self, u, x)

    def to_dict(self):
        return {"start": self.start, "theta": self.theta.tolist(), "eta": self.eta.tolist(),
                "p": self.p, "q": self.q, "r": self.r}


@dataclass(frozen=True)
class DwellSpec:
    """Chatter bound ``n0`` and average dwell time ``phi``."""

    n0: int
    phi: float

    def __post_init__(self):
        if int(self.n0) != self.n0 or self.n0 < 0:
            raise ValueError(f"n0 must be a nonnegative integer, got {self.n0}")
        if not self.phi > 0:
            raise ValueError(f"phi must be positive, got {self.phi}")
        object.__setattr__(self, "n0", int(self.n0))


class SwitchTimes(NamedTuple):
    times: list
    count: int
    final: int


class PathLength(NamedTuple):
    total: float
    theta: float
    eta: float


class DwellCheck(NamedTuple):
    ok: bool
    interval: Optional[tuple]

    def __bool__(self):
        return self.ok


class CostSchedule:
    """Ordered cost segments covering ``[0, horizon]``.

    Adjacent segments must differ; use :meth:`build` to merge repeats.
    """

    def __init__(self, segments, horizon):
        segments = tuple(segments)
        if not segments:
            raise ScheduleError("schedule needs at least one segment")
        if segments[0].start != 0:
            raise ScheduleError("first segment must start at t=0")
        for a, b in zip(segments, segments[1:]):
            if b.start <= a.start:
                raise ScheduleError("segment starts must be strictly increasing")
            if a.same_cost(b):
                raise ScheduleError(f"segments at t={a.start} and t={b.start} are identical; merge them")
        if int(horizon) != horizon or horizon < segments[-1].start:
            raise ScheduleError(f"horizon {horizon} does not cover the last segment")
        self.segments = segments
        self.horizon = int(horizon)
        self.starts = tuple(s.start for s in segments)

    @classmethod
    def build(cls, segments, horizon):
        merged = []
        for seg in sorted(segments, key=lambda s: s.start):
            if merged and merged[-1].same_cost(seg):
                continue
            merged.append(seg)
        return cls(merged, horizon)

    @classmethod
    def constant(cls, steady, horizon, p=1, q=1.0, r=1.0):
        return cls([CostSegment(0, steady, p, q, r)], horizon)

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def __repr__(self):
        return f"CostSchedule(starts={list(self.starts)}, horizon={self.horizon})"

    @property
    def is_constant(self):
        return len(self.segments) == 1

    def index_at(self, t):
        if t < 0:
            raise ValueError("negative time")
        return bisect.bisect_right(self.starts, t) - 1

    def segment_at(self, t):
        return self.segments[self.index_at(t)]

    def expand(self, T=None):
        """Per-step segment indices, theta and eta on ``[0, T]``."""
        T = self.horizon if T is None else T
        idx = np.searchsorted(np.asarray(self.starts), np.arange(T + 1), side="right") - 1
        theta = np.stack([s.theta for s in self.segments])[idx]
        eta = np.stack([s.eta for s in self.segments])[idx]
        return idx, theta, eta

    def validate(self, system, tol=STEADY_STATE_TOL):
        for seg in self.segments:
            if not validate_steady_state(system, seg.steady, tol):
                raise ScheduleError(f"segment at t={seg.start} does not declare a steady state")

    def lipschitz(self, radius=math.inf):
        return max(lipschitz_constant(seg, radius) for seg in self.segments)

    def to_dict(self):
        return {"horizon": self.horizon, "segments": [s.to_dict() for s in self.segments]}


def eval_cost(seg, u, x):
    """Stage cost of ``(u, x)`` under segment ``seg``."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    if seg.fn is not None:
        return float(seg.fn(u, x))
    dx = math.sqrt(float(np.dot(x - seg.theta, x - seg.theta)))
    du = math.sqrt(float(np.dot(u - seg.eta, u - seg.eta)))
    if seg.p == 1:
        return seg.q * dx + seg.r * du
    return seg.q * dx * dx + seg.r * du * du


def lipschitz_constant(seg, radius=math.inf):
    """Conservative Lipschitz constant of ``seg``.

    Quadratic costs are only Lipschitz on a ball, so ``radius`` must bound
    ``||(u, x) - (eta, theta)||`` over the region of interest.
    """
    if seg.fn is not None:
        if seg.lipschitz is None:
            raise ValueError("custom costs must declare a Lipschitz constant")
        return float(seg.lipschitz)
    w = max(seg.q, seg.r)
    if seg.p == 1:
        return math.sqrt(2.0) * w
    if not math.isfinite(radius):
        raise ValueError("Lipschitz constant is region-dependent for quadratic costs")
    if radius <= 0:
        raise ValueError("radius must be positive")
    return 2.0 * math.sqrt(2.0) * w * radius


def switch_times(schedule):
    """Switch instants ``t_0 = 0 < t_1 < ...``, their count and ``t_N = T``."""
    return SwitchTimes(list(schedule.starts), len(schedule.starts), schedule.horizon)


def dwell_count(schedule, tau1, tau2):
    """Number of switches in the closed interval ``[tau1, tau2]`` (t=0 counts)."""
    if tau1 > tau2:
        raise ValueError(f"tau1={tau1} > tau2={tau2}")
    starts = schedule.starts
    return bisect.bisect_right(starts, tau2) - bisect.bisect_left(starts, tau1)


def _dwell_ok(count, span, n0, phi):
    # count < n0 + span / phi, evaluated exactly
    return (count - n0) * Fraction(phi) < span


class _DwellTracker:
    """Incremental exact dwell test over a growing list of switch times.

    With ``phi = a/b`` the inequality for switches ``j <= k`` reads
    ``g_k + (1 - n0) a < g_j`` where ``g_i = i a - t_i b``, so only the
    running minimum of ``g`` is needed.
    """

    def __init__(self, n0, phi):
        frac = Fraction(phi)
        self.a, self.b = frac.numerator, frac.denominator
        self.slack = (1 - n0) * self.a
        self.count = 0
        self.low = None
        self.low_time = None

    def admits(self, t):
        g = self.count * self.a - t * self.b
        if self.slack >= 0:
            return False, t
        if self.low is not None and g + self.slack >= self.low:
            return False, self.low_time
        return True, None

    def push(self, t):
        g = self.count * self.a - t * self.b
        if self.low is None or g < self.low:
            self.low, self.low_time = g, t
        self.count += 1


def first_dwell_violation(starts, spec):
    """Earliest-ending ``(tau1, tau2)`` breaking the dwell inequality, or None.

    The switch count over an interval only changes at switch instants, so
    intervals with both ends on switch times are the binding ones.
    """
    tracker = _DwellTracker(spec.n0, spec.phi)
    for t in starts:
        ok, opener = tracker.admits(t)
        if not ok:
            return (opener, t)
        tracker.push(t)
    return None


def check_dwell(schedule, spec):
    bad = first_dwell_violation(schedule.starts, spec)
    return DwellCheck(bad is None, bad)


def path_length(schedule, T=None):
    """Total variation of the steady pairs over ``t = 1..T``."""
    T = schedule.horizon if T is None else T
    d_theta = d_eta = 0.0
    for prev, seg in zip(schedule.segments, schedule.segments[1:]):
        if 1 <= seg.start <= T:
            d_theta += float(np.linalg.norm(seg.theta - prev.theta))
            d_eta += float(np.linalg.norm(seg.eta - prev.eta))
    return PathLength(d_theta + d_eta, d_theta, d_eta)


def generate_admissible_schedule(seed, spec, T, target_pool, p=1, q=1.0, r=1.0, switch_prob=0.3):
    """Random schedule over ``[0, T]`` that satisfies ``check_dwell(., spec)``.

    At each step a switch is proposed with probability ``switch_prob`` and
    accepted only if every interval ending at that step still satisfies the
    dwell inequality. The next target is drawn from the pool, excluding the
    current one.
    """
    pool = list(target_pool)
    if not pool:
        raise ValueError("target pool is empty")
    rng = np.random.default_rng(seed)
    current = int(rng.integers(len(pool)))
    segments = [CostSegment(0, pool[current], p, q, r)]
    if not _dwell_ok(1, 0, spec.n0, spec.phi):
        warnings.warn(f"n0={spec.n0} admits no schedule: a single instant already "
                      "holds one switch", InfeasibleDwellWarning, stacklevel=2)
        return CostSchedule(segments, T)
    tracker = _DwellTracker(spec.n0, spec.phi)
    tracker.push(0)
    for t in range(1, T + 1):
        if len(pool) < 2 or rng.random() >= switch_prob:
            continue
        if tracker.admits(t)[0]:
            nxt = int(rng.integers(len(pool) - 1))
            current = nxt if nxt < current else nxt + 1
            tracker.push(t)
            segments.append(CostSegment(t, pool[current], p, q, r))
    schedule = CostSchedule(segments, T)
    assert check_dwell(schedule, spec).ok
    return schedule


def schedule_from_dict(data, system, tol=STEADY_STATE_TOL):
    """Parse ``{horizon, segments: [{start, theta, eta | "solve", p, q, r}]}``."""
    segments = []
    for i, s in enumerate(data["segments"]):
        try:
            pair = steady_pair(system, s["theta"], s.get("eta", "solve"), tol)
        except (ValueError, KeyError) as exc:
            raise ScheduleError(f"/segments/{i}: {exc}") from exc
        segments.append(CostSegment(s.get("start", 0), pair, s.get("p", 1),
                                    s.get("q", 1.0), s.get("r", 1.0)))
    schedule = CostSchedule.build(segments, data["horizon"])
    schedule.validate(system, tol)
    return schedule
