"""Closed-form regret-bound constants and exhaustive switch-sequence oracles.

Switch sequences ``0 = t_0 < t_1 < ... < t_N`` are admissible for a dwell
spec ``(n0, phi)`` when every pair of switches satisfies

    k - j < n0 + (t_k - t_j) / phi        for all j < k,

i.e. the dwell inequality evaluated on windows that open at a switch and
count the switches after it. A schedule that passes
:func:`reglab.costs.check_dwell` with the same ``(n0, phi)`` always
satisfies this, so constants computed here remain valid for it.

The searches below are exact: the pairwise constraints collapse to a single
scalar "load" carried along the sequence, and gaps longer than every
constraint can require never increase the objective, so a memoized search
over ``(remaining switches, load, remaining horizon)`` covers all sequences.
"""

import math
from dataclasses import dataclass, asdict
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DwellTooShortError, NotSummableError

DEFAULT_CAP = 200


def _phi_ratio(phi):
    frac = Fraction(phi)
    return frac.numerator, frac.denominator


def min_window_span(d, n0, phi):
    """Smallest integer span of ``d`` consecutive admissible gaps."""
    if d <= n0:
        return d
    return max(d, math.floor(Fraction(phi) * (d - n0)) + 1)


def gap_clip(length, n0, phi):
    """Gap size beyond which no constraint over ``length`` gaps can bind."""
    return max(1, max(min_window_span(d, n0, phi) - d + 1 for d in range(1, length + 1)))


class SearchResult(NamedTuple):
    value: float
    gaps: tuple
    exhaustive: bool


class _SwitchSearch:
    """Memoized search over admissible gap sequences.

    The load after switch ``k`` is ``max_j (k - j) - (t_k - t_j) / phi``;
    it is kept scaled by the numerator of ``phi`` so all comparisons are
    integer.
    """

    def __init__(self, k, sigma_at, n0, phi, length, cap):
        self.a, self.b = _phi_ratio(phi)
        self.limit = self.a * n0
        clip = gap_clip(max(length, 1), n0, phi)
        self.exhaustive = cap is None or cap >= length * clip
        self.cap = length * clip if cap is None else int(cap)
        self.clip = clip
        self.factor = [0.0] + [k * sigma_at(g) for g in range(1, clip + 1)]

    def moves(self, load, budget):
        for g in range(1, min(self.clip, budget) + 1):
            nxt = load + self.a - g * self.b
            if nxt < self.limit:
                yield g, max(0, nxt)

    def max_product(self, length):
        @lru_cache(maxsize=None)
        def best(r, load, budget):
            if r == 0:
                return 1.0, ()
            top = (-1.0, ())
            for g, nxt in self.moves(load, budget):
                val, tail = best(r - 1, nxt, budget - g)
                if val < 0:
                    continue
                val *= self.factor[g]
                if val > top[0]:
                    top = (val, (g,) + tail)
            return top

        val, gaps = best(length, 0, self.cap)
        return SearchResult(val, gaps, self.exhaustive)

    def max_sum_product(self, length):
        # Horner form: 1 + f1 (1 + f2 (1 + ...)); a sequence may also end early
        @lru_cache(maxsize=None)
        def best(r, load, budget):
            if r == 0:
                return 1.0, ()
            top = (0.0, ())
            for g, nxt in self.moves(load, budget):
                val, tail = best(r - 1, nxt, budget - g)
                val *= self.factor[g]
                if val > top[0]:
                    top = (val, (g,) + tail)
            return 1.0 + top[0], top[1]

        val, gaps = best(length, 0, self.cap)
        return SearchResult(val, gaps, self.exhaustive)


def _sigma(cert):
    return cert.sigma_at if hasattr(cert, "sigma_at") else cert


def sigma_sum(cert, tol=1e-8):
    """Bound ``M`` on ``sum_t sigma(t)``.

    Closed forms for the geometric and ``1/t^2`` families; otherwise the
    tabulated sum plus a geometric tail bound fitted to the last quarter
    of the table, which must already be below ``tol``.
    """
    if cert.family == "geometric":
        return 1.0 / (1.0 - cert.lam)
    if cert.family == "inverse_square":
        return 1.0 + math.pi ** 2 / 6.0
    if cert.family == "inverse":
        raise NotSummableError("sigma(t) = 1/t is not summable")
    sigma = cert.sigma
    last = float(sigma[-1])
    head = math.fsum(sigma)
    if last == 0:
        return head
    if last > tol:
        raise NotSummableError(f"sigma({cert.t_max}) = {last:.3g} above tail tolerance {tol:g}")
    window = sigma[-max(2, len(sigma) // 4):]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = window[1:] / window[:-1]
    ratios = ratios[np.isfinite(ratios)]
    rho = float(ratios.max()) if len(ratios) else 1.0
    if not rho < 1:
        raise NotSummableError("tail of sigma does not decay geometrically")
    return head + last * rho / (1.0 - rho)


class DeltaBar(NamedTuple):
    delta: float
    contracting: bool
    witness: tuple
    per_length: dict
    exhaustive: bool


def delta_bar(k, cert, n0, phi, cap=DEFAULT_CAP, strict=True):
    """Largest product ``prod_j k sigma(t_j - t_{j-1})`` over ``n0+1..2n0+1`` switches.

    Maximizing (rather than minimizing) over admissible sequences makes the
    result a valid upper bound for every sequence. With ``strict`` a value
    of one or more raises :class:`DwellTooShortError`.
    """
    if k < 1 or phi <= 0:
        raise ValueError("need k >= 1 and phi > 0")
    sigma_at = _sigma(cert)
    per_length = {}
    best = SearchResult(0.0, (), True)
    exhaustive = True
    for length in range(n0 + 1, 2 * n0 + 2):
        res = _SwitchSearch(k, sigma_at, n0, phi, length, cap).max_product(length)
        exhaustive &= res.exhaustive
        if res.value < 0:
            continue
        per_length[length] = res.value
        if res.value > best.value:
            best = res
    delta = best.value
    if strict and delta >= 1:
        raise DwellTooShortError(delta, best.gaps)
    return DeltaBar(delta, delta < 1, best.gaps, per_length, exhaustive)


def lemma2_P(k, delta, n0):
    """Bound on every switch sum-product once products contract by ``delta``."""
    if not 0 <= delta < 1:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    if k < 1:
        raise ValueError("k must be at least 1")
    head = 2 * n0 + 1 if k == 1 else (1 - k ** (2 * n0 + 1)) / (1 - k)
    return head + (n0 + 1) / (1 - delta)


def brute_force_sum_product(k, cert, n0, phi, n_prime, cap=DEFAULT_CAP):
    """Exact maximum of ``sum_{i<=N'} prod_{j<=i} k sigma(t_j - t_{j-1})`` over admissible sequences."""
    if n_prime < 0:
        raise ValueError("N' must be nonnegative")
    return _SwitchSearch(k, _sigma(cert), n0, phi, n_prime, cap).max_sum_product(n_prime)


def min_dwell_exponential(c, lam, phi0):
    """Dwell time ``-ln(c)/ln(lam) + phi0`` for exponential decay ``c lam^t``."""
    if not 0 < lam < 1:
        raise ValueError("lam must lie in (0, 1)")
    if c < 1 or phi0 <= 0:
        raise ValueError("need c >= 1 and phi0 > 0")
    return -math.log(c) / math.log(lam) + phi0


def exponential_sum_product_bound(c, lam, phi0, n0):
    """``c^n0 lam^(-phi0 n0) / (1 - lam^phi0)``, valid for ``phi >= min_dwell_exponential``."""
    return c ** n0 * lam ** (-phi0 * n0) / (1 - lam ** phi0)


def inverse_square_block_bound(phi, n0):
    """Sum-product bound ``4 N''/3`` for ``k = 1, sigma = 1/t^2`` and ``phi > 1``.

    Every block of ``N''`` consecutive switches then spans more than
    ``N'' + 1`` steps, so one of its gaps is at least two.
    """
    if phi <= 1 or n0 < 1:
        raise ValueError("need phi > 1 and n0 >= 1")
    block = math.ceil((phi * n0 + 1) / (phi - 1))
    return 4 * block / 3


def min_dwell(k, cert, n0, candidates=None, cap=DEFAULT_CAP):
    """First candidate ``phi`` (ascending) at which ``delta_bar`` drops below one."""
    candidates = np.arange(0.5, 50.5, 0.5) if candidates is None else candidates
    for phi in sorted(candidates):
        if delta_bar(k, cert, n0, float(phi), cap, strict=False).contracting:
            return float(phi)
    raise DwellTooShortError(1.0, ())


@dataclass(frozen=True)
class BoundReport:
    """Every intermediate constant of the regret bound and the bound itself."""

    l: float
    k: float
    M: float
    delta: float
    P: float
    C_N0: float
    C_hat: float
    C0: float
    k_u: float
    k_zeta: float
    path_theta: float
    path_eta: float
    sum_x_bound: float
    sum_u_bound: float
    C_eta: float
    C_theta: float
    C_const: float
    total: float

    def to_dict(self):
        return asdict(self)


def theorem2_bound(l, k, M, delta, P, n0, k_u, k_zeta, x0, x1, theta0, path_theta, path_eta):
    """Assemble the regret bound from its ingredients.

    The tracking sums are bounded by

        sum ||x - theta|| <= C0 + (1 + C_hat) PL_theta
        sum ||u - eta||   <= k_u C0 + (1 + k_zeta) PL_eta + (k_u (2 + C_hat) + k_zeta) PL_theta

    with ``C_hat = k M max(C_N0, P)`` and ``C0 = ||x0 - theta0|| + C_hat ||x1 - theta0||``;
    the regret bound is ``l`` times their sum.
    """
    C_N0 = float(sum(k ** i for i in range(n0 + 1)))
    C_hat = k * M * max(C_N0, P)
    theta0 = np.asarray(theta0, dtype=float)
    C0 = float(np.linalg.norm(np.asarray(x0) - theta0) + C_hat * np.linalg.norm(np.asarray(x1) - theta0))
    sum_x = C0 + (1 + C_hat) * path_theta
    sum_u = k_u * C0 + (1 + k_zeta) * path_eta + (k_u * (2 + C_hat) + k_zeta) * path_theta
    C_eta = l * (1 + k_zeta)
    C_theta = l * ((1 + C_hat) + k_u * (2 + C_hat) + k_zeta)
    C_const = l * (1 + k_u) * C0
    return BoundReport(
        l=l, k=k, M=M, delta=delta, P=P, C_N0=C_N0, C_hat=C_hat, C0=C0, k_u=k_u, k_zeta=k_zeta,
        path_theta=path_theta, path_eta=path_eta, sum_x_bound=sum_x, sum_u_bound=sum_u,
        C_eta=C_eta, C_theta=C_theta, C_const=C_const, total=l * (sum_x + sum_u),
    )
