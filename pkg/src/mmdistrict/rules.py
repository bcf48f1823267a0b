"""Closed-form partisan seat shares for Thiele-family rules and STV.

Under party-line voting only the partisan split of a winning committee
matters, so Thiele rules reduce to a scan over the number of R winners and
STV reduces to an interval condition on ``y_R * (m + 1)``.  Exact ties
always resolve in favor of party D.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

#: Relative tolerance for detecting score ties in floating point.
TIE_EPS = 1e-12


@dataclass(frozen=True)
class SeatOutcome:
    seats_r: int
    seats_d: int

    @property
    def total(self):
        return self.seats_r + self.seats_d


@dataclass(frozen=True)
class UncertaintyModel:
    """Gaussian vote-share noise used for robust expected seat counts."""
    sigma: float = 0.05

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class SeatShareRule:
    """A named social-choice rule: a Thiele weight family or STV."""
    name: str
    kind: str  # "thiele" or "stv"
    lam: object = None  # weight function on 1..m for Thiele rules

    def __post_init__(self):
        if self.kind not in ("thiele", "stv"):
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if self.kind == "thiele" and self.lam is None:
            raise ValueError("thiele rule requires a weight function")


WTA = SeatShareRule("wta", "thiele", lambda i: 1.0)
PAV = SeatShareRule("pav", "thiele", lambda i: 1.0 / i)
THIELE_SQUARED = SeatShareRule("thiele2", "thiele", lambda i: 1.0 / (i * i))
STV = SeatShareRule("stv", "stv")

RULES = {r.name: r for r in (WTA, PAV, STV, THIELE_SQUARED)}


def get_rule(name: str) -> SeatShareRule:
    try:
        return RULES[name]
    except KeyError:
        raise ValueError(f"unknown rule {name!r}; expected one of {sorted(RULES)}") from None


def thiele_seats(y_r: float, m: int, lam) -> SeatOutcome:
    """R seats under the Thiele rule with weight function ``lam``.

    Scans n in 0..m maximizing
    ``y_r * sum_{i<=n} lam(i) + (1 - y_r) * sum_{i<=m-n} lam(i)``
    and takes the smallest maximizer, which breaks ties toward party D.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    prefix = [0.0]
    for i in range(1, m + 1):
        prefix.append(prefix[-1] + lam(i))
    scores = [y_r * prefix[n] + (1 - y_r) * prefix[m - n] for n in range(m + 1)]
    best = max(scores)
    tol = TIE_EPS * max(1.0, abs(best))
    n = next(i for i, s in enumerate(scores) if s >= best - tol)
    return SeatOutcome(n, m - n)


def stv_seats(y_r: float, m: int) -> SeatOutcome:
    """R seats under STV: the unique n with y_r(m+1) - 1 <= n < y_r(m+1).

    When ``y_r * (m + 1)`` hits an integer the upper boundary is excluded,
    giving the tied seat to party D.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    x = y_r * (m + 1)
    nearest = round(x)
    if abs(x - nearest) <= 1e-9:
        n = nearest - 1
    else:
        n = math.floor(x)
    n = max(0, min(m, n))
    return SeatOutcome(n, m - n)


def deterministic_seats(y_r: float, m: int, rule: SeatShareRule) -> SeatOutcome:
    if rule.kind == "stv":
        return stv_seats(y_r, m)
    return thiele_seats(y_r, m, rule.lam)


def seat_thresholds(m: int, rule: SeatShareRule):
    """Ascending t_1..t_m with seats_r(y) >= n iff y > t_n (ties to D).

    For STV and PAV the thresholds are n / (m + 1); for a general Thiele
    rule t_n solves y * lam(n) = (1 - y) * lam(m - n + 1).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if rule.kind == "stv" or rule.name == "pav":
        return [n / (m + 1) for n in range(1, m + 1)]
    return [rule.lam(m - n + 1) / (rule.lam(n) + rule.lam(m - n + 1))
            for n in range(1, m + 1)]


def expected_seats(y_r: float, m: int, rule: SeatShareRule,
                   u: UncertaintyModel = UncertaintyModel()) -> float:
    """Expected R seats with Gaussian vote-share noise of scale u.sigma.

    Sums P(Y > t_n) over the seat thresholds; sigma = 0 degenerates to the
    deterministic count.
    """
    if u.sigma == 0:
        return float(deterministic_seats(y_r, m, rule).seats_r)
    scale = u.sigma * math.sqrt(2.0)
    return sum(0.5 * math.erfc((t - y_r) / scale) for t in seat_thresholds(m, rule))
