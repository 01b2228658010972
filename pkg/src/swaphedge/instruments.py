"""Swap analytics and Bermudan/European swaption contracts."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import termstructure as ts
from .errors import DomainError

__all__ = [
    "BermudanSpec",
    "european_spec",
    "bermudan_spec",
    "annuity",
    "swap_rate",
    "exercise_value",
    "forward_swap_value",
    "coupon_schedule",
    "atm_swap_rate",
    "parse_label",
    "spec_from_label",
]


@dataclass(frozen=True)
class BermudanSpec:
    """Option to enter, at a monitor date T_m, the swap paying on T_{m+1}..T_M.

    ``dates`` holds T_0..T_M; the monitor dates are T_0..T_{M-1}, the payment
    dates T_1..T_M.  A European swaption is the case with ``exercise_count == 1``
    (only T_0 is a monitor date but the swap still pays on T_1..T_M).
    """

    notional: float
    payer: bool
    strike: float
    dates: tuple
    exercise_count: int | None = None

    def __post_init__(self):
        dates = tuple(float(t) for t in self.dates)
        if len(dates) < 2:
            raise DomainError("need at least one monitor date and one payment date")
        if np.any(np.diff(dates) <= 0):
            raise DomainError("contract dates must be strictly increasing")
        if dates[0] < 0:
            raise DomainError("first monitor date must be non-negative")
        object.__setattr__(self, "dates", dates)
        n = len(dates) - 1 if self.exercise_count is None else int(self.exercise_count)
        if not 1 <= n <= len(dates) - 1:
            raise DomainError(f"exercise_count must be in [1, {len(dates) - 1}]")
        object.__setattr__(self, "exercise_count", n)

    @property
    def delta(self):
        """+1 payer, -1 receiver."""
        return 1.0 if self.payer else -1.0

    @property
    def M(self):
        """Number of swap periods."""
        return len(self.dates) - 1

    @property
    def monitor_dates(self):
        return self.dates[: self.exercise_count]

    @property
    def maturity(self):
        return self.dates[-1]

    @property
    def accruals(self):
        """Year fractions Delta T_1..Delta T_M."""
        return np.diff(self.dates)

    @property
    def is_european(self):
        return self.exercise_count == 1


def _annual_dates(start, end, frequency=1.0):
    n = int(round((end - start) * frequency))
    if n < 1 or abs(start + n / frequency - end) > 1e-9:
        raise DomainError(f"tenor {start}->{end} is not a whole number of periods")
    return tuple(start + np.arange(n + 1) / frequency)


def atm_swap_rate(model, dates):
    """Time-zero forward swap rate for the schedule T_0..T_M."""
    p = ts.initial_discount(model, np.asarray(dates))
    return float((p[0] - p[-1]) / np.sum(np.diff(dates) * p[1:]))


def _resolve_strike(model, dates, strike, strike_ratio):
    if (strike is None) == (strike_ratio is None):
        raise DomainError("give exactly one of strike and strike_ratio")
    if strike is None:
        return strike_ratio * atm_swap_rate(model, dates)
    return float(strike)


def bermudan_spec(model, T0, TM, payer=False, notional=100.0, strike=None,
                  strike_ratio=None, frequency=1.0):
    """Bermudan on the swap from T0 to TM: annual exercise on T0..T_{M-1}.

    ``strike_ratio`` sets K as a fraction of the time-zero swap rate.
    """
    dates = _annual_dates(T0, TM, frequency)
    K = _resolve_strike(model, dates, strike, strike_ratio)
    return BermudanSpec(notional, payer, K, dates)


def european_spec(model, T0, TM, payer=False, notional=100.0, strike=None,
                  strike_ratio=None, frequency=1.0):
    dates = _annual_dates(T0, TM, frequency)
    K = _resolve_strike(model, dates, strike, strike_ratio)
    return BermudanSpec(notional, payer, K, dates, exercise_count=1)


def parse_label(label):
    """'1Yx5Y' -> (1.0, 5.0): option expiry and swap tenor in years."""
    m = re.fullmatch(r"\s*([0-9.]+)\s*Y\s*[xX×*]\s*([0-9.]+)\s*Y\s*", label)
    if not m:
        raise DomainError(f"cannot parse contract label {label!r}; expected e.g. '1Yx5Y'")
    return float(m.group(1)), float(m.group(2))


def spec_from_label(model, label, european=False, **kwargs):
    """Contract named as expiry x tenor: '1Yx5Y' exercises from year 1 into a
    swap paying annually until year 6."""
    expiry, tenor = parse_label(label)
    make = european_spec if european else bermudan_spec
    return make(model, expiry, expiry + tenor, **kwargs)


def _check_index(spec, m):
    if not 0 <= m < spec.M:
        raise DomainError(f"exercise index {m} outside [0, {spec.M})")


def _bonds(model, t, x, dates):
    x = np.asarray(x, dtype=float)
    return np.stack([ts.bond_price(model, t, T, x) for T in dates], axis=-1)


def annuity(model, t, x, spec, m):
    """A_{m,M}(t) = sum_{j=m+1}^M Delta T_j P(t, T_j)."""
    _check_index(spec, m)
    p = _bonds(model, t, x, spec.dates[m + 1:])
    return p @ spec.accruals[m:]


def swap_rate(model, t, x, spec, m):
    """S_{m,M}(t) = (P(t,T_m) - P(t,T_M)) / A_{m,M}(t)."""
    _check_index(spec, m)
    p_m = ts.bond_price(model, t, spec.dates[m], x)
    p_M = ts.bond_price(model, t, spec.maturity, x)
    return (p_m - p_M) / annuity(model, t, x, spec, m)


def exercise_value(model, Tm, x, spec, m):
    """h_m = delta N A_{m,M}(T_m) (S_{m,M}(T_m) - K); may be negative.

    Uses the telescoped form delta N (1 - P(T_m,T_M) - K A_{m,M}(T_m)).
    """
    _check_index(spec, m)
    if abs(Tm - spec.dates[m]) > 1e-12:
        raise DomainError(f"time {Tm} is not monitor date {m} ({spec.dates[m]})")
    return forward_swap_value(model, Tm, x, spec, m)


def forward_swap_value(model, t, x, spec, m):
    """Value at t <= T_m of the swap starting at T_m (payer sign per ``spec``)."""
    _check_index(spec, m)
    p_m = ts.bond_price(model, t, spec.dates[m], x)
    p_M = ts.bond_price(model, t, spec.maturity, x)
    A = annuity(model, t, x, spec, m)
    return spec.delta * spec.notional * (p_m - p_M - spec.strike * A)


def coupon_schedule(spec, m=0):
    """Coupon-bond cash flows c_j for the swap started at T_m: c_j = K dT_j, plus 1 at T_M."""
    c = spec.strike * spec.accruals[m:].copy()
    c[-1] += 1.0
    return np.asarray(spec.dates[m + 1:]), c
