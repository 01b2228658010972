"""Hedge-error experiments.

All errors are reported in basis points of the notional and are defined as
hedge portfolio value minus the liability it is meant to cover.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import termstructure as ts
from .benchmarks import jamshidian_price
from .bounds import discount_factors, stopping_indices
from .engine import HedgeSet, continuation_values, monitor_grid
from .errors import ContractError, NumericError
from .instruments import coupon_schedule, exercise_value, forward_swap_value
from .portfolio import asset_inputs
from .regression import forward
from .simulation import WEEKLY, Measure, simulate

__all__ = [
    "HedgeErrorReport",
    "static_hedge_error",
    "dynamic_hedge_error",
    "semistatic_bermudan_hedge_error",
    "kappa_vec",
    "delta_vec",
    "write_reports_csv",
    "write_errors_csv",
]

_BP = 1e4


@dataclass
class HedgeErrorReport:
    """Per-path hedge errors in bp of notional plus summary statistics."""

    strategy: str
    errors: np.ndarray
    n_paths: int
    seed: int
    moneyness: float = math.nan

    @property
    def mean(self):
        return float(np.mean(self.errors))

    @property
    def sd(self):
        return float(np.std(self.errors, ddof=1))

    @property
    def p95(self):
        return float(np.percentile(self.errors, 95))

    @property
    def se(self):
        return self.sd / math.sqrt(self.errors.size)

    def row(self):
        return {"strategy": self.strategy, "moneyness": self.moneyness, "n_paths": self.n_paths,
                "seed": self.seed, "mean": self.mean, "sd": self.sd, "p95": self.p95}


def _single_network(hedge):
    if isinstance(hedge, HedgeSet):
        if hedge.M != 1:
            raise ContractError("a static hedge needs a single-date hedge set")
        return hedge.networks[0]
    return hedge


def static_hedge_error(hedge, model, spec, n_paths=10_000, seed=0, measure=Measure.RISK_NEUTRAL,
                       dt=WEEKLY):
    """Buy the replication portfolio at time zero and hold it to expiry.

    Error per path: G_0(z_0(T_0)) - max(h_0(x(T_0)), 0).
    """
    net = _single_network(hedge)
    T0 = spec.dates[0]
    if abs(net.expiry - T0) > 1e-12:
        raise ContractError("network expiry does not match the option expiry")
    ps = simulate(model, [0.0, T0], n_paths, measure, seed=seed, dt=dt, maturity=spec.maturity)
    x = ps.at(T0)
    g = forward(net, asset_inputs(model, net.design, T0, net.maturities, x))
    payoff = np.maximum(exercise_value(model, T0, x, spec, 0), 0.0)
    return HedgeErrorReport("static", (g - payoff) / spec.notional * _BP, n_paths, seed,
                            _moneyness(model, spec))


def _moneyness(model, spec):
    from .instruments import atm_swap_rate

    return spec.strike / atm_swap_rate(model, spec.dates)


def _alpha_sq(model, t, spec):
    T0 = spec.dates[0]
    return np.array([ts.bond_option_variance(model, t, T0, T) for T in spec.dates[1:]])


def kappa_vec(c, ratio, alpha, tol=1e-14, max_iter=200):
    """Solve sum_j c_j ratio_nj exp(-alpha_j^2/2 - alpha_j k) = 1 for each row n.

    The left side is convex and decreasing in k; Newton steps are kept
    inside a bracket that is expanded until it contains the root.
    """
    ratio = np.atleast_2d(ratio)
    w = c * np.exp(-0.5 * alpha**2) * ratio  # (n, M)

    def f(k):
        e = np.exp(-np.outer(k, alpha))
        return np.sum(w * e, axis=1) - 1.0, -np.sum(w * e * alpha, axis=1)

    n = ratio.shape[0]
    lo = np.full(n, -10.0)
    hi = np.full(n, 10.0)
    for _ in range(80):
        flo, _ = f(lo)
        bad = flo <= 0
        if not np.any(bad):
            break
        lo[bad] *= 2.0
    for _ in range(80):
        fhi, _ = f(hi)
        bad = fhi >= 0
        if not np.any(bad):
            break
        hi[bad] *= 2.0
    k = 0.5 * (lo + hi)
    for _ in range(max_iter):
        val, der = f(k)
        pos = val > 0
        lo = np.where(pos, k, lo)
        hi = np.where(pos, hi, k)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = k - val / der
        inside = np.isfinite(step) & (step > lo) & (step < hi)
        k_new = np.where(inside, step, 0.5 * (lo + hi))
        done = (np.abs(val) < tol) | (np.abs(k_new - k) <= 1e-15 * np.maximum(1.0, np.abs(k)))
        k = k_new
        if np.all(done):
            return k
    val, _ = f(k)
    if np.any(np.abs(val) > 1e-10):
        raise NumericError("kappa root finding did not converge")
    return k


def delta_vec(model, spec, t, x):
    """Vectorized analytic Hull-White swaption delta for states x, shape (n, 1)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    T0 = spec.dates[0]
    _, c = coupon_schedule(spec, 0)
    alpha = np.sqrt(_alpha_sq(model, t, spec))
    p = np.stack([ts.bond_price(model, t, T, x) for T in spec.dates[1:]], axis=1)
    p0 = ts.bond_price(model, t, T0, x)
    k = kappa_vec(c, p / p0[:, None], alpha)
    nus = np.array([float(ts.bond_volatility(model, t, T)[0]) for T in spec.dates[1:]])
    nu0 = float(ts.bond_volatility(model, t, T0)[0])
    num = np.sum(c * p * nus * ndtr(k[:, None] + alpha), axis=1) - p0 * nu0 * ndtr(k)
    den = np.sum(c * p * nus, axis=1) - p0 * nu0
    rec = num / den
    return 1.0 - rec if spec.payer else rec


def dynamic_hedge_error(model, spec, n_rebalance=255, n_paths=10_000, seed=0):
    """Self-financing delta hedge of a European swaption in a one-factor model.

    The hedge starts from the option premium, holds delta units of the
    underlying forward swap and the rest in the money market.  It is
    rebalanced at n_rebalance equidistant times in [0, T_0); cash accrues at
    the trapezoidal bank account of the simulated short rate.
    """
    if model.d != 1:
        raise ContractError("the dynamic delta hedge needs a one-factor model")
    if spec.exercise_count != 1:
        raise ContractError("the dynamic delta hedge is for European swaptions")
    T0 = spec.dates[0]
    grid = T0 * np.arange(n_rebalance + 1) / n_rebalance
    ps = simulate(model, grid, n_paths, Measure.RISK_NEUTRAL, seed=seed, dt=WEEKLY)
    bank = ps.numeraire
    value = np.full(n_paths, float(jamshidian_price(model, spec, 0.0, np.zeros(1))))
    for k in range(n_rebalance):
        t = grid[k]
        x = ps.paths[:, k, :]
        units = delta_vec(model, spec, t, x)
        swap_now = forward_swap_value(model, t, x, spec, 0)
        cash = value - units * swap_now
        x_next = ps.paths[:, k + 1, :]
        swap_next = forward_swap_value(model, grid[k + 1], x_next, spec, 0)
        value = units * swap_next + cash * bank[:, k + 1] / bank[:, k]
    payoff = np.maximum(exercise_value(model, T0, ps.paths[:, -1, :], spec, 0), 0.0)
    return HedgeErrorReport(f"dynamic_{n_rebalance}", (value - payoff) / spec.notional * _BP,
                            n_paths, seed, _moneyness(model, spec))


def semistatic_bermudan_hedge_error(hedge, n_paths=10_000, seed=0, measure=Measure.RISK_NEUTRAL,
                                    discounted=False, dt=WEEKLY):
    """Hedge error of rolling the replication portfolios until exercise.

    At each monitor date T_m up to and including the stopping date, the
    maturing portfolio pays G_m(z_m(T_m)) and V(T_m) = max(C_m, h_m) is needed
    either to buy the next portfolio or to pay the exercised swap.  The error
    sums G_m - V(T_m) over those dates, undiscounted unless ``discounted``.
    """
    model, spec = hedge.model, hedge.spec
    ps = simulate(model, monitor_grid(spec), n_paths, measure, seed=seed, dt=dt,
                  maturity=spec.maturity)
    stop, h = stopping_indices(hedge, ps)
    disc = discount_factors(model, ps) if discounted else None
    total = np.zeros(n_paths)
    last = np.where(stop < 0, hedge.M - 1, stop)
    for m, net in enumerate(hedge.networks):
        alive = last >= m
        if not np.any(alive):
            break
        Tm = spec.dates[m]
        x = ps.at(Tm)[alive]
        g = forward(net, asset_inputs(model, net.design, Tm, net.maturities, x))
        cont = continuation_values(model, hedge.networks, spec, m, x)
        inc = g - np.maximum(cont, h[alive, m])
        if discounted:
            inc = inc * disc[alive, ps.index_of(Tm)]
        total[alive] += inc
    return HedgeErrorReport(f"semistatic_{hedge.config.design.value}", total / spec.notional * _BP,
                            n_paths, seed, _moneyness(model, spec))


def write_reports_csv(reports, path):
    """Summary table: strategy, moneyness, mean, SD and 95th percentile (bp)."""
    fields = ["strategy", "moneyness", "n_paths", "seed", "mean", "sd", "p95"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in reports:
            w.writerow(r.row())


def write_errors_csv(report, path):
    """Per-path errors for histograms."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "error_bp"])
        for i, e in enumerate(report.errors):
            w.writerow([i, repr(float(e))])
