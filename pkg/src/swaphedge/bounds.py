"""Lower and upper price bounds from a fitted hedge, without nested simulation.

Both bounds are evaluated on fresh paths.  Values are carried in time-zero
units: a cash amount X at T_m contributes X * D(T_m) where D is P(0,T_M)/P(T_m,T_M)
under the T_M-forward measure and 1/B(T_m) under the risk-neutral measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import termstructure as ts
from .engine import continuation_values, monitor_grid
from .errors import ContractError
from .instruments import exercise_value
from .portfolio import asset_inputs, portfolio_value
from .regression import forward
from .simulation import WEEKLY, Measure, simulate

__all__ = [
    "Estimate",
    "BoundReport",
    "evaluation_paths",
    "discount_factors",
    "stopping_indices",
    "lower_bound",
    "upper_bound",
    "martingale_path",
    "martingale_increments",
    "run_bounds",
    "BOUND_SEED_OFFSET",
]

# keeps default evaluation seeds away from the training seeds
BOUND_SEED_OFFSET = 1_000_003


@dataclass
class Estimate:
    value: float
    se: float

    def __iter__(self):
        return iter((self.value, self.se))


@dataclass
class BoundReport:
    """Bounds aggregated over independent runs.

    With several runs the estimate is the mean of the run estimates and the
    SE is their sample deviation over sqrt(n_runs); a single run reports its
    own Monte Carlo SE.
    """

    lower: Estimate
    upper: Estimate
    n_paths: int
    n_runs: int
    measure: Measure
    seed: int
    lower_runs: list = field(default_factory=list)
    upper_runs: list = field(default_factory=list)

    @property
    def gap(self):
        return self.upper.value - self.lower.value


def evaluation_paths(model, spec, n_paths, seed, measure=Measure.FORWARD, dt=WEEKLY):
    """Fresh paths on {0, T_0, ..., T_{M-1}} for bound estimation."""
    return simulate(model, monitor_grid(spec), n_paths, measure, seed=seed, dt=dt,
                    maturity=spec.maturity)


def discount_factors(model, pathset):
    """Time-zero value of one unit of cash at each grid time, shape (n, t)."""
    if pathset.measure is Measure.FORWARD:
        return float(ts.initial_discount(model, pathset.maturity)) / pathset.numeraire
    return 1.0 / pathset.numeraire


def _state(pathset, t):
    return pathset.at(t)


def stopping_indices(hedge, pathset):
    """Index of the first monitor date with h_m > 0 and C_m <= h_m (-1: never).

    Also returns the exercise values h_m for every path and date, shape (n, M).
    """
    model, spec = hedge.model, hedge.spec
    n = pathset.n_paths
    M = hedge.M
    stop = np.full(n, -1, dtype=np.int64)
    h_all = np.empty((n, M))
    for m in range(M):
        x = _state(pathset, spec.dates[m])
        h = exercise_value(model, spec.dates[m], x, spec, m)
        h_all[:, m] = h
        live = stop < 0
        if not np.any(live):
            continue
        c = continuation_values(model, hedge.networks, spec, m, x[live])
        ex = (h[live] > 0) & (c <= h[live])
        idx = np.flatnonzero(live)[ex]
        stop[idx] = m
    return stop, h_all


def _mean_se(samples):
    samples = np.asarray(samples, dtype=float)
    se = float(samples.std(ddof=1) / math.sqrt(samples.size)) if samples.size > 1 else math.nan
    return Estimate(float(math.fsum(samples) / samples.size), se)


def lower_bound(hedge, n_paths=200_000, seed=None, measure=Measure.FORWARD, pathset=None):
    """Value of the network-implied exercise rule on fresh paths: (estimate, SE).

    Paths that are never exercised pay nothing.
    """
    spec = hedge.spec
    if pathset is None:
        seed = hedge.seed + BOUND_SEED_OFFSET if seed is None else seed
        pathset = evaluation_paths(hedge.model, spec, n_paths, seed, measure)
    disc = discount_factors(hedge.model, pathset)
    stop, h = stopping_indices(hedge, pathset)
    payoff = np.zeros(pathset.n_paths)
    hit = stop >= 0
    cols = np.array([pathset.index_of(spec.dates[m]) for m in range(hedge.M)])
    rows = np.flatnonzero(hit)
    payoff[rows] = h[rows, stop[rows]] * disc[rows, cols[stop[rows]]]
    return _mean_se(payoff)


def martingale_increments(hedge, pathset):
    """Discounted martingale increments, shape (n, M).

    Column 0 is G_0(z_0(T_0)) D(T_0) - M_0 with M_0 the closed-form time-zero
    value of G_0; column j >= 1 is G_j(z_j(T_j)) D(T_j) minus its closed-form
    conditional expectation given F_{T_{j-1}}, i.e. V_j(T_{j-1}) D(T_{j-1}).
    """
    model, spec = hedge.model, hedge.spec
    disc = discount_factors(model, pathset)
    n, M = pathset.n_paths, hedge.M
    inc = np.empty((n, M))
    m0 = float(portfolio_value(model, 0.0, np.zeros(model.d), hedge.networks[0]))
    for j, net in enumerate(hedge.networks):
        Tj = spec.dates[j]
        x = _state(pathset, Tj)
        g = forward(net, asset_inputs(model, net.design, Tj, net.maturities, x))
        realized = g * disc[:, pathset.index_of(Tj)]
        if j == 0:
            expected = m0 if Tj > 0 else realized
        else:
            Tp = spec.dates[j - 1]
            expected = portfolio_value(model, Tp, _state(pathset, Tp), net) * disc[:, pathset.index_of(Tp)]
        inc[:, j] = realized - expected
    return m0, inc


def martingale_path(hedge, pathset):
    """M_0 and M_{T_m} per path, shape (n, M)."""
    m0, inc = martingale_increments(hedge, pathset)
    return m0, m0 + np.cumsum(inc, axis=1)


def upper_bound(hedge, n_paths=200_000, seed=None, measure=Measure.FORWARD, pathset=None):
    """Dual upper bound M_0 + E[max_m (h_m^+ D(T_m) - M_{T_m})]: (estimate, SE)."""
    spec = hedge.spec
    if pathset is None:
        seed = hedge.seed + BOUND_SEED_OFFSET if seed is None else seed
        pathset = evaluation_paths(hedge.model, spec, n_paths, seed, measure)
    disc = discount_factors(hedge.model, pathset)
    m0, mart = martingale_path(hedge, pathset)
    gap = np.empty_like(mart)
    for m in range(hedge.M):
        Tm = spec.dates[m]
        h = exercise_value(hedge.model, Tm, _state(pathset, Tm), spec, m)
        gap[:, m] = np.maximum(h, 0.0) * disc[:, pathset.index_of(Tm)] - mart[:, m]
    return _mean_se(m0 + gap.max(axis=1))


def run_bounds(hedge, n_paths=200_000, n_runs=10, seed=None, measure=Measure.FORWARD):
    """Lower and upper bounds over ``n_runs`` independent path sets.

    Run r uses seed ``seed + r``; both bounds of a run share its paths.
    """
    if n_runs < 1:
        raise ContractError("need at least one run")
    measure = Measure(measure)
    seed = hedge.seed + BOUND_SEED_OFFSET if seed is None else int(seed)
    lows, ups = [], []
    for r in range(n_runs):
        paths = evaluation_paths(hedge.model, hedge.spec, n_paths, seed + r, measure)
        lows.append(lower_bound(hedge, pathset=paths))
        ups.append(upper_bound(hedge, pathset=paths))
    if n_runs == 1:
        lo, up = lows[0], ups[0]
    else:
        lo = _mean_se([e.value for e in lows])
        up = _mean_se([e.value for e in ups])
    return BoundReport(lo, up, n_paths, n_runs, measure, seed, lows, ups)
