import math

import numpy as np
import pytest

from swaphedge import termstructure as ts
from swaphedge.bounds import (
    BoundReport,
    discount_factors,
    evaluation_paths,
    lower_bound,
    martingale_increments,
    martingale_path,
    run_bounds,
    stopping_indices,
    upper_bound,
)
from swaphedge.errors import ContractError
from swaphedge.instruments import exercise_value
from swaphedge.portfolio import asset_inputs, portfolio_value
from swaphedge.regression import forward
from swaphedge.simulation import Measure


@pytest.fixture(scope="module", params=["1f", "2f"])
def case(request, hedge_1f, hedge_2f):
    hedge = hedge_1f if request.param == "1f" else hedge_2f
    paths = evaluation_paths(hedge.model, hedge.spec, 40_000, seed=31)
    return hedge, paths


def test_martingale_increments_have_zero_mean(case):
    hedge, paths = case
    _, inc = martingale_increments(hedge, paths)
    se = inc.std(axis=0, ddof=1) / math.sqrt(inc.shape[0])
    assert np.all(np.abs(inc.mean(axis=0)) < 3 * se + 1e-12), (inc.mean(axis=0), se)


def test_martingale_increments_zero_mean_risk_neutral(hedge_1f):
    paths = evaluation_paths(hedge_1f.model, hedge_1f.spec, 40_000, seed=32, measure=Measure.RISK_NEUTRAL)
    _, inc = martingale_increments(hedge_1f, paths)
    se = inc.std(axis=0, ddof=1) / math.sqrt(inc.shape[0])
    assert np.all(np.abs(inc.mean(axis=0)) < 3 * se)


def _loop_oracle(hedge, paths, n):
    """Per-path scalar re-implementation of the exercise rule and dual bound."""
    model, spec = hedge.model, hedge.spec
    disc = discount_factors(model, paths)
    lows, ups = [], []
    for i in range(n):
        payoff, stopped = 0.0, False
        m0 = float(portfolio_value(model, 0.0, np.zeros(model.d), hedge.networks[0]))
        # M_{T_0} = M_0 + (G_0 D(T_0) - M_0)
        mart = 0.0
        best = -np.inf
        for m in range(hedge.M):
            Tm = spec.dates[m]
            k = paths.index_of(Tm)
            x = paths.paths[i:i + 1, k, :]
            D = disc[i, k]
            net = hedge.networks[m]
            if m > 0:
                kp = paths.index_of(spec.dates[m - 1])
                xp = paths.paths[i:i + 1, kp, :]
                mart -= float(portfolio_value(model, spec.dates[m - 1], xp, net)[0]) * disc[i, kp]
            mart += float(forward(net, asset_inputs(model, net.design, Tm, net.maturities, x))[0]) * D
            h = float(exercise_value(model, Tm, x, spec, m)[0])
            c = float(portfolio_value(model, Tm, x, hedge.networks[m + 1])[0]) if m + 1 < hedge.M else 0.0
            if not stopped and h > 0 and c <= h:
                payoff, stopped = h * D, True
            best = max(best, max(h, 0.0) * D - mart)
        lows.append(payoff)
        ups.append(m0 + best)
    return np.array(lows), np.array(ups)


def test_bounds_match_loop_oracle(case):
    hedge, paths = case
    n = 60
    lows, ups = _loop_oracle(hedge, paths, n)
    stop, h = stopping_indices(hedge, paths)
    disc = discount_factors(hedge.model, paths)
    vec_low = np.zeros(n)
    for i in range(n):
        if stop[i] >= 0:
            vec_low[i] = h[i, stop[i]] * disc[i, paths.index_of(hedge.spec.dates[stop[i]])]
    np.testing.assert_allclose(vec_low, lows, rtol=1e-12, atol=1e-12)
    m0, mart = martingale_path(hedge, paths)
    gap = np.column_stack([
        np.maximum(h[:n, m], 0) * disc[:n, paths.index_of(hedge.spec.dates[m])] - mart[:n, m]
        for m in range(hedge.M)
    ])
    np.testing.assert_allclose(m0 + gap.max(axis=1), ups, rtol=1e-10, atol=1e-10)


def test_stopping_rule_semantics(case):
    hedge, paths = case
    stop, h = stopping_indices(hedge, paths)
    hit = stop >= 0
    rows = np.flatnonzero(hit)
    assert np.all(h[rows, stop[rows]] > 0)
    # a path that never stops was out of the money at the final date
    assert np.all(h[~hit, -1] <= 0)
    assert set(np.unique(stop)) <= set(range(-1, hedge.M))


def test_bound_ordering_and_consistency(case):
    hedge, paths = case
    lo = lower_bound(hedge, pathset=paths)
    up = upper_bound(hedge, pathset=paths)
    # the upper bound is pathwise >= the lower bound payoff plus the martingale noise;
    # on average it must not sit materially below
    assert up.value > lo.value - 4 * lo.se
    assert abs(hedge.direct_estimate - up.value) < 0.05
    assert up.se < lo.se


def test_dual_bound_with_zero_martingale_is_crude(hedge_1f):
    # with M = 0 the bound is E[max_m h_m^+ D], far above any exercise value
    paths = evaluation_paths(hedge_1f.model, hedge_1f.spec, 20_000, seed=33)
    disc = discount_factors(hedge_1f.model, paths)
    _, h = stopping_indices(hedge_1f, paths)
    cols = [paths.index_of(t) for t in hedge_1f.spec.monitor_dates]
    crude = np.mean(np.max(np.maximum(h, 0) * disc[:, cols], axis=1))
    assert crude > upper_bound(hedge_1f, pathset=paths).value


def test_run_bounds_protocol(hedge_1f):
    rep = run_bounds(hedge_1f, n_paths=5000, n_runs=3, seed=100)
    assert isinstance(rep, BoundReport)
    assert rep.n_runs == 3 and len(rep.lower_runs) == 3
    vals = [e.value for e in rep.lower_runs]
    assert rep.lower.value == pytest.approx(np.mean(vals))
    assert rep.lower.se == pytest.approx(np.std(vals, ddof=1) / math.sqrt(3))
    assert rep.gap == pytest.approx(rep.upper.value - rep.lower.value)
    # run r reuses seed + r
    again = lower_bound(hedge_1f, n_paths=5000, seed=101)
    assert again.value == rep.lower_runs[1].value
    single = run_bounds(hedge_1f, n_paths=5000, n_runs=1, seed=100)
    assert single.lower == rep.lower_runs[0]
    with pytest.raises(ContractError):
        run_bounds(hedge_1f, n_runs=0)


def test_discount_factors_forward_measure(hedge_1f):
    paths = evaluation_paths(hedge_1f.model, hedge_1f.spec, 100, seed=1)
    D = discount_factors(hedge_1f.model, paths)
    np.testing.assert_allclose(D[:, 0], 1.0, rtol=1e-14)
    T = hedge_1f.spec.dates[2]
    k = paths.index_of(T)
    expected = math.exp(-0.03 * 6.0) / ts.bond_price(hedge_1f.model, T, 6.0, paths.at(T))
    np.testing.assert_allclose(D[:, k], expected, rtol=1e-14)
