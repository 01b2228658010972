import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swaphedge import termstructure as ts
from swaphedge.errors import ContractError, DomainError
from swaphedge.portfolio import (
    NodeKind,
    PortfolioNode,
    asset_inputs,
    input_maturities,
    node_value,
    portfolio_nodes,
    portfolio_rows,
    portfolio_value,
    write_portfolio_csv,
)
from swaphedge.regression import Design, HedgeNetwork, forward
from swaphedge.simulation import Measure, simulate


def _node(kind, Tm, mats, w, b, quantity=1.0, k=0):
    return PortfolioNode(kind, Tm, tuple(mats), np.asarray(w, dtype=float), b, quantity, k)


@pytest.fixture(scope="module")
def rn_paths_2f():
    # risk-neutral Euler paths with the trapezoidal bank account: an oracle
    # that shares no pricing formula with the closed forms
    model = ts.GaussianModel.g2pp(0.07, 0.08, 0.015, 0.008, -0.6, 0.03)
    return model, simulate(model, [0.0, 2.0], 200_000, Measure.RISK_NEUTRAL, seed=77)


def _mc(model, ps, Tm, payoff):
    x = ps.at(Tm)
    v = payoff(x) / ps.numeraire[:, ps.index_of(Tm)]
    return v.mean(), v.std(ddof=1) / math.sqrt(v.size)


@pytest.mark.parametrize(
    "kind,w,b,k",
    [
        (NodeKind.CALL, [1.0, 0.0], -0.90, 0),
        (NodeKind.CALL, [0.0, 2.0], -1.70, 1),
        (NodeKind.PUT, [-1.0, 0.0], 0.93, 0),
        (NodeKind.PUT, [0.0, -1.0], 0.84, 1),
        (NodeKind.FORWARD, [1.0, 0.0], 0.10, 0),
    ],
)
def test_single_bond_nodes_match_monte_carlo(rn_paths_2f, kind, w, b, k):
    model, ps = rn_paths_2f
    Tm, mats = 2.0, (3.5, 6.0)
    node = _node(kind, Tm, mats, w, b, quantity=3.0, k=k)

    def payoff(x):
        p = ts.bond_price(model, Tm, mats[k], x)
        return 3.0 * np.maximum(w[k] * p + b, 0.0)

    est, se = _mc(model, ps, Tm, payoff)
    value = float(node_value(model, 0.0, np.zeros(2), node))
    assert abs(value - est) < 3 * se + 1e-12, (value, est, se)


@pytest.mark.parametrize("w,b", [([0.6, 0.4], 0.05), ([1.0, -0.5], 0.03), ([-0.3, 0.8], 0.02)])
def test_log_basket_node_matches_monte_carlo(rn_paths_2f, w, b):
    model, ps = rn_paths_2f
    Tm, mats = 2.0, (3.5, 6.0)
    node = _node(NodeKind.LOG_BASKET, Tm, mats, w, b, quantity=-2.0)

    def payoff(x):
        logp = np.stack([ts.log_bond_price(model, Tm, S, x) for S in mats], axis=-1)
        return -2.0 * np.maximum(logp @ np.asarray(w) + b, 0.0)

    est, se = _mc(model, ps, Tm, payoff)
    value = float(node_value(model, 0.0, np.zeros(2), node))
    assert abs(value - est) < 3 * se, (value, est, se)


def test_conditional_value_matches_exact_sampling(g2, rng):
    # from a non-zero state at t > 0: sample x(Tm) exactly under the Tm-forward measure
    t, Tm, S = 0.5, 2.0, 5.0
    x0 = np.array([0.006, -0.003])
    node = _node(NodeKind.CALL, Tm, (S, 7.0), [1.0, 0.0], -0.905)
    mean, cov = ts.forward_measure_moments(g2, t, Tm, x0)
    xs = rng.multivariate_normal(mean, cov, size=200_000)
    pay = np.maximum(ts.bond_price(g2, Tm, S, xs) - 0.905, 0.0) * ts.bond_price(g2, t, Tm, x0)
    est, se = pay.mean(), pay.std(ddof=1) / math.sqrt(pay.size)
    assert abs(float(node_value(g2, t, x0, node)) - est) < 3 * se


def test_put_call_parity(hw):
    Tm, S = 1.0, 6.0
    x = np.array([[0.01], [-0.02], [0.0]])
    call = _node(NodeKind.CALL, Tm, (S,), [1.0], -0.85)
    put = _node(NodeKind.PUT, Tm, (S,), [-1.0], 0.85)
    fwd = _node(NodeKind.FORWARD, Tm, (S,), [1.0], -0.85)
    # max(P-K,0) - max(K-P,0) = P - K
    lhs = node_value(hw, 0.3, x, call) - node_value(hw, 0.3, x, put)
    np.testing.assert_allclose(lhs, node_value(hw, 0.3, x, fwd), atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(x=st.floats(-0.05, 0.05), bump=st.floats(1e-4, 1e-2), K=st.floats(0.7, 1.0))
def test_call_value_increases_with_underlying_bond(x, bump, K):
    model = ts.GaussianModel.hull_white(0.01, 0.01, 0.03)
    node = _node(NodeKind.CALL, 1.0, (6.0,), [1.0], -K)
    lo = float(node_value(model, 0.0, np.array([x]), node))
    # lower factor means higher bond prices (B > 0)
    hi = float(node_value(model, 0.0, np.array([x - bump]), node))
    assert hi >= lo


def _network(design, d, q, Tm, TM, seed):
    r = np.random.default_rng(seed)
    mats = input_maturities(design, d, Tm, TM)
    mask = np.ones((q, d))
    if design is Design.LOCALLY_CONNECTED:
        mask = np.zeros((q, d))
        mask[np.arange(q), np.arange(q) * d // q] = 1.0
    return HedgeNetwork(design, r.normal(size=(q, d)) * mask, r.normal(size=q), r.normal(size=q), mask,
                        r.normal(0.8, 0.05, d), r.uniform(0.01, 0.1, d), float(r.uniform(1, 5)),
                        expiry=Tm, maturities=mats)


@pytest.mark.parametrize(
    "design,which",
    [(Design.ONE_FACTOR, "hw"), (Design.LOCALLY_CONNECTED, "g2"), (Design.FULLY_CONNECTED_LOG, "g2")],
)
def test_portfolio_is_sum_of_nodes(design, which, hw, g2, rng):
    model = hw if which == "hw" else g2
    d = 1 if design is Design.ONE_FACTOR else 2
    net = _network(design, d, 12, 2.0, 6.0, seed=1)
    if design.log_inputs:
        net.mu_z = np.log(net.mu_z)
    x = rng.normal(scale=0.01, size=(5, model.d))
    total = sum(node_value(model, 0.5, x, node) for node in portfolio_nodes(net))
    np.testing.assert_allclose(portfolio_value(model, 0.5, x, net), total, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize(
    "design,which",
    [(Design.ONE_FACTOR, "hw"), (Design.LOCALLY_CONNECTED, "g2"), (Design.FULLY_CONNECTED_LOG, "g2")],
)
def test_terminal_consistency(design, which, hw, g2, rng):
    # at expiry the portfolio is worth the network output, and just before
    # expiry the option values converge to it
    model = hw if which == "hw" else g2
    d = 1 if design is Design.ONE_FACTOR else 2
    net = _network(design, d, 16, 3.0, 8.0, seed=2)
    if design.log_inputs:
        net.mu_z = np.log(net.mu_z)
    x = rng.normal(scale=0.01, size=(50, model.d))
    z = asset_inputs(model, design, 3.0, net.maturities, x)
    notional = 100.0
    np.testing.assert_allclose(portfolio_value(model, 3.0, x, net), forward(net, z), rtol=0,
                               atol=1e-9 * notional)
    near = portfolio_value(model, 3.0 - 1e-9, x, net)
    np.testing.assert_allclose(near, forward(net, z), rtol=0, atol=1e-5)


def test_large_batches_are_chunked_consistently(hw, rng):
    net = _network(Design.ONE_FACTOR, 1, 8, 1.0, 6.0, seed=3)
    x = rng.normal(scale=0.01, size=(40_000, 1))
    full = portfolio_value(hw, 0.0, x, net)
    np.testing.assert_array_equal(full[:10], portfolio_value(hw, 0.0, x[:10], net))


def test_node_classification():
    net = HedgeNetwork(Design.ONE_FACTOR, [[1.0], [1.0], [-1.0], [-1.0], [0.0]], [-0.5, 0.5, 0.5, -0.5, 1.0],
                       np.ones(5), np.ones((5, 1)), [0.0], [1.0], 1.0, expiry=1.0, maturities=[6.0])
    kinds = [n.kind for n in portfolio_nodes(net)]
    assert kinds == [NodeKind.CALL, NodeKind.FORWARD, NodeKind.PUT, NodeKind.WORTHLESS, NodeKind.FORWARD]
    call = portfolio_nodes(net)[0]
    assert call.strike == pytest.approx(0.5) and call.units == pytest.approx(1.0)
    put = portfolio_nodes(net)[2]
    assert put.strike == pytest.approx(0.5) and put.units == pytest.approx(1.0)


def test_errors(hw):
    net = _network(Design.ONE_FACTOR, 1, 4, 1.0, 6.0, seed=0)
    with pytest.raises(DomainError):
        portfolio_value(hw, 1.5, np.zeros(1), net)
    net.expiry = math.nan
    with pytest.raises(ContractError):
        portfolio_value(hw, 0.0, np.zeros(1), net)
    log_node = _node(NodeKind.LOG_BASKET, 1.0, (6.0,), [1.0], 0.1)
    from swaphedge.portfolio import node_value_local

    with pytest.raises(ContractError):
        node_value_local(hw, 0.0, np.zeros(1), log_node)


def test_input_maturities():
    np.testing.assert_allclose(input_maturities(Design.ONE_FACTOR, 1, 2.0, 6.0), [6.0])
    np.testing.assert_allclose(input_maturities(Design.LOCALLY_CONNECTED, 2, 2.0, 6.0), [4.0, 6.0])


def test_portfolio_export(tmp_path, hw):
    net = _network(Design.ONE_FACTOR, 1, 4, 1.0, 6.0, seed=4)
    rows = portfolio_rows(hw, net)
    assert len(rows) == 4
    assert sum(r["value"] for r in rows) == pytest.approx(float(portfolio_value(hw, 0.0, np.zeros(1), net)))
    path = tmp_path / "p.csv"
    write_portfolio_csv(hw, [net], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "expiry,node,kind,underlying_maturity,quantity,strike,value"
    assert len(lines) == 5
