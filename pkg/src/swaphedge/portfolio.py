"""Closed-form valuation of a hedge network read as an options portfolio.

A network trained at monitor date T_m pays G(z(T_m)) at T_m.  Its value at any
t <= T_m is the sum over hidden nodes of the value of each node's payoff:

* bond-input designs: forwards, calls and puts on a single discount bond,
  priced with Black's formula for Gaussian bond options;
* log-bond design: an option on a weighted sum of log bond prices, which is
  Gaussian under the T_m-forward measure.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import termstructure as ts
from .errors import ContractError, DomainError
from .regression import Design, denormalized_portfolio_weights, forward

__all__ = [
    "NodeKind",
    "PortfolioNode",
    "input_maturities",
    "asset_inputs",
    "portfolio_nodes",
    "node_value_local",
    "node_value_log",
    "node_value",
    "portfolio_value",
    "portfolio_rows",
    "write_portfolio_csv",
]

_CHUNK = 16384
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class NodeKind(str, enum.Enum):
    FORWARD = "forward"
    CALL = "call"
    PUT = "put"
    WORTHLESS = "worthless"
    LOG_BASKET = "log_basket"


@dataclass(frozen=True)
class PortfolioNode:
    """One hidden node in raw-asset coordinates, scaled by its output weight.

    The node pays ``quantity * max(weight . z + bias, 0)`` at ``expiry`` where
    z are the input bonds (or their logs for ``LOG_BASKET``).
    """

    kind: NodeKind
    expiry: float
    maturities: tuple
    weight: np.ndarray
    bias: float
    quantity: float
    input_index: int = 0

    @property
    def units(self):
        """Signed number of options (bond units for a forward)."""
        w = float(self.weight[self.input_index])
        if self.kind is NodeKind.PUT:
            return -self.quantity * w
        return self.quantity * w

    @property
    def strike(self):
        """Option strike in bond-price units (NaN for forwards / worthless nodes)."""
        w = float(self.weight[self.input_index])
        if self.kind is NodeKind.CALL:
            return -self.bias / w
        if self.kind is NodeKind.PUT:
            return self.bias / (-w)
        if self.kind is NodeKind.LOG_BASKET:
            return -self.bias
        return float("nan")


def input_maturities(design, d, Tm, TM):
    """Maturities of the regression bonds at monitor date ``Tm``.

    One factor: the bond maturing at T_M.  d factors: T_m + j (T_M - T_m) / d,
    j = 1..d, so the last bond always matures at T_M.
    """
    design = Design(design)
    if design is Design.ONE_FACTOR:
        return np.array([TM], dtype=float)
    return Tm + (TM - Tm) * np.arange(1, d + 1) / d


def asset_inputs(model, design, Tm, maturities, x):
    """Network inputs z(T_m) for states x (bond prices, or their logs)."""
    design = Design(design)
    logp = np.stack([ts.log_bond_price(model, Tm, S, x) for S in maturities], axis=-1)
    return logp if design.log_inputs else np.exp(logp)


def _classify(w, b):
    if w > 0:
        return NodeKind.FORWARD if b >= 0 else NodeKind.CALL
    if w < 0:
        return NodeKind.PUT if b > 0 else NodeKind.WORTHLESS
    return NodeKind.FORWARD if b > 0 else NodeKind.WORTHLESS


def portfolio_nodes(net):
    """Break a network into priced products using its denormalized weights."""
    w1o, bo, w2o = denormalized_portfolio_weights(net)
    mats = tuple(float(m) for m in net.maturities)
    nodes = []
    for j in range(net.q):
        if net.design.log_inputs:
            kind = NodeKind.LOG_BASKET
            k = 0
        else:
            k = int(np.argmax(net.mask[j])) if net.d_in > 1 else 0
            kind = _classify(w1o[j, k], bo[j])
        nodes.append(PortfolioNode(kind, float(net.expiry), mats, w1o[j].copy(), float(bo[j]), float(w2o[j]), k))
    return nodes


def _check_t(t, Tm):
    if t > Tm + 1e-12:
        raise DomainError(f"valuation time {t} is after the portfolio expiry {Tm}")


def _black_terms(model, t, Tm, S, p_s, p_m, w, b):
    """Call / put values of max(w P(Tm,S) + b, 0) with unit quantity."""
    var = ts.bond_option_variance(model, t, Tm, S)
    if var <= 0:
        raise DomainError("degenerate bond option volatility before expiry")
    sd = np.sqrt(var)
    d_plus = (np.log(-(w * p_s) / (b * p_m)) + 0.5 * var) / sd
    d_minus = d_plus - sd
    return d_plus, d_minus


def node_value_local(model, t, x, node, Tm=None):
    """Value at t of a single-bond node (forward, call, put or worthless)."""
    Tm = node.expiry if Tm is None else Tm
    _check_t(t, Tm)
    if node.kind is NodeKind.LOG_BASKET:
        raise ContractError("log-basket nodes are priced by node_value_log")
    x = np.asarray(x, dtype=float)
    k = node.input_index
    S = node.maturities[k]
    w, b = float(node.weight[k]), node.bias
    p_s = ts.bond_price(model, t, S, x)
    if Tm - t <= 0:
        return node.quantity * np.maximum(w * p_s + b, 0.0)
    p_m = ts.bond_price(model, t, Tm, x)
    if node.kind is NodeKind.WORTHLESS:
        return np.zeros_like(p_s)
    if node.kind is NodeKind.FORWARD:
        return node.quantity * (w * p_s + b * p_m)
    d_plus, d_minus = _black_terms(model, t, Tm, S, p_s, p_m, w, b)
    if node.kind is NodeKind.CALL:
        v = w * p_s * ndtr(d_plus) + b * p_m * ndtr(d_minus)
    else:
        v = b * p_m * ndtr(-d_minus) + w * p_s * ndtr(-d_plus)
    return node.quantity * v


def _log_moments(model, t, Tm, maturities, x):
    """A-vector, B-matrix of the input log bonds and the Tm-forward law of x(Tm)."""
    coeffs = [ts.bond_coeffs(model, Tm, S) for S in maturities]
    A = np.array([c.A for c in coeffs])
    B = np.stack([c.B for c in coeffs])
    mean, cov = ts.forward_measure_moments(model, t, Tm, x)
    return A, B, mean, cov


def _gaussian_call(mu, sd, strike):
    """E[max(Y - strike, 0)] for Y ~ N(mu, sd^2); intrinsic when sd == 0."""
    mu, sd = np.broadcast_arrays(np.asarray(mu, dtype=float), np.asarray(sd, dtype=float))
    out = np.maximum(mu - strike, 0.0)
    pos = sd > 0
    if np.any(pos):
        s = sd[pos]
        m = mu[pos] - (strike[pos] if np.ndim(strike) else strike)
        dd = m / s
        out = np.array(out, dtype=float)
        out[pos] = s * _INV_SQRT_2PI * np.exp(-0.5 * dd * dd) + m * ndtr(dd)
    return out


def node_value_log(model, t, x, node, Tm=None):
    """Value at t of max(w . log P(Tm) + b, 0) paid at Tm.

    P(t,Tm) (sd_Y phi(d) + (mu_Y + b) Phi(d)) with d = (mu_Y + b) / sd_Y.
    """
    Tm = node.expiry if Tm is None else Tm
    _check_t(t, Tm)
    x = np.asarray(x, dtype=float)
    A, B, mean, cov = _log_moments(model, t, Tm, node.maturities, x)
    wB = node.weight @ B
    mu_y = node.weight @ A - mean @ wB
    sd_y = np.sqrt(max(float(wB @ cov @ wB), 0.0))
    p_m = ts.bond_price(model, t, Tm, x)
    return node.quantity * p_m * _gaussian_call(mu_y, np.full_like(mu_y, sd_y), -node.bias)


def node_value(model, t, x, node, Tm=None):
    if node.kind is NodeKind.LOG_BASKET:
        return node_value_log(model, t, x, node, Tm)
    return node_value_local(model, t, x, node, Tm)


def _local_portfolio(model, t, x, net):
    Tm = net.expiry
    w1o, bo, w2o = denormalized_portfolio_weights(net)
    k = np.argmax(net.mask, axis=1) if net.d_in > 1 else np.zeros(net.q, dtype=int)
    w = w1o[np.arange(net.q), k]
    p_m = ts.bond_price(model, t, Tm, x)
    p_s = np.stack([ts.bond_price(model, t, S, x) for S in net.maturities], axis=-1)
    kinds = np.array([_classify(wj, bj).value for wj, bj in zip(w, bo)])
    total = np.zeros(p_m.shape)

    fwd = kinds == NodeKind.FORWARD.value
    if np.any(fwd):
        units = np.bincount(k[fwd], weights=w2o[fwd] * w[fwd], minlength=net.d_in)
        total += p_s @ units + np.sum(w2o[fwd] * bo[fwd]) * p_m
    for kind in (NodeKind.CALL, NodeKind.PUT):
        sel = kinds == kind.value
        if not np.any(sel):
            continue
        var = np.array([ts.bond_option_variance(model, t, Tm, net.maturities[i]) for i in k[sel]])
        if np.any(var <= 0):
            raise DomainError("degenerate bond option volatility before expiry")
        sd = np.sqrt(var)
        ps = p_s[..., k[sel]]
        pm = p_m[..., None]
        ws, bs = w[sel], bo[sel]
        d_plus = (np.log(-(ws * ps) / (bs * pm)) + 0.5 * var) / sd
        d_minus = d_plus - sd
        if kind is NodeKind.CALL:
            v = ws * ps * ndtr(d_plus) + bs * pm * ndtr(d_minus)
        else:
            v = bs * pm * ndtr(-d_minus) + ws * ps * ndtr(-d_plus)
        total += v @ w2o[sel]
    return total


def _log_portfolio(model, t, x, net):
    Tm = net.expiry
    w1o, bo, w2o = denormalized_portfolio_weights(net)
    A, B, mean, cov = _log_moments(model, t, Tm, net.maturities, x)
    WB = w1o @ B  # (q, d)
    mu_y = w1o @ A - mean @ WB.T
    sd_y = np.sqrt(np.clip(np.einsum("qi,ij,qj->q", WB, cov, WB), 0.0, None))
    p_m = ts.bond_price(model, t, Tm, x)
    strike = -bo
    vals = _gaussian_call(mu_y, np.broadcast_to(sd_y, mu_y.shape), np.broadcast_to(strike, mu_y.shape))
    return p_m * (vals @ w2o)


def portfolio_value(model, t, x, net):
    """Value at time t of the portfolio paying G(z(T_m)) at T_m = ``net.expiry``.

    ``x`` is a single state (d,) or a batch (n, d).  At t == T_m this is the
    network output itself.
    """
    Tm = net.expiry
    if not np.isfinite(Tm):
        raise ContractError("network has no expiry attached")
    _check_t(t, Tm)
    x = np.asarray(x, dtype=float)
    if Tm - t <= 0:
        return forward(net, asset_inputs(model, net.design, Tm, net.maturities, x))
    price = _log_portfolio if net.design.log_inputs else _local_portfolio
    if x.ndim == 1 or x.shape[0] <= _CHUNK:
        return price(model, t, x, net)
    return np.concatenate([price(model, t, x[i:i + _CHUNK], net) for i in range(0, x.shape[0], _CHUNK)])


def portfolio_rows(model, net, t=0.0, x=None):
    """One row per hidden node: kind, underlying, units, strike, value at t."""
    x = np.zeros(model.d) if x is None else np.asarray(x, dtype=float)
    rows = []
    for j, node in enumerate(portfolio_nodes(net)):
        if node.kind is NodeKind.LOG_BASKET:
            underlying = ";".join(f"{m:g}" for m in node.maturities)
            units = node.quantity
        else:
            underlying = f"{node.maturities[node.input_index]:g}"
            units = node.units
        rows.append({
            "expiry": node.expiry,
            "node": j,
            "kind": node.kind.value,
            "underlying_maturity": underlying,
            "quantity": units,
            "strike": node.strike,
            "value": float(node_value(model, t, x, node)),
        })
    return rows


def write_portfolio_csv(model, nets, path, t=0.0):
    """Export every node of every network, priced at time ``t`` with x = 0."""
    fields = ["expiry", "node", "kind", "underlying_maturity", "quantity", "strike", "value"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for net in nets:
            if t > net.expiry:
                continue
            writer.writerows(portfolio_rows(model, net, t))
