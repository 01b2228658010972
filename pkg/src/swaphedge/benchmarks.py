"""Reference prices and hedge ratios.

* Jamshidian's decomposition for European swaptions under one-factor models;
* plain Monte Carlo for European swaptions;
* Longstaff-Schwartz regression for Bermudan swaptions (biased low);
* the analytic Hull-White swaption delta.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from . import termstructure as ts
from .engine import monitor_grid
from .errors import ContractError, NumericError
from .instruments import coupon_schedule, exercise_value, forward_swap_value
from .simulation import WEEKLY, Measure, simulate

__all__ = [
    "Basis",
    "LSMResult",
    "zcb_option",
    "jamshidian_critical_state",
    "jamshidian_price",
    "mc_european_price",
    "lsm_price",
    "basis_matrix",
    "henrard_kappa",
    "hw_swaption_delta",
]

log = logging.getLogger(__name__)

_Z95 = 1.959963984540054


class Basis(str, enum.Enum):
    """Polynomial regression basis in the factor state."""

    LINEAR = "linear"
    QUADRATIC = "quadratic"


@dataclass
class LSMResult:
    estimate: float
    se: float
    ci95: tuple
    runs: list = field(default_factory=list)


def _require_one_factor(model):
    if model.d != 1:
        raise ContractError("this benchmark is only available for one-factor models")


def zcb_option(model, t, x, T, S, strike, call=True):
    """Option expiring at T on the bond maturing at S, valued at t (unit notional)."""
    x = np.asarray(x, dtype=float)
    p_t = ts.bond_price(model, t, T, x)
    p_s = ts.bond_price(model, t, S, x)
    var = ts.bond_option_variance(model, t, T, S)
    if var <= 0:
        fwd = p_s - strike * p_t
        return np.maximum(fwd if call else -fwd, 0.0)
    sd = math.sqrt(var)
    d1 = (np.log(p_s / (strike * p_t)) + 0.5 * var) / sd
    d2 = d1 - sd
    if call:
        return p_s * ndtr(d1) - strike * p_t * ndtr(d2)
    return strike * p_t * ndtr(-d2) - p_s * ndtr(-d1)


def _bracket_root(f, scale):
    lo, hi = -scale, scale
    for _ in range(2):
        flo, fhi = f(lo), f(hi)
        if np.sign(flo) != np.sign(fhi):
            return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        lo, hi = 10 * lo, 10 * hi
    raise NumericError("root not bracketed")


def jamshidian_critical_state(model, spec):
    """Factor level x* at T_0 at which the swap's coupon bond is worth par."""
    _require_one_factor(model)
    T0 = spec.dates[0]
    dates, c = coupon_schedule(spec, 0)
    coeffs = [ts.bond_coeffs(model, T0, T) for T in dates]
    A = np.array([k.A for k in coeffs])
    B = np.array([k.B[0] for k in coeffs])

    def f(x):
        return float(np.sum(c * np.exp(A - B * x)) - 1.0)

    scale = max(10.0 * model.vol[0] * math.sqrt(max(T0, 1e-8)), 0.1)
    return _bracket_root(f, scale)


def jamshidian_price(model, spec, t=0.0, x=None):
    """European swaption value at (t, x) as a portfolio of bond options.

    A receiver swaption is a call with strike 1 on the coupon bond paying
    c_j = K dT_j (+1 at T_M); a payer swaption is the matching put.
    """
    _require_one_factor(model)
    x = np.zeros(1) if x is None else np.asarray(x, dtype=float)
    T0 = spec.dates[0]
    if t > T0:
        raise ContractError("valuation time after option expiry")
    dates, c = coupon_schedule(spec, 0)
    if t == T0:
        return np.maximum(forward_swap_value(model, t, x, spec, 0), 0.0)
    xs = jamshidian_critical_state(model, spec)
    strikes = [float(ts.bond_price(model, T0, T, np.array([xs]))) for T in dates]
    total = 0.0
    for cj, T, k in zip(c, dates, strikes):
        total = total + cj * zcb_option(model, t, x, T0, T, k, call=not spec.payer)
    return spec.notional * total


def mc_european_price(model, spec, n_paths=200_000, seed=0, measure=Measure.FORWARD, dt=WEEKLY):
    """Plain Monte Carlo price of exercising only at T_0: (estimate, SE)."""
    T0 = spec.dates[0]
    grid = [0.0, T0] if T0 > 0 else [0.0]
    ps = simulate(model, grid, n_paths, measure, seed=seed, dt=dt, maturity=spec.maturity)
    i = ps.index_of(T0)
    pay = np.maximum(exercise_value(model, T0, ps.paths[:, i, :], spec, 0), 0.0)
    if ps.measure is Measure.FORWARD:
        disc = float(ts.initial_discount(model, spec.maturity)) / ps.numeraire[:, i]
    else:
        disc = 1.0 / ps.numeraire[:, i]
    v = pay * disc
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(n_paths))


def basis_matrix(x, basis=Basis.QUADRATIC):
    """Regression design: {1, x} or {1, x, x^2} in 1F; all monomials up to
    degree 2 in two factors ({1, x1, x2, x1^2, x1 x2, x2^2})."""
    basis = Basis(basis)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    cols = [np.ones(x.shape[0])] + [x[:, i] for i in range(x.shape[1])]
    if basis is Basis.QUADRATIC:
        for i in range(x.shape[1]):
            for j in range(i, x.shape[1]):
                cols.append(x[:, i] * x[:, j])
    return np.stack(cols, axis=1)


def _solve(X, y):
    gram = X.T @ X
    rhs = X.T @ y
    try:
        if np.linalg.cond(gram) > 1e14:
            raise np.linalg.LinAlgError("ill-conditioned")
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        log.warning("singular LSM regression, using ridge 1e-10")
        return np.linalg.solve(gram + 1e-10 * np.eye(gram.shape[0]), rhs)


def _lsm_policy(model, spec, ps, basis, coefs=None):
    """Backward LSM pass.  Fits coefficients when ``coefs`` is None, otherwise
    applies the given ones.  Returns (discounted cash flows, coefficients)."""
    n = ps.n_paths
    M = spec.exercise_count
    if ps.measure is Measure.FORWARD:
        disc = float(ts.initial_discount(model, spec.maturity)) / ps.numeraire
    else:
        disc = 1.0 / ps.numeraire
    value = np.zeros(n)
    fitted = [None] * M
    for m in range(M - 1, -1, -1):
        Tm = spec.dates[m]
        i = ps.index_of(Tm)
        x = ps.paths[:, i, :]
        h = exercise_value(model, Tm, x, spec, m) * disc[:, i]
        itm = h > 0
        if m == M - 1:
            value = np.where(itm, h, value)
            continue
        if not np.any(itm):
            continue
        X = basis_matrix(x[itm], basis)
        beta = _solve(X, value[itm]) if coefs is None else coefs[m]
        fitted[m] = beta
        ex = np.zeros(n, dtype=bool)
        ex[itm] = h[itm] > X @ beta
        value = np.where(ex, h, value)
    return value, fitted


def lsm_price(model, spec, basis=Basis.QUADRATIC, n_paths=200_000, n_runs=10, seed=0,
              measure=Measure.FORWARD, out_of_sample=False, dt=WEEKLY):
    """Longstaff-Schwartz price over ``n_runs`` independent path sets.

    Continuation values are regressed on in-the-money paths only.  By default
    the policy is valued on the paths it was fitted on; ``out_of_sample``
    re-values it on a fresh set.
    """
    if n_runs < 1:
        raise ContractError("need at least one run")
    grid = monitor_grid(spec)
    runs = []
    last_se = math.nan
    for r in range(n_runs):
        ps = simulate(model, grid, n_paths, measure, seed=seed + r, dt=dt, maturity=spec.maturity)
        value, coefs = _lsm_policy(model, spec, ps, basis)
        if out_of_sample:
            fresh = simulate(model, grid, n_paths, measure, seed=seed + r + 7_919_000, dt=dt,
                             maturity=spec.maturity)
            value, _ = _lsm_policy(model, spec, fresh, basis, coefs)
        runs.append(float(value.mean()))
        last_se = float(value.std(ddof=1) / math.sqrt(n_paths))
    est = float(math.fsum(runs) / n_runs)
    se = float(np.std(runs, ddof=1) / math.sqrt(n_runs)) if n_runs > 1 else last_se
    return LSMResult(est, se, (est - _Z95 * se, est + _Z95 * se), runs)


def _alpha(model, t, spec):
    T0 = spec.dates[0]
    return np.sqrt([ts.bond_option_variance(model, t, T0, T) for T in spec.dates[1:]])


def henrard_kappa(model, spec, t, x):
    """Root of sum_j c_j P(t,T_j)/P(t,T_0) exp(-alpha_j^2/2 - alpha_j kappa) = 1."""
    _require_one_factor(model)
    _, c = coupon_schedule(spec, 0)
    alpha = _alpha(model, t, spec)
    ratio = np.array([float(ts.bond_price(model, t, T, x)) for T in spec.dates[1:]])
    ratio /= float(ts.bond_price(model, t, spec.dates[0], x))

    def f(k):
        return float(np.sum(c * ratio * np.exp(-0.5 * alpha**2 - alpha * k)) - 1.0)

    return _bracket_root(f, 10.0), alpha


def hw_swaption_delta(model, spec, t, x):
    """Units of the underlying forward swap held by the delta hedge at (t, x).

    For a receiver this is the analytic Hull-White hedge ratio; a payer's
    ratio follows from put-call parity.  The bond-option variances alpha_j^2
    are integrated over the remaining life [t, T_0].
    """
    _require_one_factor(model)
    x = np.asarray(x, dtype=float).reshape(1)
    T0 = spec.dates[0]
    if t >= T0:
        raise ContractError("delta requires t < T_0")
    kappa, alpha = henrard_kappa(model, spec, t, x)
    _, c = coupon_schedule(spec, 0)
    nu = lambda T: float(ts.bond_volatility(model, t, T)[0])  # noqa: E731
    p = np.array([float(ts.bond_price(model, t, T, x)) for T in spec.dates[1:]])
    nus = np.array([nu(T) for T in spec.dates[1:]])
    p0, nu0 = float(ts.bond_price(model, t, T0, x)), nu(T0)
    num = np.sum(c * p * nus * ndtr(kappa + alpha)) - p0 * nu0 * ndtr(kappa)
    den = np.sum(c * p * nus) - p0 * nu0
    rec = float(num / den)
    return rec if not spec.payer else 1.0 - rec
