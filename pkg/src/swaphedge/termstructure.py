"""Gaussian affine short-rate models with a flat initial forward curve.

The latent factors follow the mean-zero dynamics

    dx_i(t) = -a_i x_i(t) dt + sum_k sigma_ik dW_k(t),    x(0) = 0,

with independent Brownian motions W_k, and the short rate is

    r(t) = phi(t) + sum_i x_i(t),

where the deterministic shift phi(t) is chosen so that P(0, T) = exp(-f0 T).
Equivalently each factor is driven by a single Brownian motion with volatility
vol_i = sqrt(sum_k sigma_ik^2) and instantaneous correlation rho_ij.  One
factor is the Hull-White model, two correlated factors are G2++.

All parameters are constant in time, so every integral below closes in
elementary functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "GaussianModel",
    "BondCoeffs",
    "bond_coeffs",
    "bond_price",
    "log_bond_price",
    "bond_volatility",
    "forward_measure_moments",
    "risk_neutral_moments",
    "bond_option_variance",
    "short_rate_shift",
    "short_rate",
    "initial_discount",
]


@dataclass(frozen=True)
class GaussianModel:
    """Constant-parameter d-factor Gaussian model.

    Attributes
    ----------
    a : ndarray, shape (d,)
        Mean-reversion speeds (1/years), all strictly positive.
    sigma : ndarray, shape (d, d)
        Loadings of factor i on independent Brownian motion k.
    f0 : float
        Flat initial instantaneous forward rate.
    """

    a: np.ndarray
    sigma: np.ndarray
    f0: float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        d = a.shape[0]
        if a.ndim != 1 or d not in (1, 2):
            raise DomainError(f"only 1 or 2 factors are supported, got a={a}")
        if sigma.shape != (d, d):
            raise DomainError(f"sigma must be {d}x{d}, got shape {sigma.shape}")
        if np.any(a <= 0) or not np.all(np.isfinite(a)):
            raise DomainError(f"mean reversions must be positive, got {a}")
        if not np.all(np.isfinite(sigma)) or not np.isfinite(self.f0):
            raise DomainError("model parameters must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "f0", float(self.f0))

    @classmethod
    def hull_white(cls, a, sigma, f0):
        return cls(np.array([a]), np.array([[sigma]]), f0)

    @classmethod
    def g2pp(cls, a1, a2, sigma1, sigma2, rho, f0):
        return cls.from_correlation([a1, a2], [sigma1, sigma2], [[1.0, rho], [rho, 1.0]], f0)

    @classmethod
    def from_correlation(cls, a, vol, rho, f0):
        """Build the loading matrix from per-factor vols and a correlation matrix."""
        vol = np.atleast_1d(np.asarray(vol, dtype=float))
        rho = np.atleast_2d(np.asarray(rho, dtype=float))
        if rho.shape != (vol.size, vol.size):
            raise DomainError(f"correlation matrix shape {rho.shape} does not match {vol.size} factors")
        if not np.allclose(rho, rho.T) or not np.allclose(np.diag(rho), 1.0):
            raise DomainError("correlation matrix must be symmetric with unit diagonal")
        eig = np.linalg.eigvalsh(rho)
        if eig.min() < -1e-12:
            raise DomainError("correlation matrix is not positive semi-definite")
        # Cholesky of a PSD (possibly singular) matrix via eigen-decomposition fallback
        try:
            chol = np.linalg.cholesky(rho)
        except np.linalg.LinAlgError:
            w, v = np.linalg.eigh(rho)
            chol = v * np.sqrt(np.clip(w, 0.0, None))
        return cls(np.asarray(a, dtype=float), vol[:, None] * chol, f0)

    @property
    def d(self):
        return self.a.shape[0]

    @property
    def vol(self):
        """Per-factor volatility sqrt(sum_k sigma_ik^2)."""
        return np.sqrt(np.sum(self.sigma**2, axis=1))

    @property
    def factor_cov(self):
        """Instantaneous covariance rho_ij vol_i vol_j = (sigma sigma^T)_ij."""
        return self.sigma @ self.sigma.T

    @property
    def rho(self):
        v = self.vol
        return self.factor_cov / np.outer(v, v)


@dataclass(frozen=True)
class BondCoeffs:
    """log P(t, T) = A - B . x"""

    A: float
    B: np.ndarray


def _check_times(t, T):
    if not (np.isfinite(t) and np.isfinite(T)):
        raise DomainError(f"times must be finite, got t={t}, T={T}")
    if t < 0.0 or t > T + 1e-14:
        raise DomainError(f"need 0 <= t <= T, got t={t}, T={T}")


def _b(a, tau):
    """(1 - exp(-a tau)) / a, elementwise."""
    return -np.expm1(-a * tau) / a


def _pair_decay(model, tau):
    """Matrix of (1 - exp(-(a_i + a_j) tau)) / (a_i + a_j)."""
    s = model.a[:, None] + model.a[None, :]
    return _b(s, tau)


def _integrated_variance(model, tau):
    """Variance of int_t^{t+tau} sum_i x_i(u) du given x(t)."""
    a = model.a
    bi = _b(a, tau)
    bracket = tau - bi[:, None] - bi[None, :] + _pair_decay(model, tau)
    return float(np.sum(model.factor_cov / np.outer(a, a) * bracket))


def bond_coeffs(model, t, T):
    """Affine coefficients of the discount bond P(t, T).

    With the flat curve, A(t, T) = -f0 (T - t) + (V(T - t) - V(T) + V(t)) / 2
    where V(tau) is the variance of the integrated factor sum over tau years,
    and B_i(t, T) = (1 - exp(-a_i (T - t))) / a_i.
    """
    _check_times(t, T)
    tau = T - t
    if tau <= 0.0:
        return BondCoeffs(0.0, np.zeros(model.d))
    v = _integrated_variance
    A = -model.f0 * tau + 0.5 * (v(model, tau) - v(model, T) + v(model, t))
    return BondCoeffs(float(A), _b(model.a, tau))


def log_bond_price(model, t, T, x):
    """log P(t, T) for a single state (d,) or a batch of states (n, d)."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("factor state must be finite")
    c = bond_coeffs(model, t, T)
    return c.A - x @ c.B


def bond_price(model, t, T, x):
    """Zero-coupon bond price exp(A(t,T) - B(t,T).x); strictly positive."""
    return np.exp(log_bond_price(model, t, T, x))


def initial_discount(model, T):
    return np.exp(-model.f0 * np.asarray(T, dtype=float))


def bond_volatility(model, t, T):
    """Instantaneous bond volatility nu_k(t, T) = sum_i B_i(t, T) sigma_ik."""
    _check_times(t, T)
    return _b(model.a, T - t) @ model.sigma


def _theta(model, t, Tm):
    """Forward-measure drift correction Theta_i(t, Tm).

    Theta_i = int_t^Tm sum_j C_ij B_j(s, Tm) exp(-a_i (Tm - s)) ds,
    with C = sigma sigma^T.
    """
    a = model.a
    tau = Tm - t
    # int_0^tau (1 - e^{-a_j u}) / a_j * e^{-a_i u} du
    kernel = (_b(a, tau)[:, None] - _pair_decay(model, tau)) / a[None, :]
    return np.sum(model.factor_cov * kernel, axis=1)


def _conditional_cov(model, tau):
    return model.factor_cov * _pair_decay(model, tau)


def forward_measure_moments(model, t, Tm, x_t):
    """Gaussian law of x(Tm) given x(t) under the Tm-forward measure.

    Returns
    -------
    mean : ndarray, shape of ``x_t``
        x_i(t) exp(-a_i (Tm - t)) - Theta_i(t, Tm).
    cov : ndarray, shape (d, d)
        c_ij = C_ij (1 - exp(-(a_i + a_j)(Tm - t))) / (a_i + a_j).
    """
    _check_times(t, Tm)
    x_t = np.asarray(x_t, dtype=float)
    tau = Tm - t
    mean = x_t * np.exp(-model.a * tau) - _theta(model, t, Tm)
    return mean, _conditional_cov(model, tau)


def risk_neutral_moments(model, t, T, x_t):
    """Gaussian law of x(T) given x(t) under the risk-neutral measure."""
    _check_times(t, T)
    x_t = np.asarray(x_t, dtype=float)
    tau = T - t
    return x_t * np.exp(-model.a * tau), _conditional_cov(model, tau)


def bond_option_variance(model, t, Tm, S):
    """Integrated squared vol of P(., S)/P(., Tm) over [t, Tm].

    Equals int_t^Tm |nu(u, S) - nu(u, Tm)|^2 du, the total variance that
    enters Black's formula for an option expiring at Tm on the bond maturing
    at S.
    """
    _check_times(t, Tm)
    _check_times(Tm, S)
    bs = _b(model.a, S - Tm)
    return float(bs @ _conditional_cov(model, Tm - t) @ bs)


def short_rate_shift(model, t):
    """phi(t) = f0 + 1/2 sum_ij C_ij B_i(0,t) B_j(0,t)."""
    t = np.asarray(t, dtype=float)
    b = _b(model.a[:, None], t.reshape(1, -1))  # (d, n)
    quad = np.einsum("in,ij,jn->n", b, model.factor_cov, b)
    out = model.f0 + 0.5 * quad
    return out.reshape(t.shape)


def short_rate(model, t, x):
    """r(t) = phi(t) + sum_i x_i(t)."""
    x = np.asarray(x, dtype=float)
    return short_rate_shift(model, t) + np.sum(x, axis=-1)
