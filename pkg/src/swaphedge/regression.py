"""Shallow ReLU networks used as replication portfolios.

A network maps normalized bond inputs to a value,

    G(z) = sd_v * w2 . relu(w1 (z - mu_z) / sd_z + b),

with no output bias, so every hidden node is the payoff of a single option
(or forward) and the whole network is a portfolio of them.  Three designs:

``one_factor``
    one input, the bond maturing at T_M.
``locally_connected``
    d bond inputs; each hidden node sees exactly one input.
``fully_connected_log``
    d log-bond inputs, dense first layer.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .errors import ContractError, DegenerateDataError, TrainingError

__all__ = [
    "Design",
    "HedgeNetwork",
    "TrainingSet",
    "NormConstants",
    "TrainOptions",
    "TrainDiagnostics",
    "forward",
    "normalize",
    "initialize",
    "train",
    "loss_and_grad",
    "denormalized_portfolio_weights",
    "locally_connected_mask",
    "network_to_dict",
    "network_from_dict",
    "save_networks",
    "load_networks",
]


class Design(str, enum.Enum):
    ONE_FACTOR = "one_factor"
    LOCALLY_CONNECTED = "locally_connected"
    FULLY_CONNECTED_LOG = "fully_connected_log"

    @property
    def log_inputs(self):
        return self is Design.FULLY_CONNECTED_LOG


@dataclass
class HedgeNetwork:
    """Single-hidden-layer ReLU network plus the metadata needed to price it.

    ``expiry`` is the monitor date T_m at which the portfolio pays off and
    ``maturities`` the maturities of the input bonds.  Both are NaN/empty for
    a free-standing network.
    """

    design: Design
    w1: np.ndarray
    b: np.ndarray
    w2: np.ndarray
    mask: np.ndarray
    mu_z: np.ndarray
    sd_z: np.ndarray
    sd_v: float = 1.0
    expiry: float = math.nan
    maturities: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        self.design = Design(self.design)
        self.w1 = np.atleast_2d(np.asarray(self.w1, dtype=float))
        q, d_in = self.w1.shape
        self.b = np.asarray(self.b, dtype=float).reshape(q)
        self.w2 = np.asarray(self.w2, dtype=float).reshape(q)
        self.mask = np.asarray(self.mask, dtype=float).reshape(q, d_in)
        self.mu_z = np.asarray(self.mu_z, dtype=float).reshape(d_in)
        self.sd_z = np.asarray(self.sd_z, dtype=float).reshape(d_in)
        self.maturities = np.asarray(self.maturities, dtype=float).reshape(-1)
        if np.any(self.sd_z <= 0) or not self.sd_v > 0:
            raise ContractError("normalization scales must be strictly positive")

    @property
    def q(self):
        return self.w1.shape[0]

    @property
    def d_in(self):
        return self.w1.shape[1]

    def copy(self):
        return replace(
            self, w1=self.w1.copy(), b=self.b.copy(), w2=self.w2.copy(),
            mask=self.mask.copy(), mu_z=self.mu_z.copy(), sd_z=self.sd_z.copy(),
            maturities=self.maturities.copy(),
        )


@dataclass
class NormConstants:
    mu_z: np.ndarray
    sd_z: np.ndarray
    sd_v: float


@dataclass
class TrainingSet:
    """Normalized inputs/targets with sample weights summing to one."""

    inputs: np.ndarray
    targets: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        if self.inputs.ndim == 1:
            self.inputs = self.inputs[:, None]
        self.targets = np.asarray(self.targets, dtype=float).reshape(-1)
        n = self.targets.size
        if n < 1 or self.inputs.shape[0] != n:
            raise ContractError("inputs and targets must have the same non-zero length")
        if self.weights is None:
            self.weights = np.full(n, 1.0 / n)
        self.weights = np.asarray(self.weights, dtype=float).reshape(n)
        if not np.all(np.isfinite(self.inputs)):
            raise ContractError("training inputs must be finite")
        if abs(self.weights.sum() - 1.0) > 1e-9:
            raise ContractError("sample weights must sum to one")


@dataclass
class TrainOptions:
    """AdaMax settings.

    Training stops early once the normalized training MSE has improved by
    less than ``tol`` over the last ``patience`` epochs; ``tol=None`` always
    runs every epoch.

    ``polish_output`` finishes with an exact least-squares solve for the
    output weights given the trained hidden layer (the loss is quadratic in
    w2).  Singular values below ``polish_rcond`` times the largest are cut,
    which keeps nearly collinear hidden nodes from cancelling with huge
    weights.
    """

    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 5e-4
    final_learning_rate: float | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    tol: float | None = 1e-7
    patience: int = 10
    seed: int = 0
    polish_output: bool = False
    polish_rcond: float = 1e-6

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise ContractError("epochs, batch_size and patience must be positive")
        if not self.learning_rate > 0:
            raise ContractError("learning rate must be positive")

    def rate(self, epoch):
        """Learning rate for ``epoch``; geometric decay when a final rate is set."""
        if self.final_learning_rate is None or self.epochs == 1:
            return self.learning_rate
        frac = epoch / (self.epochs - 1)
        return self.learning_rate * (self.final_learning_rate / self.learning_rate) ** frac


@dataclass
class TrainDiagnostics:
    mse: float
    mae: float
    epochs: int
    history: list


def _relu(x):
    return np.maximum(x, 0.0)


def _hidden(net, z):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != net.d_in and not (net.d_in == 1 and z.ndim <= 1):
        raise ContractError(f"input dimension {z.shape[-1]} does not match network ({net.d_in})")
    if net.d_in == 1 and (z.ndim == 0 or z.shape[-1] != 1):
        z = z[..., None]
    zn = (z - net.mu_z) / net.sd_z
    return _relu(zn @ net.w1.T + net.b)


def forward(net, z):
    """Denormalized network output for one input vector or a batch (n, d_in)."""
    return net.sd_v * (_hidden(net, z) @ net.w2)


def normalize(raw_inputs, raw_targets, weights=None):
    """Center/scale inputs per column, scale (but do not center) targets.

    Returns
    -------
    TrainingSet, NormConstants

    Raises
    ------
    DegenerateDataError
        Fewer than two samples or a constant input column.
    """
    z = np.asarray(raw_inputs, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    v = np.asarray(raw_targets, dtype=float).reshape(-1)
    if z.shape[0] < 2:
        raise DegenerateDataError("normalization needs at least two samples")
    mu = z.mean(axis=0)
    sd = z.std(axis=0, ddof=1)
    if np.any(sd <= 0) or not np.all(np.isfinite(sd)):
        raise DegenerateDataError(f"input column with zero sample deviation (sd={sd})")
    sd_v = float(v.std(ddof=1))
    if not sd_v > 0:
        # all-equal targets (e.g. an option that is never in the money)
        sd_v = 1.0
    data = TrainingSet((z - mu) / sd, v / sd_v, weights)
    return data, NormConstants(mu, sd, sd_v)


def locally_connected_mask(q, d_in):
    """Row j feeds only from input floor(j d_in / q)."""
    if q % d_in:
        raise ContractError(f"hidden node count {q} must be a multiple of {d_in}")
    mask = np.zeros((q, d_in))
    mask[np.arange(q), (np.arange(q) * d_in) // q] = 1.0
    return mask


def initialize(design, q, d_in, payer, prev=None, seed=0):
    """Fresh or warm-started network.

    A warm start copies ``prev``'s weights; its normalization constants are
    replaced when the network is trained on the next date's data.  A fresh
    payer network draws first-layer weights from U(0,1) and biases from
    U(-1,0); a receiver network the other way around; output weights U(-1,1).
    """
    design = Design(design)
    if design is Design.ONE_FACTOR and d_in != 1:
        raise ContractError("the one-factor design has a single input")
    if prev is not None:
        if prev.w1.shape != (q, d_in) or prev.design is not design:
            raise ContractError("warm start network has a different shape or design")
        return prev.copy()
    mask = locally_connected_mask(q, d_in) if design is Design.LOCALLY_CONNECTED else np.ones((q, d_in))
    rng = np.random.default_rng(seed)
    w1 = rng.uniform(0.0, 1.0, (q, d_in))
    b = rng.uniform(-1.0, 0.0, q)
    if not payer:
        w1, b = -w1, -b
    w2 = rng.uniform(-1.0, 1.0, q)
    return HedgeNetwork(design, w1 * mask, b, w2, mask, np.zeros(d_in), np.ones(d_in), 1.0)


def loss_and_grad(w1, b, w2, mask, X, y, weights):
    """Weighted MSE sum_n w_n (G(x_n) - y_n)^2 and its gradient (normalized units).

    The ReLU derivative at exactly zero is taken as 0.
    """
    h = X @ w1.T + b
    a = _relu(h)
    resid = a @ w2 - y
    loss = float(np.sum(weights * resid**2))
    r = 2.0 * weights * resid
    g_w2 = a.T @ r
    gh = (r[:, None] * (h > 0)) * w2
    g_b = gh.sum(axis=0)
    g_w1 = (gh.T @ X) * mask
    return loss, g_w1, g_b, g_w2


@numba.njit(cache=True)
def _adamax_epoch(X, y, wn, perm, w1, b, w2, mask, m1, u1, mb, ub, m2, u2,
                  step, lr, beta1, beta2, eps, batch):
    n, d = X.shape
    q = w1.shape[0]
    h = np.empty(q)
    gw1 = np.empty((q, d))
    gb = np.empty(q)
    gw2 = np.empty(q)
    for start in range(0, n, batch):
        stop = min(start + batch, n)
        nb = stop - start
        gw1[:, :] = 0.0
        gb[:] = 0.0
        gw2[:] = 0.0
        for s in range(start, stop):
            i = perm[s]
            out = 0.0
            for j in range(q):
                acc = b[j]
                for k in range(d):
                    acc += w1[j, k] * X[i, k]
                h[j] = acc
                if acc > 0.0:
                    out += w2[j] * acc
            r = 2.0 * (out - y[i]) * wn[i] / nb
            for j in range(q):
                if h[j] > 0.0:
                    gw2[j] += r * h[j]
                    g = r * w2[j]
                    gb[j] += g
                    for k in range(d):
                        gw1[j, k] += g * X[i, k]
        step += 1
        lr_t = lr / (1.0 - beta1**step)
        for j in range(q):
            for k in range(d):
                g = gw1[j, k] * mask[j, k]
                m1[j, k] = beta1 * m1[j, k] + (1.0 - beta1) * g
                u1[j, k] = max(beta2 * u1[j, k], abs(g))
                w1[j, k] -= lr_t * m1[j, k] / (u1[j, k] + eps)
            g = gb[j]
            mb[j] = beta1 * mb[j] + (1.0 - beta1) * g
            ub[j] = max(beta2 * ub[j], abs(g))
            b[j] -= lr_t * mb[j] / (ub[j] + eps)
            g = gw2[j]
            m2[j] = beta1 * m2[j] + (1.0 - beta1) * g
            u2[j] = max(beta2 * u2[j], abs(g))
            w2[j] -= lr_t * m2[j] / (u2[j] + eps)
    return step


def adamax_pass(net, data, perm, lr, opts, state=None):
    """One pass over ``data`` in the order ``perm``; returns the optimizer state."""
    q, d = net.w1.shape
    if state is None:
        state = {"step": 0, **{k: np.zeros_like(v) for k, v in
                 (("m1", net.w1), ("u1", net.w1), ("mb", net.b), ("ub", net.b),
                  ("m2", net.w2), ("u2", net.w2))}}
    wn = data.weights * data.targets.size
    state["step"] = _adamax_epoch(
        data.inputs, data.targets, wn, perm, net.w1, net.b, net.w2, net.mask,
        state["m1"], state["u1"], state["mb"], state["ub"], state["m2"], state["u2"],
        state["step"], lr, opts.beta1, opts.beta2, opts.eps, opts.batch_size,
    )
    return state


def train(net, data, opts=None, norm=None):
    """Fit ``net`` to ``data`` with mini-batch AdaMax.

    Parameters
    ----------
    net : HedgeNetwork
        Starting point (fresh or warm-started); not modified.
    data : TrainingSet
        Normalized data, e.g. from :func:`normalize`.
    opts : TrainOptions
    norm : NormConstants, optional
        Constants attached to the returned network.  Diagnostics are reported
        in the denormalized units they imply.

    Returns
    -------
    HedgeNetwork, TrainDiagnostics
    """
    opts = opts or TrainOptions()
    if data.inputs.shape[1] != net.d_in:
        raise ContractError(f"data has {data.inputs.shape[1]} inputs, network expects {net.d_in}")
    net = net.copy()
    net.w1 *= net.mask
    if norm is not None:
        net.mu_z, net.sd_z, net.sd_v = norm.mu_z.copy(), norm.sd_z.copy(), float(norm.sd_v)
    rng = np.random.default_rng(opts.seed)
    n = data.targets.size
    state = None
    history = []
    epoch = 0
    for epoch in range(opts.epochs):
        perm = rng.permutation(n).astype(np.int64)
        state = adamax_pass(net, data, perm, opts.rate(epoch), opts, state)
        loss, *_ = loss_and_grad(net.w1, net.b, net.w2, net.mask, data.inputs, data.targets, data.weights)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite training loss at epoch {epoch}", epoch)
        history.append(loss)
        if opts.tol is not None and len(history) > opts.patience and history[-1 - opts.patience] - min(history[-opts.patience:]) < opts.tol:
            break
    if opts.polish_output:
        _polish_output(net, data, opts.polish_rcond)
    fitted = forward_normalized(net, data.inputs)
    resid = (fitted - data.targets) * net.sd_v
    diag = TrainDiagnostics(
        mse=float(np.sum(data.weights * resid**2)),
        mae=float(np.sum(data.weights * np.abs(resid))),
        epochs=epoch + 1,
        history=history,
    )
    return net, diag


def _polish_output(net, data, rcond):
    root_w = np.sqrt(data.weights)
    H = _relu(data.inputs @ net.w1.T + net.b) * root_w[:, None]
    active = np.any(H > 0, axis=0)
    if not np.any(active):
        return
    w2, *_ = np.linalg.lstsq(H[:, active], data.targets * root_w, rcond=rcond)
    if np.all(np.isfinite(w2)):
        net.w2[active] = w2


def forward_normalized(net, zn):
    return _relu(zn @ net.w1.T + net.b) @ net.w2


def denormalized_portfolio_weights(net):
    """Raw-asset coefficients (w1o, bo, w2o) with forward(z) = w2o . relu(w1o z + bo)."""
    w1o = net.w1 / net.sd_z
    bo = net.b - w1o @ net.mu_z
    return w1o, bo, net.sd_v * net.w2


def network_to_dict(net):
    return {
        "design": net.design.value,
        "q": net.q,
        "d_in": net.d_in,
        "w1": net.w1.tolist(),
        "b": net.b.tolist(),
        "w2": net.w2.tolist(),
        "mask": net.mask.astype(int).tolist(),
        "mu_z": net.mu_z.tolist(),
        "sd_z": net.sd_z.tolist(),
        "sd_v": net.sd_v,
        "expiry": None if math.isnan(net.expiry) else net.expiry,
        "maturities": net.maturities.tolist(),
    }


def network_from_dict(rec):
    return HedgeNetwork(
        design=Design(rec["design"]),
        w1=np.array(rec["w1"], dtype=float).reshape(rec["q"], rec["d_in"]),
        b=rec["b"],
        w2=rec["w2"],
        mask=np.array(rec["mask"], dtype=float).reshape(rec["q"], rec["d_in"]),
        mu_z=rec["mu_z"],
        sd_z=rec["sd_z"],
        sd_v=rec["sd_v"],
        expiry=math.nan if rec.get("expiry") is None else rec["expiry"],
        maturities=rec.get("maturities", []),
    )


def save_networks(nets, path, extra=None):
    """Persist a list of networks as JSON (floats round-trip exactly)."""
    payload = {"networks": [network_to_dict(n) for n in nets]}
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)


def load_networks(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return [network_from_dict(r) for r in payload["networks"]], payload
