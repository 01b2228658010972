"""Backward-induction fitting of the replication portfolios of a Bermudan swaption."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import termstructure as ts
from .errors import ContractError, NumericError, TrainingError
from .instruments import BermudanSpec, exercise_value
from .portfolio import asset_inputs, input_maturities, portfolio_value
from .regression import (
    Design,
    TrainOptions,
    forward,
    initialize,
    network_from_dict,
    network_to_dict,
    normalize,
    train,
)
from .simulation import WEEKLY, Measure, simulate

__all__ = [
    "TrainConfig",
    "DateDiagnostics",
    "HedgeSet",
    "fit_hedge",
    "error_margins",
    "monitor_grid",
    "continuation_values",
    "write_diagnostics_csv",
    "save_hedge",
    "load_hedge",
    "model_to_dict",
    "model_from_dict",
    "spec_to_dict",
    "spec_from_dict",
]

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Settings for :func:`fit_hedge`.

    ``final_learning_rate`` enables a geometric learning-rate decay over the
    epochs of each date.  ``warm_epochs`` (if set) replaces ``epochs`` for
    warm-started dates.

    ``init`` picks the ranges of the first, randomly initialized network.
    ``"centered"`` draws w1 from U(-1,0) and b from U(0,1) for either side,
    so every node is active at the input mean.  ``"by_side"`` keeps those
    ranges for receivers and mirrors them for payers (w1 from U(0,1), b from
    U(-1,0)); those payer nodes are all inactive at the mean and only see the
    upper tail of the bond inputs, where a payer is out of the money.
    """

    n_paths: int = 20000
    q: int = 64
    design: Design = Design.ONE_FACTOR
    epochs: int = 400
    warm_epochs: int | None = None
    batch_size: int = 32
    learning_rate: float = 5e-3
    final_learning_rate: float | None = 1e-6
    tol: float | None = None
    patience: int = 10
    polish_output: bool = True
    init: str = "centered"
    measure: Measure = Measure.FORWARD
    dt: float | None = WEEKLY
    seed: int = 0

    def __post_init__(self):
        self.design = Design(self.design)
        self.measure = Measure(self.measure)
        if self.init not in ("centered", "by_side"):
            raise ContractError(f"unknown initialization {self.init!r}")
        if self.n_paths < 2 or self.q < 1:
            raise ContractError("need at least two training paths and one hidden node")

    def options(self, date_index, warm):
        epochs = self.warm_epochs if (warm and self.warm_epochs) else self.epochs
        return TrainOptions(
            epochs=epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            final_learning_rate=self.final_learning_rate,
            tol=self.tol,
            patience=self.patience,
            polish_output=self.polish_output,
            seed=self.seed * 1000 + date_index + 1,
        )


@dataclass
class DateDiagnostics:
    """Fit quality at one monitor date, in currency units (notional scale)."""

    date: float
    mse: float
    mae: float
    discounted_mae: float
    epochs: int


@dataclass
class HedgeSet:
    """One fitted network per monitor date plus the direct price estimate."""

    model: ts.GaussianModel
    spec: BermudanSpec
    config: TrainConfig
    networks: list
    diagnostics: list
    direct_estimate: float
    seed: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def M(self):
        return len(self.networks)

    @property
    def epsilon(self):
        return max(d.discounted_mae for d in self.diagnostics)


def monitor_grid(spec):
    """Simulation output grid: 0 and every monitor date."""
    dates = [float(t) for t in spec.monitor_dates]
    return np.array(([0.0] if dates[0] > 0 else []) + dates)


def continuation_values(model, hedge_networks, spec, m, x):
    """C_m(T_m) for states ``x`` at T_m: value of G_{m+1}; zero after the last date."""
    if m + 1 >= len(hedge_networks):
        return np.zeros(np.asarray(x).shape[0])
    return portfolio_value(model, spec.dates[m], x, hedge_networks[m + 1])


def _discount_factors(pathset, idx, model):
    """1/numeraire at grid index ``idx`` expressed as time-zero value per unit."""
    if pathset.measure is Measure.FORWARD:
        p0 = float(ts.initial_discount(model, pathset.maturity))
        return p0 / pathset.numeraire[:, idx]
    return 1.0 / pathset.numeraire[:, idx]


def fit_hedge(model, spec, cfg=None, seed=None):
    """Fit G_{M-1}, ..., G_0 backwards on simulated paths.

    At each monitor date T_m the target is V(T_m) = max(C_m, h_m) with C_m the
    closed-form value of G_{m+1} (zero at the last date), and G_m is trained on
    the bond inputs observed at T_m.  The previous network warm-starts the next
    fit.  The direct estimate is the closed-form time-zero value of G_0.
    """
    cfg = cfg or TrainConfig()
    if seed is not None:
        cfg = TrainConfig(**{**asdict(cfg), "seed": seed})
    if cfg.design is Design.ONE_FACTOR and model.d != 1:
        raise ContractError("the one-factor design needs a one-factor model")
    if cfg.design is not Design.ONE_FACTOR and model.d == 1:
        log.info("multi-input design on a one-factor model")
    d_in = 1 if cfg.design is Design.ONE_FACTOR else model.d

    grid = monitor_grid(spec)
    paths = simulate(model, grid, cfg.n_paths, cfg.measure, seed=cfg.seed, dt=cfg.dt,
                     maturity=spec.maturity)
    n_dates = spec.exercise_count
    nets = [None] * n_dates
    diags = [None] * n_dates
    prev = None
    for m in range(n_dates - 1, -1, -1):
        Tm = spec.dates[m]
        idx = paths.index_of(Tm)
        x = paths.paths[:, idx, :]
        h = exercise_value(model, Tm, x, spec, m)
        cont = continuation_values(model, nets, spec, m, x)
        if not np.all(np.isfinite(cont)):
            raise NumericError(f"non-finite continuation value at monitor date {m}")
        target = np.maximum(cont, h)
        mats = input_maturities(cfg.design, d_in, Tm, spec.maturity)
        z = asset_inputs(model, cfg.design, Tm, mats, x)
        data, norm = normalize(z, target)
        payer_ranges = spec.payer and cfg.init == "by_side"
        start = initialize(cfg.design, cfg.q, d_in, payer_ranges, prev=prev, seed=cfg.seed * 1000 + m)
        try:
            net, tdiag = train(start, data, cfg.options(m, prev is not None), norm)
        except TrainingError as exc:
            raise TrainingError(f"{exc} (monitor date {m})", exc.epoch, m) from exc
        net.expiry = Tm
        net.maturities = mats
        resid = np.abs(forward(net, z) - target)
        disc = _discount_factors(paths, idx, model)
        diags[m] = DateDiagnostics(Tm, tdiag.mse, tdiag.mae, float(np.mean(resid * disc)), tdiag.epochs)
        nets[m] = net
        prev = net
        log.info("date %d (T=%g): mae=%.3e epochs=%d", m, Tm, tdiag.mae, tdiag.epochs)

    direct = float(portfolio_value(model, 0.0, np.zeros(model.d), nets[0]))
    if not np.isfinite(direct):
        raise NumericError("non-finite direct estimate")
    return HedgeSet(model, spec, cfg, nets, diags, direct, cfg.seed)


def error_margins(hedge):
    """Theoretical accuracy margins from the worst discounted fitting error.

    With M monitor dates and eps the largest discounted MAE: the direct
    estimate is within M eps of the price, the lower bound within
    2 (M - 1) eps and the upper bound within M (M - 1) eps.
    """
    eps = hedge.epsilon if isinstance(hedge, HedgeSet) else float(hedge[0])
    M = hedge.M if isinstance(hedge, HedgeSet) else int(hedge[1])
    return {"epsilon": eps, "direct": M * eps, "lower": 2 * (M - 1) * eps, "upper": M * (M - 1) * eps}


def write_diagnostics_csv(hedge, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "mse", "mae", "discounted_mae", "epochs"])
        for d in hedge.diagnostics:
            w.writerow([d.date, repr(d.mse), repr(d.mae), repr(d.discounted_mae), d.epochs])


def model_to_dict(model):
    return {"a": model.a.tolist(), "sigma": model.sigma.tolist(), "f0": model.f0}


def model_from_dict(rec):
    return ts.GaussianModel(np.array(rec["a"]), np.array(rec["sigma"]), rec["f0"])


def spec_to_dict(spec):
    return {"notional": spec.notional, "payer": spec.payer, "strike": spec.strike,
            "dates": list(spec.dates), "exercise_count": spec.exercise_count}


def spec_from_dict(rec):
    return BermudanSpec(rec["notional"], rec["payer"], rec["strike"], tuple(rec["dates"]),
                        rec["exercise_count"])


def save_hedge(hedge, path):
    cfg = asdict(hedge.config)
    cfg["design"] = hedge.config.design.value
    cfg["measure"] = hedge.config.measure.value
    payload = {
        "model": model_to_dict(hedge.model),
        "spec": spec_to_dict(hedge.spec),
        "config": cfg,
        "networks": [network_to_dict(n) for n in hedge.networks],
        "diagnostics": [asdict(d) for d in hedge.diagnostics],
        "direct_estimate": hedge.direct_estimate,
        "seed": hedge.seed,
        "meta": hedge.meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)


def load_hedge(path):
    with open(path, encoding="utf-8") as fh:
        rec = json.load(fh)
    return HedgeSet(
        model=model_from_dict(rec["model"]),
        spec=spec_from_dict(rec["spec"]),
        config=TrainConfig(**rec["config"]),
        networks=[network_from_dict(n) for n in rec["networks"]],
        diagnostics=[DateDiagnostics(**d) for d in rec["diagnostics"]],
        direct_estimate=rec["direct_estimate"],
        seed=rec["seed"],
        meta=rec.get("meta", {}),
    )
