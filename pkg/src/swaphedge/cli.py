"""Command-line experiment runner.

    swaphedge run --config exp.ini --out results/ [--seed N] [--threads N] [--experiment NAME]
    swaphedge report results/

A config is an INI file with sections [model], [contract], [training],
[bounds], [hedge], [sweep] and [run]; every key has a default, so an empty
file prices the one-factor 1Yx5Y at-the-money receiver Bermudan.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .benchmarks import Basis, jamshidian_price, lsm_price
from .bounds import BOUND_SEED_OFFSET, run_bounds
from .engine import TrainConfig, error_margins, fit_hedge, save_hedge, write_diagnostics_csv
from .errors import ConfigError
from .hedging import (
    dynamic_hedge_error,
    semistatic_bermudan_hedge_error,
    static_hedge_error,
    write_errors_csv,
    write_reports_csv,
)
from .instruments import atm_swap_rate, bermudan_spec, european_spec, spec_from_label
from .portfolio import write_portfolio_csv
from .regression import Design
from .simulation import Measure
from .termstructure import GaussianModel

__all__ = ["main", "load_config", "ExperimentConfig", "run", "report", "EXPERIMENTS"]

log = logging.getLogger("swaphedge")

EXPERIMENTS = ("price", "bounds", "benchmark", "hedge", "sweep")

_DEFAULTS = {
    "model": {
        "type": "hw", "a": "0.01", "sigma": "0.01", "f0": "0.03",
        "a1": "0.07", "a2": "0.08", "sigma1": "0.015", "sigma2": "0.008", "rho": "-0.6",
    },
    "contract": {
        "style": "bermudan", "payer": "false", "notional": "100", "label": "1Yx5Y",
        "strike_ratio": "1.0", "frequency": "1",
    },
    "training": {
        "n_paths": "20000", "q": "64", "design": "auto", "epochs": "400",
        "learning_rate": "5e-3", "final_learning_rate": "1e-6", "batch_size": "32",
        "measure": "forward", "polish_output": "true", "init": "centered", "seed": "0",
    },
    "bounds": {"n_paths": "200000", "n_runs": "10", "measure": "forward", "seed": "auto"},
    "hedge": {"n_paths": "10000", "rebalance": "255", "seed": "12345", "dump_errors": "false"},
    "benchmark": {"n_paths": "200000", "n_runs": "10", "basis": "quadratic", "seed": "777",
                  "out_of_sample": "false"},
    "sweep": {"nodes": "2,4,8,16,32,64", "n_paths": "auto"},
    "run": {"experiments": "price"},
}
_KNOWN = {s: set(k) | ({"strike", "t0", "tm"} if s == "contract" else set()) for s, k in _DEFAULTS.items()}


@dataclass
class ExperimentConfig:
    model: GaussianModel
    specs: list
    train: TrainConfig
    sections: dict
    experiments: list
    path: str | None = None
    labels: list = field(default_factory=list)


def _line_of(text, section, key):
    """1-based line of ``key`` inside ``[section]`` (None if absent)."""
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
        elif current == section and "=" in line and line.split("=", 1)[0].strip().lower() == key:
            return i
    return None


class _Reader:
    def __init__(self, parser, text):
        self.p = parser
        self.text = text

    def get(self, section, key):
        if self.p.has_option(section, key):
            return self.p.get(section, key).strip()
        return _DEFAULTS[section].get(key)

    def _fail(self, section, key, msg):
        raise ConfigError(f"[{section}] {key}: {msg}", _line_of(self.text, section, key))

    def number(self, section, key, kind=float, positive=False):
        raw = self.get(section, key)
        try:
            val = kind(raw)
        except (TypeError, ValueError):
            self._fail(section, key, f"expected {'an integer' if kind is int else 'a number'}, got {raw!r}")
        if kind is float and not math.isfinite(val):
            self._fail(section, key, "must be finite")
        if positive and not val > 0:
            self._fail(section, key, f"must be positive, got {raw}")
        return val

    def flag(self, section, key):
        raw = (self.get(section, key) or "").lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        self._fail(section, key, f"expected a boolean, got {raw!r}")

    def floats(self, section, key):
        raw = self.get(section, key)
        try:
            return [float(v) for v in raw.split(",") if v.strip()]
        except ValueError:
            self._fail(section, key, f"expected a comma-separated list of numbers, got {raw!r}")

    def choice(self, section, key, options):
        raw = (self.get(section, key) or "").lower()
        if raw not in options:
            self._fail(section, key, f"expected one of {', '.join(options)}, got {raw!r}")
        return raw


def _parse(text, source="<config>"):
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"cannot parse {source}: no section header", exc.lineno) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"cannot parse {source}", line) from exc
    except configparser.Error as exc:
        raise ConfigError(str(exc), getattr(exc, "lineno", None)) from exc
    # a manifest from an earlier run is a valid config; its provenance block is ignored
    parser.remove_section("manifest")
    for section in parser.sections():
        if section not in _DEFAULTS:
            raise ConfigError(f"unknown section [{section}]", _line_of(text, section, "") or
                              next((i for i, l in enumerate(text.splitlines(), 1)
                                    if l.strip() == f"[{section}]"), None))
        for key in parser.options(section):
            if key not in _KNOWN[section]:
                raise ConfigError(f"[{section}] unknown key {key!r}", _line_of(text, section, key))
    return parser


def load_config(path=None, text=None, seed=None, experiment=None):
    """Parse and validate a config file (or string) into an ExperimentConfig."""
    if text is None:
        try:
            text = Path(path).read_text(encoding="utf-8") if path else ""
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    parser = _parse(text, str(path or "<config>"))
    r = _Reader(parser, text)

    kind = r.choice("model", "type", ("hw", "g2pp"))
    try:
        if kind == "hw":
            model = GaussianModel.hull_white(r.number("model", "a", positive=True),
                                             r.number("model", "sigma"), r.number("model", "f0"))
        else:
            rho = r.number("model", "rho")
            if not -1 <= rho <= 1:
                r._fail("model", "rho", "correlation must lie in [-1, 1]")
            model = GaussianModel.g2pp(r.number("model", "a1", positive=True),
                                       r.number("model", "a2", positive=True),
                                       r.number("model", "sigma1"), r.number("model", "sigma2"),
                                       rho, r.number("model", "f0"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[model] {exc}", _line_of(text, "model", "type")) from exc

    style = r.choice("contract", "style", ("bermudan", "european"))
    payer = r.flag("contract", "payer")
    notional = r.number("contract", "notional", positive=True)
    freq = r.number("contract", "frequency", positive=True)
    has_dates = parser.has_option("contract", "t0") or parser.has_option("contract", "tm")
    has_strike = parser.has_option("contract", "strike")
    if has_strike and parser.has_option("contract", "strike_ratio"):
        r._fail("contract", "strike", "give either strike or strike_ratio, not both")
    strikes = r.floats("contract", "strike") if has_strike else None
    ratios = None if has_strike else r.floats("contract", "strike_ratio")
    specs, labels = [], []
    levels = strikes if has_strike else ratios
    if not levels:
        r._fail("contract", "strike" if has_strike else "strike_ratio", "empty list")
    for level in levels:
        kw = {"payer": payer, "notional": notional, "frequency": freq}
        kw["strike" if has_strike else "strike_ratio"] = level
        try:
            if has_dates:
                T0, TM = r.number("contract", "t0"), r.number("contract", "tm")
                make = european_spec if style == "european" else bermudan_spec
                spec = make(model, T0, TM, **kw)
                label = f"{T0:g}-{TM:g}"
            else:
                label = r.get("contract", "label")
                spec = spec_from_label(model, label, european=style == "european", **kw)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            key = "t0" if has_dates else "label"
            raise ConfigError(f"[contract] {exc}", _line_of(text, "contract", key)) from exc
        specs.append(spec)
        labels.append(label)

    design = r.choice("training", "design", ("auto",) + tuple(d.value for d in Design))
    if design == "auto":
        design = Design.ONE_FACTOR if model.d == 1 else Design.LOCALLY_CONNECTED
    design = Design(design)
    if design is Design.ONE_FACTOR and model.d != 1:
        r._fail("training", "design", "one_factor design needs a one-factor model")
    q = r.number("training", "q", int, positive=True)
    if design is Design.LOCALLY_CONNECTED and q % model.d:
        r._fail("training", "q", f"must be a multiple of the factor count {model.d}")
    flr_raw = (r.get("training", "final_learning_rate") or "").lower()
    train_seed = seed if seed is not None else r.number("training", "seed", int)
    train = TrainConfig(
        n_paths=r.number("training", "n_paths", int, positive=True),
        q=q,
        design=design,
        epochs=r.number("training", "epochs", int, positive=True),
        batch_size=r.number("training", "batch_size", int, positive=True),
        learning_rate=r.number("training", "learning_rate", positive=True),
        final_learning_rate=None if flr_raw in ("", "none") else r.number("training", "final_learning_rate", positive=True),
        measure=r.choice("training", "measure", ("forward", "risk_neutral")),
        polish_output=r.flag("training", "polish_output"),
        init=r.choice("training", "init", ("centered", "by_side")),
        seed=train_seed,
    )

    if experiment is not None:
        experiments = [e.strip() for e in experiment.split(",") if e.strip()]
    else:
        experiments = [e.strip().lower() for e in (r.get("run", "experiments") or "").split(",") if e.strip()]
    for e in experiments:
        if e not in EXPERIMENTS:
            if experiment is not None:
                raise ConfigError(f"unknown experiment {e!r}; expected one of {', '.join(EXPERIMENTS)}")
            r._fail("run", "experiments", f"unknown experiment {e!r}")
    # validate remaining sections eagerly so errors surface before any work
    r.number("bounds", "n_paths", int, positive=True)
    r.number("bounds", "n_runs", int, positive=True)
    r.choice("bounds", "measure", ("forward", "risk_neutral"))
    r.number("hedge", "n_paths", int, positive=True)
    r.number("hedge", "rebalance", int, positive=True)
    r.number("hedge", "seed", int)
    r.flag("hedge", "dump_errors")
    r.number("benchmark", "n_paths", int, positive=True)
    r.number("benchmark", "n_runs", int, positive=True)
    r.number("benchmark", "seed", int)
    r.choice("benchmark", "basis", tuple(b.value for b in Basis))
    r.flag("benchmark", "out_of_sample")
    nodes = r.floats("sweep", "nodes")
    if any(n < 1 or n != int(n) for n in nodes):
        r._fail("sweep", "nodes", "node counts must be positive integers")
    if (r.get("bounds", "seed") or "auto") != "auto":
        r.number("bounds", "seed", int)
    if (r.get("sweep", "n_paths") or "auto") != "auto":
        r.number("sweep", "n_paths", int, positive=True)

    sections = {s: {k: r.get(s, k) for k in sorted(_KNOWN[s]) if r.get(s, k) is not None}
                for s in _DEFAULTS}
    sections["training"]["seed"] = str(train_seed)
    sections["training"]["design"] = design.value
    sections["run"]["experiments"] = ",".join(experiments)
    return ExperimentConfig(model, specs, train, sections, experiments, path, labels)


# ---------------------------------------------------------------- experiments


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "NA"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_rows(path, rows):
    if not rows:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})


def _ratio(cfg, spec):
    return spec.strike / atm_swap_rate(cfg.model, spec.dates)


def _tag(cfg, i):
    return f"{cfg.labels[i]}_{_ratio(cfg, cfg.specs[i]) * 100:.0f}"


class _Runner:
    def __init__(self, cfg, out):
        self.cfg = cfg
        self.out = Path(out)
        self.hedges = {}
        self.results = {}

    def hedge(self, i, q=None, n_paths=None):
        key = (i, q, n_paths)
        if key not in self.hedges:
            tc = self.cfg.train
            if q is not None or n_paths is not None:
                tc = TrainConfig(**{**tc.__dict__, "q": q or tc.q, "n_paths": n_paths or tc.n_paths})
            log.info("fitting %s (q=%d, n=%d)", _tag(self.cfg, i), tc.q, tc.n_paths)
            self.hedges[key] = fit_hedge(self.cfg.model, self.cfg.specs[i], tc)
        return self.hedges[key]

    def row(self, i):
        spec = self.cfg.specs[i]
        if i not in self.results:
            self.results[i] = {"type": self.cfg.labels[i], "style": "european" if spec.is_european else "bermudan",
                               "payer": spec.payer, "k_over_s": _ratio(self.cfg, spec), "strike": spec.strike}
        return self.results[i]

    def price(self):
        for i in range(len(self.cfg.specs)):
            h = self.hedge(i)
            tag = _tag(self.cfg, i)
            save_hedge(h, self.out / f"hedge_{tag}.json")
            write_diagnostics_csv(h, self.out / f"diagnostics_{tag}.csv")
            write_portfolio_csv(self.cfg.model, h.networks, self.out / f"portfolio_{tag}.csv")
            row = self.row(i)
            row["direct"] = h.direct_estimate
            row["epsilon"] = h.epsilon
            if self.cfg.model.d == 1 and h.spec.is_european:
                row["jamshidian"] = float(jamshidian_price(self.cfg.model, h.spec))

    def bounds(self):
        s = self.cfg.sections["bounds"]
        runs = []
        for i in range(len(self.cfg.specs)):
            h = self.hedge(i)
            seed = h.seed + BOUND_SEED_OFFSET if s["seed"] == "auto" else int(s["seed"])
            rep = run_bounds(h, int(s["n_paths"]), int(s["n_runs"]), seed, Measure(s["measure"]))
            margins = error_margins(h)
            row = self.row(i)
            row.update({"direct": h.direct_estimate, "lb": rep.lower.value, "lb_se": rep.lower.se,
                        "ub": rep.upper.value, "ub_se": rep.upper.se, "ub_minus_lb": rep.gap,
                        "epsilon": margins["epsilon"], "margin_lb_ub": margins["lower"] + margins["upper"]})
            for r, (lo, up) in enumerate(zip(rep.lower_runs, rep.upper_runs)):
                runs.append({"type": row["type"], "k_over_s": row["k_over_s"], "run": r, "seed": seed + r,
                             "lb": lo.value, "lb_se": lo.se, "ub": up.value, "ub_se": up.se})
        _write_rows(self.out / "bounds_runs.csv", runs)

    def benchmark(self):
        s = self.cfg.sections["benchmark"]
        for i, spec in enumerate(self.cfg.specs):
            row = self.row(i)
            if spec.is_european and self.cfg.model.d == 1:
                row["jamshidian"] = float(jamshidian_price(self.cfg.model, spec))
                continue
            res = lsm_price(self.cfg.model, spec, Basis(s["basis"]), int(s["n_paths"]), int(s["n_runs"]),
                            int(s["seed"]), out_of_sample=s["out_of_sample"].lower() in ("1", "true", "yes", "on"))
            row.update({"lsm": res.estimate, "lsm_se": res.se, "lsm_ci_lo": res.ci95[0], "lsm_ci_hi": res.ci95[1]})

    def hedge_experiment(self):
        s = self.cfg.sections["hedge"]
        n, seed = int(s["n_paths"]), int(s["seed"])
        dump = s["dump_errors"].lower() in ("1", "true", "yes", "on")
        reports = []
        for i, spec in enumerate(self.cfg.specs):
            h = self.hedge(i)
            tag = _tag(self.cfg, i)
            if spec.is_european:
                reps = [static_hedge_error(h, self.cfg.model, spec, n, seed)]
                if self.cfg.model.d == 1:
                    reps.append(dynamic_hedge_error(self.cfg.model, spec, int(s["rebalance"]), n, seed))
            else:
                reps = [semistatic_bermudan_hedge_error(h, n, seed)]
            for rep in reps:
                if dump:
                    write_errors_csv(rep, self.out / f"hedge_errors_{rep.strategy}_{tag}.csv")
            reports.extend(reps)
        write_reports_csv(reports, self.out / "hedge.csv")

    def sweep(self):
        s = self.cfg.sections["sweep"]
        b = self.cfg.sections["benchmark"]
        nodes = [int(v) for v in s["nodes"].split(",") if v.strip()]
        n_paths = None if s["n_paths"] == "auto" else int(s["n_paths"])
        rows = []
        for i, spec in enumerate(self.cfg.specs):
            if spec.is_european and self.cfg.model.d == 1:
                ref, lo, hi = float(jamshidian_price(self.cfg.model, spec)), math.nan, math.nan
            else:
                res = lsm_price(self.cfg.model, spec, Basis(b["basis"]), int(b["n_paths"]), int(b["n_runs"]),
                                int(b["seed"]))
                ref, (lo, hi) = res.estimate, res.ci95
            for q in nodes:
                qq = q - q % self.cfg.model.d if self.cfg.train.design is Design.LOCALLY_CONNECTED else q
                h = self.hedge(i, max(qq, self.cfg.model.d), n_paths)
                rows.append({"type": self.cfg.labels[i], "k_over_s": _ratio(self.cfg, spec), "q": h.config.q,
                             "direct": h.direct_estimate, "reference": ref, "ref_ci_lo": lo, "ref_ci_hi": hi,
                             "abs_error": abs(h.direct_estimate - ref), "epsilon": h.epsilon,
                             **{f"mae_{m}": d.mae for m, d in enumerate(h.diagnostics)}})
        _write_rows(self.out / "sweep.csv", rows)


def _manifest(cfg, out, threads):
    import numba
    import scipy

    mp = configparser.ConfigParser(interpolation=None)
    for section, values in cfg.sections.items():
        mp[section] = values
    mp["manifest"] = {
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "threads": str(threads),
        "config": str(cfg.path or ""),
    }
    with open(Path(out) / "manifest.ini", "w", encoding="utf-8") as fh:
        mp.write(fh)


def run(cfg, out, threads=1):
    """Execute the configured experiments, writing CSVs and manifest.ini into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _manifest(cfg, out, threads)
    runner = _Runner(cfg, out)
    steps = {"price": runner.price, "bounds": runner.bounds, "benchmark": runner.benchmark,
             "hedge": runner.hedge_experiment, "sweep": runner.sweep}
    for name in cfg.experiments:
        log.info("experiment %s", name)
        steps[name]()
    rows = [runner.results[i] for i in sorted(runner.results)]
    _write_rows(out / "results.csv", rows)
    return rows


# ---------------------------------------------------------------- report


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _manifest_key(path):
    mp = configparser.ConfigParser(interpolation=None)
    mp.read(path, encoding="utf-8")
    out = {}
    for s in mp.sections():
        if s == "manifest":
            continue
        for k, v in mp[s].items():
            if (s, k) in (("training", "seed"), ("bounds", "seed"), ("hedge", "seed"), ("benchmark", "seed"), ("run", "experiments")):
                continue
            out[f"{s}.{k}"] = v
    return out


def report(results_dir):
    """Merge the results.csv of every run directory below ``results_dir``.

    Each value column is averaged across runs with its SE (NA for a single
    run).  Runs whose manifests differ in anything but seeds are refused.
    """
    root = Path(results_dir)
    run_dirs = sorted({p.parent for p in root.rglob("results.csv")})
    if not run_dirs:
        raise ConfigError(f"no results.csv found under {root}")
    keys = [(d, _manifest_key(d / "manifest.ini")) for d in run_dirs if (d / "manifest.ini").exists()]
    if keys:
        base_dir, base = keys[0]
        for d, k in keys[1:]:
            diff = sorted(x for x in set(base) | set(k) if base.get(x) != k.get(x))
            if diff:
                lines = [f"  {x}: {base.get(x)!r} ({base_dir}) vs {k.get(x)!r} ({d})" for x in diff]
                raise ConfigError("runs have different configurations:\n" + "\n".join(lines))
    groups = {}
    order = []
    for d in run_dirs:
        for row in _read_csv(d / "results.csv"):
            key = (row["type"], row["k_over_s"])
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(row)
    merged = []
    for key in order:
        rows = groups[key]
        out = {"type": key[0], "k_over_s": key[1], "n_runs": len(rows)}
        cols = []
        for r in rows:
            cols += [c for c in r if c not in cols]
        for col in cols:
            if col in ("type", "k_over_s", "style", "payer", "strike") or col.endswith("_se"):
                continue
            vals = []
            for r in rows:
                try:
                    vals.append(float(r.get(col, "NA")))
                except ValueError:
                    pass
            vals = [v for v in vals if math.isfinite(v)]
            if not vals:
                continue
            out[col] = float(np.mean(vals))
            if len(vals) > 1:
                out[f"{col}_se"] = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
            else:
                # a single run keeps its own within-run SE when it has one
                own = next((r.get(f"{col}_se") for r in rows if r.get(col) not in (None, "NA")), None)
                try:
                    out[f"{col}_se"] = float(own)
                except (TypeError, ValueError):
                    out[f"{col}_se"] = math.nan
        merged.append(out)
    fields = []
    for r in merged:
        fields += [k for k in r if k not in fields]
    with open(root / "report.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, restval="NA")
        w.writeheader()
        for r in merged:
            w.writerow({k: _fmt(v) for k, v in r.items()})
    return merged


# ---------------------------------------------------------------- entry point


def _parser():
    p = argparse.ArgumentParser(prog="swaphedge", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run experiments from a config file")
    r.add_argument("--config", help="INI config file (defaults apply to missing keys)")
    r.add_argument("--out", default="results", help="output directory")
    r.add_argument("--seed", type=int, help="override the training seed")
    r.add_argument("--threads", type=int, default=1, help="worker threads for compiled kernels")
    r.add_argument("--experiment", help=f"comma-separated subset of {', '.join(EXPERIMENTS)}")
    r.add_argument("-v", "--verbose", action="store_true")
    g = sub.add_parser("report", help="merge run directories into one table")
    g.add_argument("results_dir")
    return p


def _set_threads(n):
    import warnings

    warnings.filterwarnings("ignore", message=".*TBB threading layer.*")
    import numba

    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config, seed=args.seed, experiment=args.experiment)
            threads = _set_threads(args.threads)
            run(cfg, args.out, threads)
        else:
            report(args.results_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        module = type(exc).__module__
        origin = exc.__traceback__
        while origin is not None and origin.tb_next is not None:
            origin = origin.tb_next
        where = origin.tb_frame.f_globals.get("__name__", module) if origin else module
        print(f"error [{where}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
