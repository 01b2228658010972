"""Euler path generation for the factor process.

Paths are generated in fixed-size blocks; block ``k`` draws its normals from a
Philox stream keyed on ``(seed, k)``, so a PathSet is bit-identical however the
blocks are scheduled.  Normals come from the inverse normal CDF applied to
uniforms.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from . import termstructure as ts
from .errors import ContractError, DomainError

__all__ = [
    "Measure",
    "PathSet",
    "simulate",
    "accrue_numeraire",
    "dump_pathset",
    "load_pathset",
    "BLOCK_SIZE",
    "WEEKLY",
]

WEEKLY = 1.0 / 52.0
BLOCK_SIZE = 8192
_MAGIC = b"SWHPATH1"


class Measure(str, enum.Enum):
    RISK_NEUTRAL = "risk_neutral"
    FORWARD = "forward"


@dataclass
class PathSet:
    """Simulated factor trajectories on an output grid.

    ``numeraire`` holds the trapezoidal bank account under the risk-neutral
    measure and P(t, T_M) under the T_M-forward measure.
    """

    measure: Measure
    grid: np.ndarray
    paths: np.ndarray  # (n_paths, n_times, d)
    numeraire: np.ndarray  # (n_paths, n_times)
    seed: int
    maturity: float | None = None  # T_M of the forward measure

    @property
    def n_paths(self):
        return self.paths.shape[0]

    def index_of(self, t):
        """Grid index of time ``t`` (must be a grid point)."""
        i = int(np.argmin(np.abs(self.grid - t)))
        if abs(self.grid[i] - t) > 1e-9:
            raise DomainError(f"time {t} is not on the simulation grid")
        return i

    def at(self, t):
        return self.paths[:, self.index_of(t), :]


def _substeps(grid, dt):
    """Fine Euler grid containing every output time; returns (fine, output_idx)."""
    fine = [grid[0]]
    idx = [0]
    for lo, hi in zip(grid[:-1], grid[1:]):
        n = 1 if dt is None else max(1, int(np.ceil((hi - lo) / dt - 1e-9)))
        fine.extend(lo + (hi - lo) * np.arange(1, n + 1) / n)
        fine[-1] = hi
        idx.append(len(fine) - 1)
    return np.asarray(fine), np.asarray(idx)


def _block_normals(seed, block, n, n_steps, d):
    bitgen = np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,)))
    u = np.random.Generator(bitgen).random((n_steps, n, d))
    # random() can return exactly 0
    np.clip(u, 1e-300, None, out=u)
    return ndtri(u)


def simulate(model, grid, n_paths, measure=Measure.RISK_NEUTRAL, seed=0, dt=WEEKLY,
             maturity=None):
    """Euler-discretized factor paths.

    Parameters
    ----------
    model : GaussianModel
    grid : array_like
        Strictly increasing output times starting at 0.  Only these times are
        stored; Euler steps of at most ``dt`` are taken in between.
    n_paths : int
    measure : Measure
        Under ``FORWARD`` the drift carries the Girsanov term
        -sigma_i . nu(t, maturity) and ``maturity`` is required.
    seed : int
    dt : float or None
        Maximum Euler step; None steps directly between output times.

    Returns
    -------
    PathSet
    """
    measure = Measure(measure)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or grid[0] != 0.0:
        raise DomainError("grid must be one-dimensional and start at 0")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing")
    if n_paths < 1:
        raise DomainError("n_paths must be at least 1")
    if measure is Measure.FORWARD:
        if maturity is None or maturity < grid[-1]:
            raise DomainError("forward measure needs a maturity beyond the grid")

    fine, out_idx = _substeps(grid, dt)
    steps = np.diff(fine)
    d = model.d
    a = model.a
    drift_shift = np.zeros((steps.size, d))
    if measure is Measure.FORWARD:
        # sigma_i . nu(t, T) = sum_j C_ij B_j(t, T)
        for k, t in enumerate(fine[:-1]):
            drift_shift[k] = model.factor_cov @ ts._b(a, maturity - t)
    phi = ts.short_rate_shift(model, fine)

    paths = np.empty((n_paths, grid.size, d))
    numeraire = np.empty((n_paths, grid.size))
    paths[:, 0, :] = 0.0
    sqrt_dt = np.sqrt(steps)
    out_pos = {int(j): i for i, j in enumerate(out_idx)}

    for block, start in enumerate(range(0, n_paths, BLOCK_SIZE)):
        n = min(BLOCK_SIZE, n_paths - start)
        z = _block_normals(seed, block, n, steps.size, d)
        x = np.zeros((n, d))
        log_bank = np.zeros(n)
        r_prev = np.full(n, phi[0])
        for k in range(steps.size):
            dw = z[k] * sqrt_dt[k]
            x = x + (-a * x - drift_shift[k]) * steps[k] + dw @ model.sigma.T
            r = phi[k + 1] + x.sum(axis=1)
            log_bank += 0.5 * (r_prev + r) * steps[k]
            r_prev = r
            pos = out_pos.get(k + 1)
            if pos is not None:
                paths[start:start + n, pos] = x
                if measure is Measure.RISK_NEUTRAL:
                    numeraire[start:start + n, pos] = np.exp(log_bank)
        if measure is Measure.RISK_NEUTRAL:
            numeraire[start:start + n, 0] = 1.0

    if measure is Measure.FORWARD:
        for i, t in enumerate(grid):
            numeraire[:, i] = ts.bond_price(model, t, maturity, paths[:, i, :])

    return PathSet(measure, grid, paths, numeraire, int(seed), maturity)


def accrue_numeraire(model, pathset):
    """Trapezoidal bank account over the stored grid of a risk-neutral set.

    B(t_j) ~ exp(sum_i (r_{i-1} + r_i)/2 (t_i - t_{i-1})).  Accurate only when
    the stored grid itself is fine (weekly or denser).
    """
    if pathset.measure is not Measure.RISK_NEUTRAL:
        raise ContractError("numeraire accrual requires a risk-neutral path set")
    r = ts.short_rate(model, pathset.grid, pathset.paths)
    incr = 0.5 * (r[:, 1:] + r[:, :-1]) * np.diff(pathset.grid)
    log_b = np.concatenate([np.zeros((pathset.n_paths, 1)), np.cumsum(incr, axis=1)], axis=1)
    return replace(pathset, numeraire=np.exp(log_b))


def dump_pathset(pathset, path):
    """Write a flat little-endian dump: magic, d, n_paths, n_times, then arrays."""
    n, m, d = pathset.paths.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<qqq", d, n, m))
        fh.write(struct.pack("<q", 0 if pathset.measure is Measure.RISK_NEUTRAL else 1))
        fh.write(struct.pack("<qd", pathset.seed, np.nan if pathset.maturity is None else pathset.maturity))
        fh.write(pathset.grid.astype("<f8").tobytes())
        fh.write(pathset.paths.astype("<f8").tobytes())
        fh.write(pathset.numeraire.astype("<f8").tobytes())


def load_pathset(path):
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise ContractError(f"{path} is not a path set dump")
        d, n, m = struct.unpack("<qqq", fh.read(24))
        (flag,) = struct.unpack("<q", fh.read(8))
        seed, maturity = struct.unpack("<qd", fh.read(16))
        grid = np.frombuffer(fh.read(8 * m), dtype="<f8").copy()
        paths = np.frombuffer(fh.read(8 * n * m * d), dtype="<f8").reshape(n, m, d).copy()
        num = np.frombuffer(fh.read(8 * n * m), dtype="<f8").reshape(n, m).copy()
    measure = Measure.RISK_NEUTRAL if flag == 0 else Measure.FORWARD
    return PathSet(measure, grid, paths, num, seed, None if np.isnan(maturity) else maturity)
