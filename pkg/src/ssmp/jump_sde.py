"""Euler solvers for the jump-type SDEs.

Three variants share one engine:

``exact``   the signed SDE from z != 0, stopped at its first hit of zero;
``approx``  the m-truncated SDE that waits Exp(m) at zero and restarts at
            +-cramer/m (sign0 drift, rate 1/|z| ^ m, marks in [-1, 1-1/m]);
``abs``     the equation for |Z| with constant drift cramer_value.

Jumps act multiplicatively (z -> z * u).  Per step the candidate count is
Poisson(rate * mass * h) with the rate frozen at the left endpoint.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .batch import run_blocks
from .measures import (
    Quintuple,
    build_bar_pi,
    cramer_value,
    drift_coefficient,
    sign,
    sign0,
)
from .paths import PathBatch, SamplePath
from .rng import stream


@dataclass(frozen=True)
class SdeConfig:
    dt: float = 1e-3
    horizon: float = 1.0
    n_paths: int = 1000
    seed: int = 0
    cutoff: float = 1e-4
    m: int = 256
    rate_cap: float = 1e4
    skew: float = 0.5
    block_size: int = 10_000
    abs_scheme: str = "exact"  # or "euler" (Euler step, negative overshoots clamped to 0)

    def __post_init__(self):
        if not 0 < self.dt < self.horizon:
            raise ValueError("need 0 < dt < horizon")
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.rate_cap < self.m:
            raise ValueError("rate_cap must be >= m")
        if self.n_paths < 1:
            raise ValueError("n_paths must be positive")
        if not 0.0 <= self.skew <= 1.0:
            raise ValueError("skew must lie in [0, 1]")
        if not 0.0 <= self.cutoff < 1.0:
            raise ValueError("cutoff must lie in [0, 1)")
        if self.abs_scheme not in ("exact", "euler"):
            raise ValueError("abs_scheme must be 'exact' or 'euler'")

    def replace(self, **kw) -> "SdeConfig":
        d = self.__dict__.copy()
        d.update(kw)
        return SdeConfig(**d)

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.horizon / self.dt - 1e-9))

    def grid(self) -> np.ndarray:
        g = np.minimum(np.arange(self.n_steps + 1) * self.dt, self.horizon)
        g[-1] = self.horizon
        return g


@dataclass(frozen=True)
class RestartProcess:
    """Exit from zero: after Exp(rate) the path jumps to +-scale/m."""

    m: int
    scale: float
    skew: float = 0.5

    @property
    def rate(self) -> float:
        return float(self.m)

    @property
    def sites(self) -> tuple[float, float]:
        return (-1.0 / self.m, 1.0 / self.m)

    def landing(self, rng: np.random.Generator, n: int) -> np.ndarray:
        up = rng.random(n) < self.skew
        return np.where(up, 1.0, -1.0) * self.scale / self.m


def step_drift(quintuple: Quintuple, z_prev, dt, cutoff: float = 1e-4, use_sign0: bool = False,
               factor=1.0):
    """kappa sign(z) dt minus sign(z) factor dt int_sampled (u - 1) barPi(du).

    ``factor`` is 1 ^ cap|z| when the jump rate is capped.
    """
    s = sign0(z_prev) if use_sign0 else sign(z_prev)
    bp = build_bar_pi(quintuple, cutoff)
    comp = bp.integrate(lambda u: u - 1.0, part="sampled")
    return (drift_coefficient(quintuple) - np.asarray(factor) * comp) * s * dt


class _Coefficients:
    """Constants of one solver variant."""

    def __init__(self, quintuple: Quintuple, kind: str, cfg: SdeConfig):
        self.kind = kind
        self.sigma = quintuple.triplet.sigma
        self.kappa = drift_coefficient(quintuple)
        self.cramer = cramer_value(quintuple)
        if kind == "approx":
            cut, self.cap = max(cfg.cutoff, 1.0 / cfg.m), float(cfg.m)
        else:
            cut, self.cap = cfg.cutoff, float(cfg.rate_cap)
        bp = build_bar_pi(quintuple, cut)
        self.bar_pi = bp
        self.sampler = bp.sampler()
        self.mass = self.sampler.mass
        if kind == "abs":
            self.comp = bp.integrate(lambda u: np.abs(u) - 1.0, part="sampled")
        else:
            self.comp = bp.integrate(lambda u: u - 1.0, part="sampled")
        self.restart = RestartProcess(cfg.m, self.cramer, cfg.skew)
        self.abs_exact = kind == "abs" and cfg.abs_scheme == "exact"


def _apply_jumps(z, h, co: _Coefficients, rng, t0, events, ids):
    """Multiply z by the sampled marks; returns (z, n_negative_marks, hit_zero)."""
    n = z.size
    negs = np.zeros(n, dtype=np.int64)
    hit0 = np.zeros(n, dtype=bool)
    if co.mass <= 0:
        return z, negs, hit0
    absz = np.abs(z)
    with np.errstate(divide="ignore"):
        rate = np.where(absz > 0, np.minimum(co.cap, 1.0 / absz), 0.0)
    k = rng.poisson(rate * co.mass * h)
    total = int(k.sum())
    if total == 0:
        return z, negs, hit0
    marks = co.sampler.sample(rng, total)
    if co.kind == "abs":
        marks = np.abs(marks)
    owner = np.repeat(np.arange(n), k)
    if events is not None:
        z = z.copy()
        offs = rng.random(total)
        for j, (i, u) in enumerate(zip(owner, marks)):
            before = z[i]
            z[i] = before * u
            assert abs(z[i]) <= abs(before)
            events.append((int(ids[i]), float(t0[i] + h[i] * offs[j]), float(before), float(z[i]), float(u)))
    else:
        f = np.ones(n)
        np.multiply.at(f, owner, marks)
        z = z * f
    negs = np.bincount(owner, weights=(marks < 0), minlength=n).astype(np.int64)
    hit0 = np.bincount(owner, weights=(marks == 0), minlength=n) > 0
    return z, negs, hit0


def _sqrt_diffusion_step(x, drift, h, sigma, rng):
    """Exact law of dX = drift dt + sigma sqrt(X) dB over h (drift > 0, X >= 0).

    X_h is (sigma^2 h / 4) times a noncentral chi-square with 4 drift / sigma^2
    degrees of freedom and noncentrality 4 X / (sigma^2 h).
    """
    scale = 0.25 * sigma * sigma * h
    return scale * rng.noncentral_chisquare(drift / (0.25 * sigma * sigma), x / scale)


def _continuous_part(z, h, co: _Coefficients, rng):
    absz = np.abs(z)
    factor = np.minimum(1.0, co.cap * absz)
    if co.abs_exact and co.sigma > 0:
        drift = co.cramer - factor * co.comp
        pos = drift > 0
        out = np.maximum(z + drift * h, 0.0)
        if pos.any():
            out[pos] = _sqrt_diffusion_step(z[pos], drift[pos], h[pos], co.sigma, rng)
        if (~pos).any():
            k = ~pos
            out[k] = z[k] + drift[k] * h[k] + co.sigma * np.sqrt(z[k] * h[k]) * rng.standard_normal(int(k.sum()))
        return out
    if co.kind == "abs":
        d = (co.cramer - factor * co.comp) * h
    else:
        s = sign0(z) if co.kind == "approx" else sign(z)
        d = (co.kappa - factor * co.comp) * s * h
    if co.sigma > 0:
        d = d + co.sigma * np.sqrt(absz * h) * rng.standard_normal(z.size)
    return z + d


def _engine(quintuple: Quintuple, kind: str, z0: float, cfg: SdeConfig, n: int, rng: np.random.Generator,
            record_times=None, integrands: Sequence[Callable] = (), record_events: bool = False) -> PathBatch:
    co = _Coefficients(quintuple, kind, cfg)
    grid = cfg.grid()
    if record_times is None:
        rec_idx = np.arange(grid.size)
    else:
        rec_idx = np.rint(np.asarray(record_times, float) / cfg.dt).astype(int)
        if np.any(np.abs(grid[np.minimum(rec_idx, grid.size - 1)] - record_times) > 1e-9 * max(1.0, cfg.horizon)):
            raise ValueError("record times must lie on the dt grid")
    rec_times = grid[rec_idx]
    rec_at = {int(j): c for c, j in enumerate(rec_idx)}
    values = np.zeros((n, rec_idx.size))
    flips = np.zeros((n, rec_idx.size), dtype=np.int64)
    integrals = np.zeros((n, len(integrands))) if integrands else None
    events = [] if record_events else None

    z = np.full(n, float(z0))
    absorbed = np.zeros(n, dtype=bool)
    abs_time = np.full(n, np.inf)
    nflip = np.zeros(n, dtype=np.int64)
    ids = np.arange(n)
    wait = np.full(n, np.inf)
    if kind == "approx":
        at0 = z == 0
        wait[at0] = rng.exponential(1.0 / co.restart.rate, int(at0.sum()))

    for j in range(grid.size):
        if j in rec_at:
            values[:, rec_at[j]] = z
            flips[:, rec_at[j]] = nflip
        if j == grid.size - 1:
            break
        t, h = grid[j], grid[j + 1] - grid[j]
        if integrands:
            live = ~absorbed
            for c, f in enumerate(integrands):
                integrals[live, c] += f(z[live]) * h
        idx = np.flatnonzero(~absorbed)
        if kind == "approx":
            zero = z[idx] == 0
            iz = idx[zero]
            if iz.size:
                w = np.maximum(wait[iz], 0.0)
                go = w < h
                wait[iz[~go]] = w[~go] - h
                ig = iz[go]
                z[ig] = co.restart.landing(rng, ig.size)
                wait[ig] = np.inf
                sub = h - w[go]
                _step(z, ig, sub, t + w[go], co, rng, absorbed, abs_time, nflip, wait, events, kind)
            idx = idx[~zero]
        if idx.size:
            _step(z, idx, np.full(idx.size, h), np.full(idx.size, t), co, rng, absorbed, abs_time,
                  nflip, wait, events, kind)

    out = PathBatch(rec_times, values, absorbed & (abs_time <= cfg.horizon), abs_time, flips,
                    integrals=integrals)
    out.events = events or []
    return out


def _step(z, idx, h, t0, co, rng, absorbed, abs_time, nflip, wait, events, kind):
    zi = z[idx]
    zc = _continuous_part(zi, h, co, rng)
    if kind == "abs":
        zc = np.maximum(zc, 0.0)
        zn, _, _ = _apply_jumps(zc, h, co, rng, t0, events, idx)
        z[idx] = zn
        if co.cramer <= 0:
            dead = zn == 0
            absorbed[idx[dead]] = True
            abs_time[idx[dead]] = t0[dead] + h[dead]
        return
    crossed = (zc * np.sign(zi) <= 0) & (zi != 0)
    theta = np.where(crossed, np.abs(zi) / np.maximum(np.abs(zi - zc), 1e-300), 1.0)
    ok = ~crossed
    zn = zc.copy()
    if ok.any():
        sub = np.flatnonzero(ok)
        zj, negs, hit0 = _apply_jumps(zc[sub], h[sub], co, rng, t0[sub], events, idx[sub])
        zn[sub] = zj
        nflip[idx[sub]] += negs
        crossed[sub[hit0]] = True
        theta[sub[hit0]] = 1.0
    zn[crossed] = 0.0
    z[idx] = zn
    ic = idx[crossed]
    if ic.size:
        tc = t0[crossed] + theta[crossed] * h[crossed]
        if kind == "exact":
            absorbed[ic] = True
            abs_time[ic] = tc
        else:
            left = h[crossed] * (1.0 - theta[crossed])
            wait[ic] = rng.exponential(1.0 / co.restart.rate, ic.size) - left


# ---------------------------------------------------------------------------
# public entry points


def _batch(quintuple, kind, z, cfg, record_times, integrands, workers, tag, record_events=False):
    fn = partial(_engine, quintuple, kind, z, cfg, record_times=record_times, integrands=tuple(integrands),
                 record_events=record_events)
    return run_blocks(fn, cfg.n_paths, cfg.seed, tag, cfg.block_size, workers)


def simulate_sde_batch(quintuple: Quintuple, z: float, config: SdeConfig, record_times=None,
                       integrands: Sequence[Callable] = (), workers: int | None = None,
                       record_events: bool = False) -> PathBatch:
    if z == 0:
        raise ValueError("simulate_sde needs z != 0; use simulate_approx_sde to start from zero")
    if abs(z) < 1.0 / config.rate_cap:
        warnings.warn("|z| is below 1/rate_cap; the capped jump rate biases the scheme", stacklevel=2)
    return _batch(quintuple, "exact", z, config, record_times, integrands, workers, "sde", record_events)


def simulate_approx_sde_batch(quintuple: Quintuple, z: float, config: SdeConfig, record_times=None,
                              integrands: Sequence[Callable] = (), workers: int | None = None,
                              record_events: bool = False) -> PathBatch:
    return _batch(quintuple, "approx", z, config, record_times, integrands, workers, "approx", record_events)


def simulate_abs_sde_batch(quintuple: Quintuple, x0: float, config: SdeConfig, record_times=None,
                           integrands: Sequence[Callable] = (), workers: int | None = None,
                           record_events: bool = False) -> PathBatch:
    if x0 < 0:
        raise ValueError("x0 must be non-negative")
    return _batch(quintuple, "abs", x0, config, record_times, integrands, workers, "abs", record_events)


def _single(quintuple, kind, z, config, path_id, tag) -> SamplePath:
    b = _engine(quintuple, kind, z, config, 1, stream(config.seed, tag + "-path", path_id),
                record_events=True)
    at = b.absorption_time[0]
    p = SamplePath(b.times, b.values[0], bool(b.absorbed[0]), float(at) if np.isfinite(at) else None,
                   events=[e[1:] for e in b.events])
    p.sign_change_times = [e[0] for e in p.events if e[3] < 0]
    return p


def simulate_sde(quintuple: Quintuple, z: float, config: SdeConfig, path_id: int = 0) -> SamplePath:
    """One path of the signed SDE from z != 0, stopped when it reaches zero."""
    if z == 0:
        raise ValueError("simulate_sde needs z != 0; use simulate_approx_sde to start from zero")
    return _single(quintuple, "exact", z, config, path_id, "sde")


def simulate_approx_sde(quintuple: Quintuple, z: float, config: SdeConfig, path_id: int = 0) -> SamplePath:
    """One path of the m-truncated SDE with restarts from zero."""
    return _single(quintuple, "approx", z, config, path_id, "approx")


def simulate_abs_sde(quintuple: Quintuple, x0: float, config: SdeConfig, path_id: int = 0) -> SamplePath:
    """One path of the absolute-value SDE (drift cramer_value, jumps x -> x|u|)."""
    if x0 < 0:
        raise ValueError("x0 must be non-negative")
    return _single(quintuple, "abs", x0, config, path_id, "abs")
