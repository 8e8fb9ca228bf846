"""Lamperti and Lamperti-Kiu time-change constructions.

Two families of entry points:

* ``lamperti_positive`` / ``lamperti_kiu`` return one ``SamplePath`` on the
  external grid of step dt, with every sign change and its factor recorded.
* ``lamperti_positive_batch`` / ``lamperti_kiu_batch`` evolve many paths at
  once and record only the requested times.  The internal step adapts so
  that each cell covers about ``dt / resolution`` of external time.
"""
from __future__ import annotations

import math
from functools import partial
from dataclasses import dataclass

import numpy as np

from .batch import run_blocks
from .levy_sim import JumpSource, LevyPath, exponential_functional, simulate_levy
from .measures import ConfigurationError, LevyTriplet, MixtureSampler, Quintuple
from .paths import PathBatch, SamplePath

ABSORB_GROWTH = 1e-15


@dataclass(frozen=True)
class KiuStage:
    """Stage data for one sign: Lévy triplet, sign-change rate and the
    sampler of V (U = log|V|)."""

    triplet: LevyTriplet
    rate: float
    v_sampler: MixtureSampler | None

    @classmethod
    def from_quintuple(cls, q: Quintuple) -> "KiuStage":
        if q.v.is_zero or q.v.total_mass() == 0:
            return cls(q.triplet, 0.0, None)
        s = q.v.sampler()
        return cls(q.triplet, s.mass, s)


def _as_stage(x) -> KiuStage:
    if isinstance(x, KiuStage):
        return x
    if isinstance(x, Quintuple):
        return KiuStage.from_quintuple(x)
    if isinstance(x, LevyTriplet):
        return KiuStage(x, 0.0, None)
    raise TypeError(f"cannot use {type(x).__name__} as stage data")


def _record_grid(horizon: float, dt: float) -> np.ndarray:
    n = int(math.ceil(horizon / dt - 1e-9))
    g = np.minimum(np.arange(n + 1) * dt, horizon)
    g[-1] = horizon
    return g


# ---------------------------------------------------------------------------
# single-path Lamperti on the fixed internal grid


def _append_chunk(parts, chunk: LevyPath, s0: float, x0: float):
    parts.append((chunk.times[1:] + s0, chunk.values[1:] + x0))


def lamperti_positive(triplet: LevyTriplet, z: float, horizon: float, dt: float,
                      rng: np.random.Generator, chunk: float | None = None) -> SamplePath:
    """Z_t = z exp(xi_{tau(t/z)}) on the external grid of step dt."""
    if not z > 0:
        raise ValueError("lamperti_positive needs z > 0")
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    target = horizon / z
    dt_int = dt / z
    chunk = chunk or max(target, 1.0)
    times, values = [np.zeros(1)], [np.zeros(1)]
    s0, x0, acc0 = 0.0, 0.0, 0.0
    killed = absorbed = False
    while True:
        c = simulate_levy(triplet, chunk, min(dt_int, chunk), rng)
        times.append(c.times[1:] + s0)
        values.append(c.values[1:] + x0)
        growth = float(np.sum(np.exp(c.values[:-1] + x0) * np.diff(c.times)))
        s0, x0, acc0 = s0 + c.horizon, x0 + c.values[-1], acc0 + growth
        if c.killed:
            killed = True
            break
        if acc0 > target:
            break
        if growth < ABSORB_GROWTH * max(target, 1e-300):
            absorbed = True
            break
    path = LevyPath(np.concatenate(times), np.concatenate(values), killed or absorbed)
    acc = exponential_functional(path)
    grid = _record_grid(horizon, dt)
    out = np.zeros_like(grid)
    t_abs = None
    for k, t in enumerate(grid):
        u = t / z
        j = int(np.searchsorted(acc, u, side="right")) - 1
        if j >= acc.size - 1:
            t_abs = z * float(acc[-1])
            break
        out[k] = z * math.exp(path.values[j])
    return SamplePath(grid, out, t_abs is not None, t_abs)


# ---------------------------------------------------------------------------
# vectorised engines


class _Recorder:
    def __init__(self, n: int, record_times: np.ndarray):
        self.times = np.asarray(record_times, dtype=float)
        self.values = np.zeros((n, self.times.size))
        self.next = np.zeros(n, dtype=np.int64)

    def fill(self, idx: np.ndarray, upto: np.ndarray, val: np.ndarray, inclusive=False):
        """Write val for every pending record time below upto (paths idx)."""
        nt = self.times.size
        while idx.size:
            r = self.next[idx]
            ok = r < nt
            tr = self.times[np.minimum(r, nt - 1)]
            ok &= (tr <= upto) if inclusive else (tr < upto)
            if not ok.any():
                return
            idx, r, upto, val = idx[ok], r[ok], upto[ok], val[ok]
            self.values[idx, r] = val
            self.next[idx] = r + 1


def _step_sizes(xi, absz, target, dr_max):
    with np.errstate(over="ignore"):
        dr = target * np.exp(-xi) / absz
    return np.minimum(dr, dr_max)


def lamperti_positive_batch(triplet: LevyTriplet, z: float, n_paths: int, horizon: float, dt: float,
                            rng: np.random.Generator, record_times=None, resolution: float = 1.0,
                            dr_max: float = 0.05) -> PathBatch:
    """Vectorised Lamperti transform from z > 0 for n_paths paths."""
    if not z > 0:
        raise ValueError("lamperti_positive_batch needs z > 0")
    rec_t = _record_grid(horizon, dt) if record_times is None else np.asarray(record_times, float)
    n = int(n_paths)
    src = JumpSource(triplet)
    target = dt / resolution
    floor = ABSORB_GROWTH * max(horizon, 1e-300)
    xi = np.zeros(n)
    T = np.zeros(n)
    abs_time = np.full(n, np.inf)
    rec = _Recorder(n, rec_t)
    live = np.arange(n)
    t_end = rec_t[-1] if rec_t.size else 0.0
    while live.size:
        x, t0 = xi[live], T[live]
        dr = _step_sizes(x, z, target, dr_max)
        level = z * np.exp(x)
        inc, killed, frac = src.increments(dr, rng)
        h = level * dr * frac
        gone = killed | (level * dr_max < floor)
        # a path absorbed by negligible growth stops at its current time
        h = np.where(killed | ~gone, h, 0.0)
        rec.fill(live, t0 + h, level)
        T[live] = t0 + h
        xi[live] = x + inc
        abs_time[live[gone]] = t0[gone] + h[gone]
        keep = ~gone & (T[live] <= t_end)
        live = live[keep]
    absorbed = np.isfinite(abs_time) & (abs_time <= horizon)
    return PathBatch(rec_t, rec.values, absorbed, np.where(absorbed, abs_time, np.inf))


def lamperti_kiu_batch(q_plus, q_minus, z: float, n_paths: int, horizon: float, dt: float,
                       rng: np.random.Generator, record_times=None, resolution: float = 1.0,
                       dr_max: float = 0.05, record_events: bool = False) -> PathBatch:
    """Vectorised Lamperti-Kiu construction from z != 0.

    The running log-magnitude sums the Lévy increments of every stage plus
    U = log|V| at each stage end; the parity of the stage count gives the
    sign.  Stage k runs for an Exp(p) internal time, p the V-mass of the
    stage's sign.
    """
    if z == 0:
        raise ValueError("lamperti_kiu_batch needs z != 0")
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    stages = {1: _as_stage(q_plus), -1: _as_stage(q_minus)}
    srcs = {s: JumpSource(st.triplet) for s, st in stages.items()}
    rec_t = _record_grid(horizon, dt) if record_times is None else np.asarray(record_times, float)
    n = int(n_paths)
    absz = abs(z)
    target = dt / resolution
    floor = ABSORB_GROWTH * max(horizon, 1e-300)
    s0 = 1 if z > 0 else -1

    def draw_life(signs: np.ndarray) -> np.ndarray:
        out = np.full(signs.size, np.inf)
        for s in (1, -1):
            sel = signs == s
            p = stages[s].rate
            if p > 0 and sel.any():
                out[sel] = rng.exponential(1.0 / p, int(sel.sum()))
        return out

    xi = np.zeros(n)
    comp = np.zeros(n)  # Kahan compensation for xi
    T = np.zeros(n)
    sgn = np.full(n, s0, dtype=np.int64)
    life = draw_life(sgn)
    flips = np.zeros(n, dtype=np.int64)
    abs_time = np.full(n, np.inf)
    rec = _Recorder(n, rec_t)
    flip_rec = _Recorder(n, rec_t)
    events = []
    live = np.arange(n)
    t_end = rec_t[-1] if rec_t.size else 0.0
    symmetric = q_plus is q_minus or (isinstance(q_plus, Quintuple) and q_plus == q_minus)
    while live.size:
        x, t0, sg, lf = xi[live], T[live], sgn[live], life[live]
        dr = np.minimum(_step_sizes(x, absz, target, dr_max), lf)
        level = absz * np.exp(x)
        if symmetric:
            inc, killed, frac = srcs[1].increments(dr, rng)
        else:
            inc = np.empty(live.size)
            killed = np.zeros(live.size, dtype=bool)
            frac = np.ones(live.size)
            for s in (1, -1):
                sel = np.flatnonzero(sg == s)
                if sel.size:
                    inc[sel], killed[sel], frac[sel] = srcs[s].increments(dr[sel], rng)
        h = level * dr * frac
        gone = killed | (level * dr_max < floor)
        h = np.where(killed | ~gone, h, 0.0)
        rec.fill(live, t0 + h, sg * level)
        flip_rec.fill(live, t0 + h, flips[live].astype(float))
        t1 = t0 + h
        T[live] = t1
        # compensated summation of the log-magnitude
        y = inc - comp[live]
        s_new = x + y
        comp[live] = (s_new - x) - y
        xi[live] = s_new
        lf = lf - dr
        ends = ~gone & (lf <= 0)
        if ends.any():
            ie = np.flatnonzero(ends)
            idx = live[ie]
            for s in (1, -1):
                sel = ie[sg[ie] == s]
                if not sel.size:
                    continue
                st = stages[s]
                v = st.v_sampler.sample(rng, sel.size) if st.v_sampler is not None else -np.ones(sel.size)
                u = np.log(-v)
                before = absz * np.exp(xi[live[sel]])
                xi[live[sel]] = xi[live[sel]] + u
                if record_events:
                    after = absz * np.exp(xi[live[sel]])
                    for j, p in enumerate(live[sel]):
                        events.append((int(p), float(T[p]), float(s * before[j]), float(-s * after[j]), float(v[j])))
            sgn[idx] = -sgn[idx]
            flips[idx] += 1
            lf[ie] = draw_life(sgn[idx])
        life[live] = lf
        abs_time[live[gone]] = t1[gone]
        keep = ~gone & (t1 <= t_end)
        live = live[keep]
    absorbed = np.isfinite(abs_time) & (abs_time <= horizon)
    # a path that stopped early keeps its last flip count at later times
    late = np.arange(rec_t.size)[None, :] >= flip_rec.next[:, None]
    flip_rec.values = np.where(late, flips[:, None], flip_rec.values)
    out = PathBatch(rec_t, rec.values, absorbed, np.where(absorbed, abs_time, np.inf),
                    flip_rec.values.astype(np.int64))
    out.events = events
    return out


def lamperti_kiu(q_plus, q_minus, z: float, horizon: float, dt: float, rng: np.random.Generator,
                 resolution: float = 1.0) -> SamplePath:
    """One Lamperti-Kiu path on the external grid of step dt.

    ``events`` holds (time, Z before, Z after, V) at each sign change.
    """
    b = lamperti_kiu_batch(q_plus, q_minus, z, 1, horizon, dt, rng, resolution=resolution,
                           record_events=True)
    p = b.path(0)
    p.sign_change_times = [e[0] for e in p.events]
    return p


# ---------------------------------------------------------------------------
# block-parallel drivers


def _positive_block(triplet, z, horizon, dt, record_times, resolution, n, rng):
    return lamperti_positive_batch(triplet, z, n, horizon, dt, rng, record_times, resolution)


def _kiu_block(q_plus, q_minus, z, horizon, dt, record_times, resolution, record_events, n, rng):
    return lamperti_kiu_batch(q_plus, q_minus, z, n, horizon, dt, rng, record_times, resolution,
                              record_events=record_events)


def lamperti_positive_paths(triplet: LevyTriplet, z: float, n_paths: int, horizon: float, dt: float,
                            seed: int, record_times=None, resolution: float = 1.0,
                            block_size: int = 10_000, workers: int | None = None) -> PathBatch:
    fn = partial(_positive_block, triplet, z, horizon, dt, record_times, resolution)
    return run_blocks(fn, n_paths, seed, "lamperti", block_size, workers)


def lamperti_kiu_paths(q_plus, q_minus, z: float, n_paths: int, horizon: float, dt: float, seed: int,
                       record_times=None, resolution: float = 1.0, block_size: int = 10_000,
                       workers: int | None = None, record_events: bool = False) -> PathBatch:
    fn = partial(_kiu_block, q_plus, q_minus, z, horizon, dt, record_times, resolution, record_events)
    return run_blocks(fn, n_paths, seed, "kiu", block_size, workers)
