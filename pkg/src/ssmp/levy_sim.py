"""Killed spectrally negative Lévy paths on a grid and the inverse of their
exponential functional."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .measures import LevyTriplet


@dataclass
class LevyPath:
    """Grid path of xi; the last point of a killed path sits at kill_time
    and carries the left limit."""

    times: np.ndarray
    values: np.ndarray
    killed: bool = False
    kill_time: float | None = None
    jump_times: np.ndarray | None = None

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


class JumpSource:
    """Precomputed pieces of a triplet used by every increment sampler."""

    def __init__(self, triplet: LevyTriplet):
        self.triplet = triplet
        self.sampler = triplet.pi.sampler() if not triplet.pi.is_zero else None
        self.rate = self.sampler.mass if self.sampler is not None else 0.0
        # drift once the compensator of the sampled small jumps is moved into it
        comp = triplet.small_jump_compensator() if self.sampler is not None else 0.0
        self.drift = triplet.a - comp
        self.sigma = triplet.sigma

    def increments(self, dr: np.ndarray, rng: np.random.Generator):
        """Increments over cells of length dr (one per path).

        Returns (increment, killed, kill_fraction); kill_fraction is the
        share of the cell lived before the kill (1 when not killed).
        """
        dr = np.asarray(dr, dtype=float)
        n = dr.size
        inc = self.drift * dr
        if self.sigma > 0:
            inc = inc + self.sigma * np.sqrt(dr) * rng.standard_normal(n)
        if self.rate > 0:
            k = rng.poisson(self.rate * dr)
            total = int(k.sum())
            if total:
                marks = self.sampler.sample(rng, total)
                owner = np.repeat(np.arange(n), k)
                inc = inc + np.bincount(owner, weights=marks, minlength=n)
        q = self.triplet.q
        if q > 0:
            p_kill = -np.expm1(-q * dr)
            u = rng.random(n)
            killed = u < p_kill
            frac = np.ones(n)
            if killed.any():
                v = rng.random(int(killed.sum()))
                pk = p_kill[killed]
                frac[killed] = -np.log1p(-v * pk) / (q * dr[killed])
        else:
            killed = np.zeros(n, dtype=bool)
            frac = np.ones(n)
        return inc, killed, frac


def simulate_levy(triplet: LevyTriplet, horizon: float, dt: float, rng: np.random.Generator) -> LevyPath:
    """Euler grid of step dt with the sampled jump times added as grid points."""
    if not 0 < dt <= horizon:
        raise ValueError("need 0 < dt <= horizon")
    src = JumpSource(triplet)
    n_steps = int(math.ceil(horizon / dt - 1e-9))
    grid = np.minimum(np.arange(n_steps + 1) * dt, horizon)
    grid[-1] = horizon

    kill_time = None
    if triplet.q > 0:
        e = rng.exponential(1.0 / triplet.q)
        if e < horizon:
            kill_time = float(e)
    end = horizon if kill_time is None else kill_time

    if src.rate > 0:
        n_jumps = rng.poisson(src.rate * end)
        jt = np.sort(rng.random(n_jumps) * end)
        marks = src.sampler.sample(rng, n_jumps)
    else:
        jt, marks = np.empty(0), np.empty(0)

    times = grid[grid < end]
    times = np.union1d(np.append(times, end), jt)
    dr = np.diff(times)
    inc = src.drift * dr
    if src.sigma > 0:
        inc += src.sigma * np.sqrt(dr) * rng.standard_normal(dr.size)
    values = np.concatenate([[0.0], np.cumsum(inc)])
    if jt.size:
        pos = np.searchsorted(times, jt)
        jump_part = np.zeros(times.size)
        np.add.at(jump_part, pos, marks)
        values += np.cumsum(jump_part)
    return LevyPath(times, values, kill_time is not None, kill_time, jt)


def exponential_functional(path: LevyPath) -> np.ndarray:
    """Left-endpoint accumulation of int_0^s exp(xi_r) dr at the grid times."""
    w = np.exp(path.values[:-1]) * np.diff(path.times)
    return np.concatenate([[0.0], np.cumsum(w)])


def exponential_functional_inverse(path: LevyPath, t: float, acc: np.ndarray | None = None) -> float:
    """tau(t) = inf{s: int_0^s exp(xi_r) dr > t}, linear inside a cell.

    Returns +inf when the accumulated integral never exceeds t on a killed
    path; on an unkilled path that is too short a ValueError is raised.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if acc is None:
        acc = exponential_functional(path)
    if t == 0:
        return 0.0
    j = int(np.searchsorted(acc, t, side="right")) - 1
    if j >= acc.size - 1:
        if path.killed:
            return math.inf
        raise ValueError("path horizon too short for this t")
    return float(path.times[j] + (t - acc[j]) / math.exp(path.values[j]))


def levy_path_to_csv(path: LevyPath) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["time", "value", "killed"])
    n = path.times.size
    for i, (t, v) in enumerate(zip(path.times, path.values)):
        w.writerow([repr(float(t)), repr(float(v)), int(path.killed and i == n - 1)])
    return out.getvalue()
