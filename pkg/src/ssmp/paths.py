"""Path containers and delimited-text export."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np


@dataclass
class SamplePath:
    """One simulated trajectory.

    ``events`` holds (time, before, after, factor) for every applied jump or
    sign change so multiplicativity can be checked after the fact.
    """

    times: np.ndarray
    values: np.ndarray
    absorbed: bool = False
    absorption_time: float | None = None
    sign_change_times: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def value_at(self, t: float) -> float:
        i = np.searchsorted(self.times, t, side="right") - 1
        return float(self.values[max(i, 0)])


@dataclass
class PathBatch:
    """Many paths recorded on a shared time grid, values shaped (n, len(times))."""

    times: np.ndarray
    values: np.ndarray
    absorbed: np.ndarray
    absorption_time: np.ndarray
    sign_changes: np.ndarray | None = None  # sign-change counts at each recorded time
    seeds: list = field(default_factory=list)
    events: list = field(default_factory=list)
    integrals: np.ndarray | None = None  # (n, k) time integrals of requested functions

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    def at(self, t: float) -> np.ndarray:
        """Marginal sample at a recorded time."""
        idx = np.flatnonzero(np.isclose(self.times, t, rtol=0, atol=1e-12))
        if idx.size == 0:
            raise KeyError(f"time {t} was not recorded")
        return self.values[:, idx[0]]

    def path(self, i: int) -> SamplePath:
        at = self.absorption_time[i]
        return SamplePath(
            self.times.copy(),
            self.values[i].copy(),
            bool(self.absorbed[i]),
            None if not np.isfinite(at) else float(at),
            events=[e[1:] for e in self.events if e[0] == i],
        )

    @staticmethod
    def concat(parts: list["PathBatch"]) -> "PathBatch":
        if not parts:
            raise ValueError("nothing to concatenate")
        offset, events = 0, []
        for p in parts:
            events.extend((e[0] + offset,) + tuple(e[1:]) for e in p.events)
            offset += p.n_paths
        sc = None
        if all(p.sign_changes is not None for p in parts):
            sc = np.concatenate([p.sign_changes for p in parts])
        integrals = None
        if all(p.integrals is not None for p in parts):
            integrals = np.concatenate([p.integrals for p in parts])
        return PathBatch(
            parts[0].times,
            np.concatenate([p.values for p in parts]),
            np.concatenate([p.absorbed for p in parts]),
            np.concatenate([p.absorption_time for p in parts]),
            sc,
            [s for p in parts for s in p.seeds],
            events,
            integrals,
        )


def fold_to_abs(path):
    """Pointwise absolute value; metadata is kept."""
    if isinstance(path, PathBatch):
        return PathBatch(
            path.times, np.abs(path.values), path.absorbed.copy(), path.absorption_time.copy(),
            None if path.sign_changes is None else path.sign_changes.copy(),
            list(path.seeds), list(path.events),
        )
    return SamplePath(
        path.times.copy(), np.abs(path.values), path.absorbed, path.absorption_time,
        list(path.sign_change_times), list(path.events),
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def batch_to_csv(batch: PathBatch, fh=None) -> str:
    """Rows of path_id,time,value,absorbed; absorbed is 1 from the absorption time on."""
    out = fh or io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["path_id", "time", "value", "absorbed"])
    for i in range(batch.n_paths):
        at = batch.absorption_time[i]
        for t, v in zip(batch.times, batch.values[i]):
            w.writerow([i, _fmt(t), _fmt(v), int(bool(batch.absorbed[i]) and t >= at)])
    return out.getvalue() if fh is None else ""


def sign_changes_to_csv(paths: list[SamplePath]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["path_id", "time"])
    for i, p in enumerate(paths):
        for t in p.sign_change_times:
            w.writerow([i, _fmt(t)])
    return out.getvalue()
