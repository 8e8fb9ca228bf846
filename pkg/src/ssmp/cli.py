"""Command line entry point.

    ssmp <mode> --config FILE [--seed N] [--paths N] [--out DIR] [--workers N]
"""
from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import validate as V
from .config import MODES, ConfigError, RunSpec, build_quintuple, build_sde_config, load
from .jump_sde import simulate_abs_sde_batch, simulate_approx_sde_batch, simulate_sde_batch
from .lamperti import lamperti_kiu_paths, lamperti_positive_paths
from .levy_sim import simulate_levy
from .measures import (
    check_overshoot_condition,
    cramer_value,
    drift_coefficient,
    laplace_exponent,
    leaves_zero_continuously,
)
from .paths import batch_to_csv
from .rng import stream

log = logging.getLogger("ssmp")


def derived_scalars(quintuple) -> dict:
    return {
        "psi_at_1": laplace_exponent(quintuple.triplet, 1.0),
        "drift_coefficient": drift_coefficient(quintuple),
        "cramer_value": cramer_value(quintuple),
        "leaves_zero_continuously": leaves_zero_continuously(quintuple),
        "overshoot_condition": check_overshoot_condition(quintuple.triplet),
    }


def _write(path: Path, text: str):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(V._jsonable(obj), indent=2, sort_keys=True) + "\n"


def _summary(batch, t_points) -> dict:
    out = {}
    for t in t_points:
        x = batch.at(t)
        out[repr(float(t))] = {
            "mean": float(x.mean()),
            "std": float(x.std(ddof=1)) if x.size > 1 else 0.0,
            "quantiles": dict(zip(["0.05", "0.25", "0.5", "0.75", "0.95"],
                                  np.quantile(x, [0.05, 0.25, 0.5, 0.75, 0.95]).tolist())),
            "fraction_zero": float(np.mean(x == 0)),
        }
    return out


def _snap(times, dt):
    return [round(t / dt) * dt for t in times]


def _sign_change_csv(batch) -> str:
    rows = ["path_id,time"]
    for e in sorted(batch.events, key=lambda e: (e[0], e[1])):
        if e[4] < 0:
            rows.append(f"{e[0]},{e[1]!r}")
    return "\n".join(rows) + "\n"


def _levy_csv(paths) -> str:
    rows = ["path_id,time,value,absorbed"]
    for i, p in enumerate(paths):
        last = p.times.size - 1
        for j, (t, v) in enumerate(zip(p.times, p.values)):
            rows.append(f"{i},{float(t)!r},{float(v)!r},{int(p.killed and j == last)}")
    return "\n".join(rows) + "\n"


def run(mode: str, doc: dict, spec: RunSpec, out_dir: Path, workers: int | None = None) -> int:
    """Execute one mode and write its artifacts; returns the exit status."""
    q = build_quintuple(spec.quintuple)
    cfg = build_sde_config(spec.sde)
    scalars = derived_scalars(q)
    out_dir.mkdir(parents=True, exist_ok=True)
    formats = set(spec.output.formats)
    t_points = _snap([0.25 * cfg.horizon, 0.5 * cfg.horizon, cfg.horizon], cfg.dt)
    record = spec.output.record_times
    record = None if record is None else _snap(sorted(set(record) | set(t_points)), cfg.dt)
    status = 0
    artifacts = []
    z = spec.z

    batch = None
    if mode == "simulate-levy":
        paths = [simulate_levy(q.triplet, cfg.horizon, cfg.dt, stream(cfg.seed, "levy", i))
                 for i in range(cfg.n_paths)]
        if "csv" in formats:
            _write(out_dir / "paths.csv", _levy_csv(paths))
            artifacts.append("paths.csv")
        if "json" in formats:
            kills = [p.kill_time for p in paths if p.killed]
            _write(out_dir / "summary.json", _dump({"killed_fraction": len(kills) / len(paths),
                                                    "kill_times": kills}))
            artifacts.append("summary.json")
    else:
        if mode == "simulate-lamperti":
            if z <= 0:
                raise ConfigError("z: simulate-lamperti needs z > 0")
            if not q.v.is_zero:
                log.warning("simulate-lamperti ignores v; use simulate-kiu for sign changes")
            batch = lamperti_positive_paths(q.triplet, z, cfg.n_paths, cfg.horizon, cfg.dt, cfg.seed, record,
                                            spec.resolution, cfg.block_size, workers)
        elif mode == "simulate-kiu":
            if z == 0:
                raise ConfigError("z: simulate-kiu needs z != 0")
            qm = build_quintuple(spec.quintuple_minus, "quintuple_minus") if spec.quintuple_minus else q
            batch = lamperti_kiu_paths(q, qm, z, cfg.n_paths, cfg.horizon, cfg.dt, cfg.seed, record,
                                       spec.resolution, cfg.block_size, workers, record_events=True)
        elif mode == "simulate-sde":
            if z == 0:
                raise ConfigError("z: simulate-sde cannot start at 0; use simulate-approx to start from zero")
            batch = simulate_sde_batch(q, z, cfg, record, workers=workers, record_events=True)
        elif mode == "simulate-approx":
            if scalars["cramer_value"] <= 0:
                log.warning("cramer_value <= 0: the approximating process may stay trapped at zero")
            batch = simulate_approx_sde_batch(q, z, cfg, record, workers=workers, record_events=True)
        elif mode == "simulate-abs":
            if z < 0:
                raise ConfigError("z: simulate-abs needs z >= 0")
            batch = simulate_abs_sde_batch(q, z, cfg, record, workers=workers)
        if batch is not None:
            if "csv" in formats:
                _write(out_dir / "paths.csv", batch_to_csv(batch))
                artifacts.append("paths.csv")
                if mode in ("simulate-kiu", "simulate-sde", "simulate-approx"):
                    _write(out_dir / "sign_changes.csv", _sign_change_csv(batch))
                    artifacts.append("sign_changes.csv")
            if "json" in formats:
                _write(out_dir / "summary.json", _dump({"time_points": t_points,
                                                        "marginals": _summary(batch, t_points),
                                                        "absorbed_fraction": float(batch.absorbed.mean())}))
                artifacts.append("summary.json")
        elif mode == "validate":
            report = run_validation(q, cfg, spec, workers)
            print(report.table())
            _write(out_dir / "report.json", report.to_json() + "\n")
            artifacts.append("report.json")
            status = 0 if report.passed else 1

    manifest = {
        "config": doc,
        "mode": mode,
        "derived_scalars": scalars,
        "seeds": {"seed": cfg.seed, "n_paths": cfg.n_paths, "block_size": cfg.block_size,
                  "stream": "philox(seed, mode tag, block index)"},
        "versions": {"ssmp": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "artifacts": artifacts,
    }
    _write(out_dir / "manifest.json", _dump(manifest))
    return status


def run_validation(q, cfg, spec: RunSpec, workers=None) -> V.ValidationReport:
    vs = spec.validate_
    tp = _snap(vs.t_points, cfg.dt) if vs.t_points else None
    rep = V.ValidationReport()
    z = spec.z if spec.z != 0 else 1.0
    for name in vs.tests:
        if name == "cramer_two_routes":
            rep.add(V.test_cramer_two_routes(q))
        elif name == "symmetry":
            rep.add(V.test_symmetry(q, tp, cfg, workers=workers))
        elif name == "scaling":
            for c in vs.scaling_c:
                rep.add(V.test_scaling(q, 0.0, c, tp, cfg, workers=workers))
        elif name == "moment_linearity":
            rep.add(V.test_moment_linearity(q, 1, None, cfg, workers=workers))
        elif name == "cross_construction":
            if q.v.is_zero and z < 0:
                z = -z
            rep.extend(V.test_cross_construction(q, z, tp, cfg, spec.resolution, workers=workers))
        elif name == "generator_residual":
            bumps = [V.Bump(b.center, b.width) for b in vs.bumps]
            rep.extend(V.test_generator_residual(q, z, bumps, None, cfg, workers=workers))
        elif name == "occupation":
            rep.add(V.occupation_sweep(q, vs.occupation_ms, vs.occupation_band, cfg, vs.occupation_threshold,
                                       workers=workers))
    return rep


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssmp", description="Simulate and check self-similar Markov processes.")
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", required=True, help="YAML or JSON configuration file")
    p.add_argument("--seed", type=int, help="override sde.seed")
    p.add_argument("--paths", type=int, help="override sde.n_paths")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        doc, _ = load(args.config)
        if args.seed is not None:
            doc.setdefault("sde", {})["seed"] = args.seed
        if args.paths is not None:
            doc.setdefault("sde", {})["n_paths"] = args.paths
        from .config import parse

        spec = parse(doc)
        if spec.mode is not None and spec.mode != args.mode:
            log.warning("config mode %s overridden by command line mode %s", spec.mode, args.mode)
        return run(args.mode, doc, spec, Path(args.out), args.workers)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
