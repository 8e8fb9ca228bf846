import math

import numpy as np
import pytest
from scipy import stats

from ssmp.jump_sde import (
    RestartProcess,
    SdeConfig,
    simulate_abs_sde,
    simulate_abs_sde_batch,
    simulate_approx_sde,
    simulate_approx_sde_batch,
    simulate_sde,
    simulate_sde_batch,
    step_drift,
)
from ssmp.measures import JumpMeasureSpec, LevyTriplet, Quintuple
from ssmp.paths import fold_to_abs

BM = Quintuple.build(1.0, 4.0)
HALF = Quintuple.build(1.0, 4.0, v=JumpMeasureSpec(atoms=((-0.5, 0.5),)))


def test_step_drift_examples():
    assert step_drift(BM, 0.5, 0.01) == pytest.approx(0.01)
    assert step_drift(BM, -0.5, 0.01) == pytest.approx(-0.01)
    assert step_drift(BM, 0.0, 0.01) == pytest.approx(-0.01)
    assert step_drift(BM, 0.0, 0.01, use_sign0=True) == 0.0
    # kappa = 0.25 and the compensator -0.75 restore Psi(1) = 1
    assert step_drift(HALF, 2.0, 0.1) == pytest.approx(0.1, abs=1e-14)
    assert step_drift(HALF, 2.0, 0.1, factor=0.0) == pytest.approx(0.025, abs=1e-14)


def test_zero_start_rejected():
    cfg = SdeConfig(dt=0.01, n_paths=2)
    with pytest.raises(ValueError, match="simulate_approx_sde"):
        simulate_sde(BM, 0.0, cfg)
    with pytest.raises(ValueError, match="simulate_approx_sde"):
        simulate_sde_batch(BM, 0.0, cfg)
    with pytest.raises(ValueError):
        simulate_abs_sde(BM, -1.0, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        SdeConfig(dt=2.0, horizon=1.0)
    with pytest.raises(ValueError):
        SdeConfig(m=0)
    with pytest.raises(ValueError):
        SdeConfig(m=512, rate_cap=100)
    with pytest.raises(ValueError):
        SdeConfig(abs_scheme="milstein")
    assert SdeConfig(dt=0.25, horizon=1.0).grid().tolist() == [0, 0.25, 0.5, 0.75, 1.0]


def test_trivial_quintuple_is_constant():
    q = Quintuple(LevyTriplet())
    p = simulate_sde(q, 2.0, SdeConfig(dt=0.01))
    assert np.all(p.values == 2.0) and not p.absorbed


def test_pure_drift_paths():
    cfg = SdeConfig(dt=0.01, horizon=1.0, n_paths=3)
    q = Quintuple(LevyTriplet(a=0.5))
    up = simulate_sde_batch(q, 1.0, cfg)
    assert np.allclose(up.values, 1.0 + 0.5 * up.times)
    down = simulate_sde_batch(q, -1.0, cfg)
    assert np.allclose(down.values, -1.0 - 0.5 * down.times)
    # negative drift reaches zero at t = 0.4 and is stopped there
    hit = simulate_sde_batch(Quintuple(LevyTriplet(a=-1.0)), 0.4, cfg)
    assert hit.absorbed.all()
    assert np.allclose(hit.absorption_time, 0.4, atol=1e-9)
    assert np.all(hit.values[:, -1] == 0)


def test_jumps_are_multiplicative():
    pi = JumpMeasureSpec(atoms=((-math.log(2.0), 1.0),))
    q = Quintuple.build(0.5, 1.0, pi, q=0.2, v=JumpMeasureSpec(atoms=((-0.5, 1.0),)))
    b = simulate_sde_batch(q, 1.0, SdeConfig(dt=1e-3, n_paths=200), [0.5, 1.0], record_events=True)
    assert len(b.events) > 100
    for _, _, before, after, u in b.events:
        assert after == pytest.approx(before * u, rel=1e-12, abs=1e-300)
        assert abs(after) <= abs(before)


def test_sign_flips_poisson_rate():
    # zero triplet and V = p delta_{-1}: |Z| stays 1 and flips at rate p
    q = Quintuple(LevyTriplet(), JumpMeasureSpec(atoms=((-1.0, 1.5),)))
    b = simulate_sde_batch(q, 1.0, SdeConfig(dt=1e-2, n_paths=6000, seed=3), [1.0], workers=1)
    assert np.allclose(np.abs(b.values), 1.0)
    n = b.sign_changes[:, 0]
    obs = np.append(np.bincount(np.minimum(n, 5), minlength=6)[:5], np.sum(n >= 5))
    p = stats.poisson(1.5).pmf(np.arange(5))
    assert stats.chisquare(obs, n.size * np.append(p, 1 - p.sum())).pvalue > 1e-3


def test_besq_mean_from_zero():
    cfg = SdeConfig(dt=1e-2, n_paths=20_000, seed=1)
    b = simulate_abs_sde_batch(BM, 0.0, cfg, [0.5, 1.0], workers=1)
    x = b.values
    assert np.all(x >= 0)
    se = x.std(axis=0) / math.sqrt(x.shape[0])
    assert np.all(np.abs(x.mean(axis=0) - np.array([0.5, 1.0])) < 4 * se)
    e = simulate_abs_sde_batch(BM, 0.0, cfg.replace(abs_scheme="euler", n_paths=200), workers=1)
    assert np.all(e.values >= 0)


def test_approx_leaves_zero_and_restarts():
    cfg = SdeConfig(dt=1e-3, n_paths=500, m=16, seed=2)
    b = simulate_approx_sde_batch(BM, 0.0, cfg, [0.1, 1.0], workers=1)
    assert (b.values[:, 1] != 0).mean() > 0.8
    assert (b.values[:, 1] > 0).mean() == pytest.approx(0.5, abs=0.08)
    assert not b.absorbed.any()


def test_restart_landing_sites():
    r = RestartProcess(8, 2.0, skew=1.0)
    assert np.all(r.landing(np.random.default_rng(0), 10) == 0.25)
    assert r.sites == (-0.125, 0.125) and r.rate == 8.0


def test_single_path_reproducible_and_fold():
    cfg = SdeConfig(dt=1e-2, seed=4)
    a = simulate_approx_sde(HALF, 0.5, cfg, path_id=3)
    b = simulate_approx_sde(HALF, 0.5, cfg, path_id=3)
    assert np.array_equal(a.values, b.values)
    f = fold_to_abs(a)
    assert np.array_equal(f.values, np.abs(a.values)) and f.events == a.events
    assert all(e[3] < 0 for e in a.events if e[0] in a.sign_change_times)


def test_batch_reproducible_across_workers():
    cfg = SdeConfig(dt=1e-2, n_paths=300, seed=5, block_size=100)
    a = simulate_sde_batch(HALF, 1.0, cfg, workers=1)
    b = simulate_sde_batch(HALF, 1.0, cfg, workers=3)
    assert np.array_equal(a.values, b.values)


def test_record_times_must_be_on_grid():
    with pytest.raises(ValueError):
        simulate_sde_batch(BM, 1.0, SdeConfig(dt=0.1, n_paths=2), [0.05])


def test_truncated_family_scaling():
    # c^-1 Z^(m)_{ct} from 0 has the law of Z^(cm)_t from 0; pair m/c with m
    from ssmp.validate import ks_threshold, ks_two_sample

    q = Quintuple.build(1.0, 4.0, v=JumpMeasureSpec(atoms=((-0.5, 0.5),)))
    c, tp = 4.0, [0.25, 1.0]
    small = SdeConfig(dt=5e-3, horizon=1.0, n_paths=20_000, seed=8, m=64)
    big = small.replace(dt=small.dt * c, horizon=c, m=16, seed=9)
    a = simulate_approx_sde_batch(q, 0.0, big, [c * t for t in tp], workers=1)
    b = simulate_approx_sde_batch(q, 0.0, small, tp, workers=1)
    for i in range(len(tp)):
        assert ks_two_sample(a.values[:, i] / c, b.values[:, i])[0] < ks_threshold(20_000, 20_000)
