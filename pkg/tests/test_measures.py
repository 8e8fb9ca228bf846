import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from ssmp.measures import (
    ConfigurationError,
    ExponentialDensity,
    JumpMeasureSpec,
    LevyTriplet,
    Quintuple,
    TruncatedStableDensity,
    UniformDensity,
    build_bar_pi,
    check_overshoot_condition,
    cramer_value,
    drift_coefficient,
    folded_triplet,
    laplace_exponent,
    leaves_zero_continuously,
    second_moment_bar_pi,
    sign,
    sign0,
)


def stable_series(c, alpha, lam, terms=80):
    # int_0^1 (e^{-lam s} - 1 + lam s) c s^{-1-alpha} ds term by term
    return c * sum((-lam) ** k / math.factorial(k) / (k - alpha) for k in range(2, terms))


def exp_quad(c, beta, lam):
    f_out = lambda u: (math.exp(lam * u) - 1.0) * c * math.exp(beta * u)
    f_in = lambda u: (math.exp(lam * u) - 1.0 - lam * u) * c * math.exp(beta * u)
    return integrate.quad(f_out, -np.inf, -1.0, epsabs=1e-14)[0] + integrate.quad(f_in, -1.0, 0.0, epsabs=1e-14)[0]


def test_sign_conventions():
    assert sign(0.0) == -1 and sign(2.0) == 1 and sign(-3.0) == -1
    assert sign0(0.0) == 0 and sign0(-0.5) == -1


def test_brownian_with_drift():
    t = LevyTriplet(a=0.3, sigma2=2.0, q=0.1)
    assert laplace_exponent(t, 2.0) == pytest.approx(-0.1 + 0.6 + 4.0, abs=1e-15)
    assert laplace_exponent(t, 0.0) == pytest.approx(-0.1)


@pytest.mark.parametrize("alpha", [0.3, 0.9, 1.2, 1.5, 1.9])
@pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
def test_truncated_stable_against_series(alpha, lam):
    pi = JumpMeasureSpec(densities=(TruncatedStableDensity(0.7, alpha),), small_jump_cutoff=1e-3)
    psi = laplace_exponent(LevyTriplet(0.0, 0.0, pi), lam)
    assert psi == pytest.approx(stable_series(0.7, alpha, lam), abs=1e-12)


@pytest.mark.parametrize("beta", [0.5, 2.0, 7.0])
@pytest.mark.parametrize("lam", [0.25, 1.0, 4.0])
def test_exponential_against_quad(beta, lam):
    pi = JumpMeasureSpec(densities=(ExponentialDensity(1.3, beta),))
    psi = laplace_exponent(LevyTriplet(0.0, 0.0, pi), lam)
    assert psi == pytest.approx(exp_quad(1.3, beta, lam), abs=1e-12)


def test_atom_kernel_both_sides_of_minus_one():
    pi = JumpMeasureSpec(atoms=((-0.5, 2.0), (-3.0, 1.0)))
    want = 2.0 * (math.exp(-0.5) - 1 + 0.5) + (math.exp(-3.0) - 1)
    assert laplace_exponent(LevyTriplet(0.0, 0.0, pi), 1.0) == pytest.approx(want, abs=1e-15)


def test_from_psi1_hits_target():
    pi = JumpMeasureSpec(atoms=((-math.log(2.0), 0.5),), densities=(ExponentialDensity(1.0, 3.0),))
    t = LevyTriplet.from_psi1(0.8, 0.5, pi, q=0.2)
    assert laplace_exponent(t, 1.0) == pytest.approx(0.8, abs=1e-14)


def test_worked_scalars():
    # V = 0.5 delta_{-1/2}: cramer = 1 + 0.5 (1/2 - 1), drift = 1 + 0.5 (-1/2 - 1)
    q = Quintuple.build(1.0, 4.0, v=JumpMeasureSpec(atoms=((-0.5, 0.5),)))
    assert cramer_value(q) == pytest.approx(0.75, abs=1e-14)
    assert drift_coefficient(q) == pytest.approx(0.25, abs=1e-14)
    assert leaves_zero_continuously(q)
    # V = p delta_{-1} leaves cramer equal to Psi(1)
    q2 = Quintuple.build(-0.3, 1.0, v=JumpMeasureSpec(atoms=((-1.0, 2.5),)))
    assert cramer_value(q2) == pytest.approx(-0.3, abs=1e-14)
    assert not leaves_zero_continuously(q2)
    assert check_overshoot_condition(Quintuple.build(0.2).triplet)
    assert not check_overshoot_condition(Quintuple.build(0.0).triplet)


def test_bar_pi_mass_and_moment():
    pi = JumpMeasureSpec(atoms=((-math.log(2.0), 0.5),))
    q = Quintuple.build(1.0, 1.0, pi, q=0.3, v=JumpMeasureSpec(atoms=((-0.25, 2.0),)))
    bp = build_bar_pi(q)
    assert bp.sampled_mass() == pytest.approx(0.5 + 0.3 + 2.0)
    want = 0.5 * 0.25 + 0.3 * 1.0 + 2.0 * 1.25**2
    assert second_moment_bar_pi(q) == pytest.approx(want, abs=1e-14)
    with pytest.raises(ConfigurationError):
        build_bar_pi(q, cutoff=1.0)


def test_validation_errors():
    with pytest.raises(ConfigurationError):
        LevyTriplet(0.0, -1.0)
    with pytest.raises(ConfigurationError):
        LevyTriplet(0.0, 0.0, JumpMeasureSpec(atoms=((0.5, 1.0),)))
    with pytest.raises(ConfigurationError):
        JumpMeasureSpec(densities=(TruncatedStableDensity(1.0, 1.5),))
    with pytest.raises(ConfigurationError):
        Quintuple(LevyTriplet(), JumpMeasureSpec(atoms=((-1.5, 1.0),)))
    with pytest.raises(ConfigurationError):
        Quintuple(LevyTriplet(), JumpMeasureSpec(atoms=((0.0, 1.0),)))
    with pytest.raises(ConfigurationError):
        ExponentialDensity(1.0, 0.0)
    with pytest.raises(ConfigurationError):
        laplace_exponent(LevyTriplet(), -1.0)


def test_mixture_sampler_atoms_chi2():
    m = JumpMeasureSpec(atoms=((-0.2, 1.0), (-0.7, 3.0)))
    x = m.sample(np.random.default_rng(1), 40_000)
    counts = [np.sum(x == -0.2), np.sum(x == -0.7)]
    assert stats.chisquare(counts, [10_000, 30_000]).pvalue > 1e-3


def test_exponential_sampler_ks():
    d = ExponentialDensity(2.0, 1.5)
    x = d.sample(np.random.default_rng(2), 20_000, -2.0, -0.5)
    r = math.exp(1.5 * (-2.0 + 0.5))
    cdf = lambda u: (np.exp(1.5 * (u + 0.5)) - r) / (1 - r)
    assert stats.kstest(x, cdf).pvalue > 1e-3


def test_stable_sampler_outside_band_ks():
    m = JumpMeasureSpec(densities=(TruncatedStableDensity(1.0, 0.8),), small_jump_cutoff=0.05)
    assert m.sampled_mass() == pytest.approx((0.05**-0.8 - 1.0) / 0.8)
    x = m.sample(np.random.default_rng(3), 20_000)
    cdf = lambda u: ((-u) ** -0.8 - 1.0) / (0.05**-0.8 - 1.0)
    assert stats.kstest(x, cdf).pvalue > 1e-3


# ---------------------------------------------------------------------------
# properties


def quintuples():
    atom = st.tuples(st.floats(-4.0, -0.01), st.floats(0.0, 2.0))
    v_atom = st.tuples(st.floats(-1.0, -0.01), st.floats(0.0, 2.0))

    @st.composite
    def build(draw):
        dens = []
        if draw(st.booleans()):
            dens.append(ExponentialDensity(draw(st.floats(0.0, 3.0)), draw(st.floats(0.5, 6.0))))
        if draw(st.booleans()):
            dens.append(TruncatedStableDensity(draw(st.floats(0.0, 1.0)), draw(st.floats(0.1, 1.9))))
        pi = JumpMeasureSpec(tuple(draw(st.lists(atom, max_size=3))), tuple(dens), small_jump_cutoff=1e-3)
        vd = ()
        if draw(st.booleans()):
            lo = draw(st.floats(-1.0, -0.1))
            vd = (UniformDensity(draw(st.floats(0.0, 2.0)), lo, draw(st.floats(lo + 0.05, -0.01))),)
        v = JumpMeasureSpec(tuple(draw(st.lists(v_atom, max_size=3))), vd)
        trip = LevyTriplet(draw(st.floats(-2.0, 2.0)), draw(st.floats(0.0, 3.0)), pi, draw(st.floats(0.0, 1.0)))
        return Quintuple(trip, v)

    return build()


@settings(max_examples=60, deadline=None)
@given(quintuples())
def test_laplace_exponent_convex(q):
    lam = np.linspace(0.0, 5.0, 41)
    psi = np.array([laplace_exponent(q.triplet, x) for x in lam])
    assert np.all(psi[:-2] - 2 * psi[1:-1] + psi[2:] >= -1e-9)
    assert psi[0] == pytest.approx(-q.triplet.q, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(quintuples())
def test_cramer_equals_folded_exponent(q):
    assert abs(cramer_value(q) - laplace_exponent(folded_triplet(q), 1.0)) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(quintuples())
def test_cramer_dominates_drift(q):
    # |u| - 1 >= u - 1 on [-1, 0)
    assert cramer_value(q) >= drift_coefficient(q) - 1e-12
