"""Jump measures, Lévy triplets and Lamperti-Kiu quintuples.

Measures are kept parametric: a finite list of atoms plus a tuple of
one-sided densities.  Every density knows how to integrate a function over
a sub-interval of its support, its mass over a sub-interval and how to sample
from its restriction to one.  That is enough for the Laplace exponent, the
compensator integrals used by the SDE solvers and the path samplers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

GL_NODES = 256
_TAIL_DECAY = 60.0


class ConfigurationError(ValueError):
    """Raised for invalid measure, triplet or quintuple data."""


def sign(x):
    """Sign with sign(0) = -1."""
    return np.where(np.asarray(x) > 0, 1.0, -1.0)


def sign0(x):
    """Sign with sign0(0) = 0."""
    return np.sign(np.asarray(x, dtype=float))


@lru_cache(maxsize=None)
def _legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


_EMPTY = (np.empty(0), np.empty(0))


def gl_nodes(lo: float, hi: float, n: int = GL_NODES) -> tuple[np.ndarray, np.ndarray]:
    x, w = _legendre(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def _pieces(ranges, pdf) -> tuple[np.ndarray, np.ndarray]:
    if not ranges:
        return _EMPTY
    us, ws = zip(*(gl_nodes(a, b) for a, b in ranges))
    u = np.concatenate(us)
    return u, np.concatenate(ws) * pdf(u)


def _split(lo: float, hi: float, breaks: Sequence[float]) -> list[tuple[float, float]]:
    pts = [lo] + sorted(b for b in breaks if lo < b < hi) + [hi]
    return list(zip(pts[:-1], pts[1:]))


# ---------------------------------------------------------------------------
# densities


class Density:
    """One-sided density on an interval.

    Subclasses provide ``pdf``, closed-form ``mass`` and inverse-CDF
    ``sample``; ``integrate`` defaults to Gauss-Legendre per smooth piece.
    """

    support: tuple[float, float] = (-math.inf, math.inf)
    finite_mass: bool = True

    def pdf(self, u):
        raise NotImplementedError

    def clip(self, lo=None, hi=None) -> tuple[float, float]:
        slo, shi = self.support
        lo = slo if lo is None else max(lo, slo)
        hi = shi if hi is None else min(hi, shi)
        return lo, hi

    def quadrature(self, lo=None, hi=None, breaks: Sequence[float] = ()) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights (density included) over [lo, hi] within the support."""
        lo, hi = self.clip(lo, hi)
        if not hi > lo:
            return _EMPTY
        if math.isinf(lo) or math.isinf(hi):
            raise ConfigurationError(f"{type(self).__name__} cannot integrate over an unbounded range")
        return _pieces([(a, b) for a, b in _split(lo, hi, breaks)], self.pdf)

    def integrate(self, g: Callable, lo=None, hi=None, breaks: Sequence[float] = ()) -> float:
        u, w = self.quadrature(lo, hi, breaks)
        return float(np.dot(w, g(u))) if u.size else 0.0

    def mass(self, lo=None, hi=None) -> float:
        return self.integrate(lambda u: np.ones_like(u), lo, hi)

    def sample(self, rng: np.random.Generator, n: int, lo=None, hi=None) -> np.ndarray:
        raise NotImplementedError

    def mapped(self, forward, inverse, increasing: bool) -> "MappedDensity":
        return MappedDensity(self, forward, inverse, increasing)


@dataclass(frozen=True)
class ExponentialDensity(Density):
    """c * exp(beta * u) on u < 0."""

    c: float
    beta: float
    support: tuple[float, float] = field(default=(-math.inf, 0.0), init=False)
    finite_mass: bool = field(default=True, init=False)

    def __post_init__(self):
        if self.c < 0 or self.beta <= 0:
            raise ConfigurationError("exponential density needs c >= 0 and beta > 0")

    def pdf(self, u):
        return self.c * np.exp(self.beta * np.asarray(u))

    def quadrature(self, lo=None, hi=None, breaks=()):
        lo, hi = self.clip(lo, hi)
        # beyond the cut the weight is below exp(-60) of its peak
        lo = max(lo, min(hi, 0.0) - 1.0 - _TAIL_DECAY / self.beta)
        if not hi > lo:
            return _EMPTY
        return _pieces(_split(lo, hi, tuple(breaks) + (-1.0,)), self.pdf)

    def mass(self, lo=None, hi=None):
        lo, hi = self.clip(lo, hi)
        if not hi > lo:
            return 0.0
        return self.c / self.beta * (math.exp(self.beta * hi) - math.exp(self.beta * lo))

    def sample(self, rng, n, lo=None, hi=None):
        lo, hi = self.clip(lo, hi)
        r = math.exp(self.beta * (lo - hi))
        return hi + np.log(r + rng.random(n) * (1.0 - r)) / self.beta


@dataclass(frozen=True)
class TruncatedStableDensity(Density):
    """c * |u|^(-1-alpha) on -1 < u < 0, alpha in (0, 2); infinite mass."""

    c: float
    alpha: float
    support: tuple[float, float] = field(default=(-1.0, 0.0), init=False)
    finite_mass: bool = field(default=False, init=False)

    def __post_init__(self):
        if self.c < 0 or not 0.0 < self.alpha < 2.0:
            raise ConfigurationError("truncated stable density needs c >= 0 and alpha in (0, 2)")

    def pdf(self, u):
        return self.c * np.abs(np.asarray(u)) ** (-1.0 - self.alpha)

    def quadrature(self, lo=None, hi=None, breaks=()):
        lo, hi = self.clip(lo, hi)
        if not hi > lo:
            return _EMPTY
        # u = -s**p makes u**2 times the density smooth at s = 0
        p = 2.0 / (2.0 - self.alpha)
        s_lo, s_hi = (-hi) ** (1.0 / p), (-lo) ** (1.0 / p)
        s_breaks = [(-b) ** (1.0 / p) for b in breaks if lo < b < hi]
        ss, ws = zip(*(gl_nodes(a, b) for a, b in _split(s_lo, s_hi, s_breaks)))
        sv, wv = np.concatenate(ss), np.concatenate(ws)
        return -(sv**p), wv * self.c * p * sv ** (-p * self.alpha - 1.0)

    def mass(self, lo=None, hi=None):
        lo, hi = self.clip(lo, hi)
        if not hi > lo:
            return 0.0
        if hi == 0.0:
            return math.inf
        return self.c * ((-hi) ** -self.alpha - (-lo) ** -self.alpha) / self.alpha

    def sample(self, rng, n, lo=None, hi=None):
        lo, hi = self.clip(lo, hi)
        w1, w2 = (-hi) ** -self.alpha, (-lo) ** -self.alpha
        return -((w1 - rng.random(n) * (w1 - w2)) ** (-1.0 / self.alpha))


@dataclass(frozen=True)
class UniformDensity(Density):
    """Constant density c on [lo, hi]."""

    c: float
    lo: float
    hi: float
    finite_mass: bool = field(default=True, init=False)

    def __post_init__(self):
        if self.c < 0 or not self.hi > self.lo:
            raise ConfigurationError("uniform density needs c >= 0 and lo < hi")

    @property
    def support(self):
        return (self.lo, self.hi)

    def pdf(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.c)

    def mass(self, lo=None, hi=None):
        lo, hi = self.clip(lo, hi)
        return self.c * max(hi - lo, 0.0)

    def sample(self, rng, n, lo=None, hi=None):
        lo, hi = self.clip(lo, hi)
        return lo + (hi - lo) * rng.random(n)


@dataclass(frozen=True)
class CallableDensity(Density):
    """User-supplied bounded density on a bounded interval.

    Sampling is by rejection from a uniform envelope; ``bound`` defaults to
    1.1 times the maximum over a 4096-point grid.
    """

    fn: Callable
    lo: float
    hi: float
    bound: float | None = None
    finite_mass: bool = True

    @property
    def support(self):
        return (self.lo, self.hi)

    def pdf(self, u):
        return np.asarray(self.fn(np.asarray(u, dtype=float)), dtype=float)

    def _bound(self, lo, hi):
        if self.bound is not None:
            return self.bound
        return 1.1 * float(np.max(self.pdf(np.linspace(lo, hi, 4096))))

    def sample(self, rng, n, lo=None, hi=None):
        lo, hi = self.clip(lo, hi)
        top = self._bound(lo, hi)
        out = np.empty(0)
        while out.size < n:
            k = max(2 * (n - out.size), 16)
            u = lo + (hi - lo) * rng.random(k)
            keep = rng.random(k) * top < self.pdf(u)
            out = np.concatenate([out, u[keep]])
        return out[:n]


@dataclass(frozen=True)
class MappedDensity(Density):
    """Image of a density under a strictly monotone map."""

    source: Density
    forward: Callable
    inverse: Callable
    increasing: bool

    @property
    def support(self):
        a, b = (float(self.forward(s)) for s in self.source.support)
        return (a, b) if self.increasing else (b, a)

    @property
    def finite_mass(self):
        return self.source.finite_mass

    def _source_range(self, lo, hi):
        lo, hi = self.clip(lo, hi)
        with np.errstate(divide="ignore"):
            a, b = float(self.inverse(lo)), float(self.inverse(hi))
        return (a, b) if self.increasing else (b, a)

    def quadrature(self, lo=None, hi=None, breaks=()):
        a, b = self._source_range(lo, hi)
        with np.errstate(divide="ignore"):
            src_breaks = [float(self.inverse(x)) for x in breaks]
        u, w = self.source.quadrature(a, b, src_breaks)
        return self.forward(u), w

    def mass(self, lo=None, hi=None):
        a, b = self._source_range(lo, hi)
        return self.source.mass(a, b)

    def sample(self, rng, n, lo=None, hi=None):
        a, b = self._source_range(lo, hi)
        return self.forward(self.source.sample(rng, n, a, b))


def exp_image(d: Density) -> MappedDensity:
    return MappedDensity(d, np.exp, np.log, True)


def log_abs_image(d: Density) -> MappedDensity:
    """Image of a density on u < 0 under u -> log|u|."""
    return MappedDensity(d, lambda u: np.log(-np.asarray(u)), lambda w: -np.exp(w), False)


# ---------------------------------------------------------------------------
# jump measures


@dataclass(frozen=True)
class JumpMeasureSpec:
    """Atoms plus densities; density mass within ``small_jump_cutoff`` of
    ``singular_point`` is compensated rather than sampled."""

    atoms: tuple[tuple[float, float], ...] = ()
    densities: tuple[Density, ...] = ()
    small_jump_cutoff: float = 0.0
    singular_point: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple((float(x), float(w)) for x, w in self.atoms))
        object.__setattr__(self, "densities", tuple(self.densities))
        if any(w < 0 for _, w in self.atoms):
            raise ConfigurationError("atom masses must be non-negative")
        if self.small_jump_cutoff < 0:
            raise ConfigurationError("small_jump_cutoff must be non-negative")
        for d in self.densities:
            if not d.finite_mass and self.small_jump_cutoff == 0.0:
                raise ConfigurationError("an infinite density needs a positive small_jump_cutoff")

    @property
    def is_zero(self) -> bool:
        return all(w == 0 for _, w in self.atoms) and not self.densities

    def check_support(self, lo: float, hi: float, closed_lo=True, closed_hi=False, what="measure"):
        def inside(x):
            return (lo <= x if closed_lo else lo < x) and (x <= hi if closed_hi else x < hi)

        for x, w in self.atoms:
            if w > 0 and not inside(x):
                raise ConfigurationError(f"{what}: atom at {x} outside support")
        for d in self.densities:
            a, b = d.support
            if a < lo or b > hi:
                raise ConfigurationError(f"{what}: density support {d.support} outside [{lo}, {hi}]")

    def sampled_ranges(self, d: Density) -> list[tuple[float, float]]:
        lo, hi = d.support
        sp, eps = self.singular_point, self.small_jump_cutoff
        out = []
        if lo < sp - eps:
            out.append((lo, min(hi, sp - eps)))
        if hi > sp + eps:
            out.append((max(lo, sp + eps), hi))
        return out

    def band_ranges(self, d: Density) -> list[tuple[float, float]]:
        if self.small_jump_cutoff == 0.0:
            return []
        lo, hi = d.support
        sp, eps = self.singular_point, self.small_jump_cutoff
        a, b = max(lo, sp - eps), min(hi, sp + eps)
        return [(a, b)] if b > a else []

    def total_mass(self) -> float:
        return sum(w for _, w in self.atoms) + sum(d.mass() for d in self.densities)

    def sampled_mass(self) -> float:
        m = sum(w for _, w in self.atoms)
        for d in self.densities:
            m += sum(d.mass(a, b) for a, b in self.sampled_ranges(d))
        return m

    def quadrature(self, part: str = "all", breaks: Sequence[float] = ()) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights of the measure, atoms included.

        ``part`` is ``"all"``, ``"sampled"`` (atoms and density outside the
        band) or ``"band"`` (density inside the band only).
        """
        us, ws = [], []
        if part != "band" and self.atoms:
            us.append(np.array([x for x, _ in self.atoms]))
            ws.append(np.array([w for _, w in self.atoms]))
        for d in self.densities:
            if part == "all":
                ranges = [(None, None)]
            else:
                ranges = self.sampled_ranges(d) if part == "sampled" else self.band_ranges(d)
            for a, b in ranges:
                u, w = d.quadrature(a, b, breaks)
                us.append(u)
                ws.append(w)
        if not us:
            return _EMPTY
        return np.concatenate(us), np.concatenate(ws)

    def integrate(self, g: Callable, part: str = "all", breaks: Sequence[float] = ()) -> float:
        u, w = self.quadrature(part, breaks)
        return float(np.dot(w, g(u))) if u.size else 0.0

    def sampler(self) -> "MixtureSampler":
        return MixtureSampler.from_measure(self)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.sampler().sample(rng, n)

    def map(self, forward, inverse, increasing: bool, singular_point: float, cutoff: float):
        atoms = tuple((float(forward(x)), w) for x, w in self.atoms)
        dens = tuple(MappedDensity(d, forward, inverse, increasing) for d in self.densities)
        return JumpMeasureSpec(atoms, dens, cutoff, singular_point)


@dataclass
class MixtureSampler:
    """Samples the normalised sampled part of a measure."""

    atom_locs: np.ndarray
    components: list  # (mass, density, lo, hi) for density pieces
    probs: np.ndarray  # atoms first, then density pieces
    mass: float

    @classmethod
    def from_measure(cls, measure: JumpMeasureSpec) -> "MixtureSampler":
        locs = np.array([x for x, w in measure.atoms if w > 0], dtype=float)
        weights = [w for _, w in measure.atoms if w > 0]
        comps = []
        for d in measure.densities:
            for a, b in measure.sampled_ranges(d):
                w = d.mass(a, b)
                if not math.isfinite(w):
                    raise ConfigurationError("sampled part of a measure has infinite mass")
                if w > 0:
                    comps.append((w, d, a, b))
                    weights.append(w)
        weights = np.asarray(weights, dtype=float)
        total = float(weights.sum())
        probs = weights / total if total > 0 else weights
        return cls(locs, comps, probs, total)

    @classmethod
    def concat(cls, parts: Sequence["MixtureSampler"], extra_atoms: Sequence[tuple[float, float]] = ()):
        locs, comps, weights = [], [], []
        for loc, w in extra_atoms:
            if w > 0:
                locs.append(loc)
                weights.append(w)
        for p in parts:
            locs.extend(p.atom_locs.tolist())
            weights.extend((p.probs[: p.atom_locs.size] * p.mass).tolist())
        for p in parts:
            comps.extend(p.components)
            weights.extend(c[0] for c in p.components)
        weights = np.asarray(weights, dtype=float)
        total = float(weights.sum())
        return cls(np.asarray(locs, dtype=float), comps, weights / total if total > 0 else weights, total)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if n == 0:
            return np.empty(0)
        if self.mass <= 0:
            raise ConfigurationError("cannot sample from a zero measure")
        cdf = np.cumsum(self.probs)
        idx = np.minimum(np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right"), cdf.size - 1)
        out = np.empty(n)
        n_atoms = self.atom_locs.size
        is_atom = idx < n_atoms
        out[is_atom] = self.atom_locs[idx[is_atom]]
        for j, (_, d, a, b) in enumerate(self.components):
            sel = idx == n_atoms + j
            k = int(sel.sum())
            if k:
                out[sel] = d.sample(rng, k, a, b)
        return out


# ---------------------------------------------------------------------------
# triplets, quintuples, barPi


def _expm1_minus_x(x):
    """e^x - 1 - x without cancellation for small |x|."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-2
    series = x * x * (0.5 + x * (1 / 6 + x * (1 / 24 + x * (1 / 120 + x * (1 / 720 + x / 5040)))))
    return np.where(small, series, np.expm1(x) - x)


def _lk_kernel(lam: float):
    def k(u):
        u = np.asarray(u, dtype=float)
        inner = np.abs(u) <= 1.0
        return np.where(inner, _expm1_minus_x(lam * u), np.expm1(lam * u))

    return k


@dataclass(frozen=True)
class LevyTriplet:
    """(a, sigma^2, Pi) of a spectrally negative Lévy process killed at rate q."""

    a: float = 0.0
    sigma2: float = 0.0
    pi: JumpMeasureSpec = field(default_factory=JumpMeasureSpec)
    q: float = 0.0

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ConfigurationError("sigma2 must be non-negative")
        if self.q < 0:
            raise ConfigurationError("killing rate q must be non-negative")
        self.pi.check_support(-math.inf, 0.0, closed_lo=False, closed_hi=False, what="pi")
        small = self.pi.integrate(lambda u: np.minimum(u * u, 1.0))
        if not math.isfinite(small):
            raise ConfigurationError("pi does not integrate u^2 ^ 1")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @classmethod
    def from_psi1(cls, psi1: float, sigma2: float = 0.0, pi: JumpMeasureSpec | None = None, q: float = 0.0):
        """Solve for the drift a so that the Laplace exponent at 1 equals psi1."""
        pi = pi or JumpMeasureSpec()
        probe = cls(0.0, sigma2, pi, q)
        return cls(psi1 - laplace_exponent(probe, 1.0), sigma2, pi, q)

    def small_jump_compensator(self) -> float:
        """Integral of u over sampled jumps with |u| <= 1."""
        return self.pi.integrate(lambda u: u * (np.abs(u) <= 1.0), part="sampled")


@dataclass(frozen=True)
class Quintuple:
    triplet: LevyTriplet
    v: JumpMeasureSpec = field(default_factory=JumpMeasureSpec)

    def __post_init__(self):
        self.v.check_support(-1.0, 0.0, closed_lo=True, closed_hi=False, what="v")
        if any(not d.finite_mass for d in self.v.densities):
            raise ConfigurationError("v must be a finite measure")

    @property
    def sigma2(self) -> float:
        return self.triplet.sigma2

    @classmethod
    def build(cls, psi1: float, sigma2: float = 0.0, pi=None, q: float = 0.0, v=None) -> "Quintuple":
        return cls(LevyTriplet.from_psi1(psi1, sigma2, pi, q), v or JumpMeasureSpec())


@dataclass(frozen=True)
class BarPi:
    """Jump-factor measure on [-1, 1]: exp-image of Pi, killing atom, V."""

    positive_part: JumpMeasureSpec
    zero_atom: float
    negative_part: JumpMeasureSpec
    cutoff: float
    band_drift: float

    def quadrature(self, part: str = "all") -> tuple[np.ndarray, np.ndarray]:
        pu, pw = self.positive_part.quadrature(part)
        if part == "band":
            return pu, pw
        nu, nw = self.negative_part.quadrature("all")
        return np.concatenate([pu, [0.0], nu]), np.concatenate([pw, [self.zero_atom], nw])

    def integrate(self, g: Callable, part: str = "all") -> float:
        u, w = self.quadrature(part)
        return float(np.dot(w, g(u))) if u.size else 0.0

    def sampled_mass(self) -> float:
        return self.positive_part.sampled_mass() + self.zero_atom + self.negative_part.total_mass()

    def sampler(self) -> MixtureSampler:
        return MixtureSampler.concat(
            [self.positive_part.sampler(), self.negative_part.sampler()],
            extra_atoms=[(0.0, self.zero_atom)],
        )


def laplace_exponent(triplet: LevyTriplet, lam: float) -> float:
    """Psi(lam) = -q + a lam + sigma^2 lam^2 / 2 + int (e^{lam u} - 1 - lam u 1_{|u|<=1}) Pi(du)."""
    if lam < 0:
        raise ConfigurationError("laplace_exponent needs lam >= 0")
    jumps = triplet.pi.integrate(_lk_kernel(lam), breaks=(-1.0,))
    if not math.isfinite(jumps):
        raise ConfigurationError("pi is not integrable against the Lévy-Khintchine kernel")
    return -triplet.q + triplet.a * lam + 0.5 * triplet.sigma2 * lam * lam + jumps


def drift_coefficient(quintuple: Quintuple) -> float:
    return laplace_exponent(quintuple.triplet, 1.0) + quintuple.v.integrate(lambda u: u - 1.0)


def cramer_value(quintuple: Quintuple) -> float:
    return laplace_exponent(quintuple.triplet, 1.0) + quintuple.v.integrate(lambda u: np.abs(u) - 1.0)


def leaves_zero_continuously(quintuple: Quintuple) -> bool:
    return cramer_value(quintuple) > 0


def check_overshoot_condition(triplet: LevyTriplet) -> bool:
    """For spectrally negative triplets the extension leaving zero exists iff Psi(1) > 0."""
    return laplace_exponent(triplet, 1.0) > 0


def build_bar_pi(quintuple: Quintuple, cutoff: float = 1e-4) -> BarPi:
    if not 0.0 <= cutoff < 1.0:
        raise ConfigurationError("cutoff must lie in [0, 1)")
    pi = quintuple.triplet.pi
    positive = pi.map(np.exp, np.log, True, singular_point=1.0, cutoff=cutoff)
    band = positive.integrate(lambda u: u - 1.0, part="band")
    return BarPi(positive, quintuple.triplet.q, quintuple.v, cutoff, band)


def folded_triplet(quintuple: Quintuple) -> LevyTriplet:
    """Lévy triplet of the real part of the Lamperti-Kiu exponent.

    Sign changes contribute jumps log|V| at rate V(R) that are not
    compensated, so the truncated drift picks up the mean of the small ones.
    """
    t, v = quintuple.triplet, quintuple.v
    image = JumpMeasureSpec(
        atoms=tuple((math.log(-x), w) for x, w in v.atoms if w > 0 and x != -1.0),
        densities=tuple(log_abs_image(d) for d in v.densities),
    )
    small = v.integrate(
        lambda u: np.log(np.abs(u)) * (np.abs(np.log(np.abs(u))) <= 1.0), breaks=(-math.exp(-1.0),)
    )
    pi = JumpMeasureSpec(
        atoms=t.pi.atoms + image.atoms,
        densities=t.pi.densities + image.densities,
        small_jump_cutoff=t.pi.small_jump_cutoff,
    )
    return LevyTriplet(t.a + small, t.sigma2, pi, t.q)


def second_moment_bar_pi(quintuple: Quintuple) -> float:
    """int (u - 1)^2 barPi(du) over [-1, 1]."""
    return build_bar_pi(quintuple).integrate(lambda u: (u - 1.0) ** 2)
