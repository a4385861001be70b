"""Probability laws on the real line.

Every law used by the simulator (bias law, recommendation law, limit laws)
is one of five immutable variants: :class:`Gaussian`, :class:`Uniform`,
:class:`Mixture` (of Gaussians), :class:`Dirac` and :class:`Empirical`.
All of them have finite second moment.

The module-level functions (:func:`sample`, :func:`cdf`, :func:`mean`, ...)
dispatch to the variant methods and are the intended public surface.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "Gaussian",
    "Uniform",
    "Mixture",
    "Dirac",
    "Empirical",
    "Distribution",
    "CONVOLVE_SAMPLE_SIZE",
    "sample",
    "cdf",
    "point_mass",
    "mean",
    "variance",
    "pushforward_affine",
    "convolve",
    "char_fn",
    "standardized_moments",
    "from_dict",
    "to_dict",
]

#: Size of the empirical fallback used by :func:`convolve`.
CONVOLVE_SAMPLE_SIZE = 100_000
# lower clamp for inverse-normal sampling (random() can return exactly 0)
_TINY = 2.0**-60

# seed of the default stream used when convolve() needs samples and no rng is given
_CONVOLVE_SEED = 0x5EED


@dataclass(frozen=True)
class Gaussian:
    mean: float
    std: float

    def __post_init__(self):
        if not (self.std > 0 and math.isfinite(self.std)):
            raise ValueError(f"Gaussian std must be positive and finite, got {self.std}")
        if not math.isfinite(self.mean):
            raise ValueError(f"Gaussian mean must be finite, got {self.mean}")

    def sample(self, n, rng):
        return rng.normal(self.mean, self.std, size=n)

    def cdf(self, x):
        return float(ndtr((x - self.mean) / self.std))

    def point_mass(self, x):
        return 0.0

    def moments(self):
        return self.mean, self.std**2

    def affine(self, a, b):
        return Gaussian(a * self.mean + b, abs(a) * self.std)

    def char_fn(self, xi):
        return cmath.exp(complex(-0.5 * (xi * self.std) ** 2, xi * self.mean))


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.hi > self.lo):
            raise ValueError(f"Uniform requires lo < hi, got [{self.lo}, {self.hi}]")

    def sample(self, n, rng):
        return rng.uniform(self.lo, self.hi, size=n)

    def cdf(self, x):
        if x <= self.lo:
            return 0.0
        if x >= self.hi:
            return 1.0
        return (x - self.lo) / (self.hi - self.lo)

    def point_mass(self, x):
        return 0.0

    def moments(self):
        return 0.5 * (self.lo + self.hi), (self.hi - self.lo) ** 2 / 12.0

    def affine(self, a, b):
        lo, hi = sorted((a * self.lo + b, a * self.hi + b))
        return Uniform(lo, hi)

    def char_fn(self, xi):
        # centred sinc times a phase factor
        half = 0.5 * (self.hi - self.lo)
        centre = 0.5 * (self.hi + self.lo)
        t = half * xi
        if abs(t) < 1e-4:
            t2 = t * t
            sinc = 1.0 - t2 / 6.0 + t2 * t2 / 120.0
        else:
            sinc = math.sin(t) / t
        return sinc * cmath.exp(1j * xi * centre)


@dataclass(frozen=True)
class Mixture:
    """Finite mixture of Gaussians, given as ``((weight, Gaussian), ...)``."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), g) for w, g in self.components)
        if not comps:
            raise ValueError("Mixture needs at least one component")
        for w, g in comps:
            if not isinstance(g, Gaussian):
                raise TypeError("Mixture components must be Gaussian")
            if not (0.0 < w <= 1.0):
                raise ValueError(f"Mixture weight {w} outside (0, 1]")
        total = math.fsum(w for w, _ in comps)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"Mixture weights sum to {total}, expected 1")
        object.__setattr__(self, "components", comps)

    @property
    def weights(self):
        return np.array([w for w, _ in self.components])

    def sample(self, n, rng):
        # one (component, quantile) uniform pair per draw, so n draws in one
        # call equal n successive single draws from the same generator
        u = rng.random((n, 2))
        idx = np.minimum(np.searchsorted(np.cumsum(self.weights), u[:, 0], side="right"), len(self.components) - 1)
        means = np.array([g.mean for _, g in self.components])
        stds = np.array([g.std for _, g in self.components])
        return means[idx] + stds[idx] * ndtri(np.maximum(u[:, 1], _TINY))

    def cdf(self, x):
        return math.fsum(w * g.cdf(x) for w, g in self.components)

    def point_mass(self, x):
        return 0.0

    def moments(self):
        m = math.fsum(w * g.mean for w, g in self.components)
        v = math.fsum(w * (g.std**2 + (g.mean - m) ** 2) for w, g in self.components)
        return m, v

    def affine(self, a, b):
        return Mixture(tuple((w, g.affine(a, b)) for w, g in self.components))

    def char_fn(self, xi):
        return sum(w * g.char_fn(xi) for w, g in self.components)


@dataclass(frozen=True)
class Dirac:
    point: float

    def sample(self, n, rng):
        return np.full(n, float(self.point))

    def cdf(self, x):
        return 1.0 if x >= self.point else 0.0

    def point_mass(self, x):
        return 1.0 if x == self.point else 0.0

    def moments(self):
        return float(self.point), 0.0

    def affine(self, a, b):
        return Dirac(a * self.point + b)

    def char_fn(self, xi):
        return cmath.exp(1j * xi * self.point)


@dataclass(frozen=True, eq=False)
class Empirical:
    """Uniform law over a finite sample set; samples are kept sorted."""

    samples: np.ndarray

    def __post_init__(self):
        xs = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if xs.size == 0:
            raise ValueError("Empirical law needs at least one sample")
        xs.setflags(write=False)
        object.__setattr__(self, "samples", xs)

    def __eq__(self, other):
        return isinstance(other, Empirical) and np.array_equal(self.samples, other.samples)

    __hash__ = None

    def __repr__(self):
        return f"Empirical(n={self.samples.size})"

    def sample(self, n, rng):
        return rng.choice(self.samples, size=n, replace=True)

    def cdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.samples.size

    def point_mass(self, x):
        lo = np.searchsorted(self.samples, x, side="left")
        hi = np.searchsorted(self.samples, x, side="right")
        return (hi - lo) / self.samples.size

    def moments(self):
        return float(self.samples.mean()), float(self.samples.var())

    def affine(self, a, b):
        return Empirical(a * self.samples + b)

    def char_fn(self, xi):
        return complex(np.exp(1j * xi * self.samples).mean())


Distribution = Union[Gaussian, Uniform, Mixture, Dirac, Empirical]
_VARIANTS = (Gaussian, Uniform, Mixture, Dirac, Empirical)


def _check(d):
    if not isinstance(d, _VARIANTS):
        raise TypeError(f"not a Distribution: {d!r}")
    return d


def sample(d: Distribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. samples of ``d`` from ``rng``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.asarray(_check(d).sample(int(n), rng), dtype=float)


def cdf(d: Distribution, x: float) -> float:
    """Right-continuous distribution function ``d((-inf, x])``."""
    return float(_check(d).cdf(x))


def point_mass(d: Distribution, x: float) -> float:
    """Mass of the atom ``{x}`` (zero for continuous laws)."""
    return float(_check(d).point_mass(x))


def mean(d: Distribution) -> float:
    return float(_check(d).moments()[0])


def variance(d: Distribution) -> float:
    """Variance; population (divide-by-n) variance for :class:`Empirical`."""
    return float(_check(d).moments()[1])


def pushforward_affine(d: Distribution, a: float, b: float) -> Distribution:
    """Law of ``a*X + b`` for ``X ~ d``."""
    _check(d)
    if a == 0:
        return Dirac(float(b))
    return d.affine(float(a), float(b))


def _as_mixture(d):
    if isinstance(d, Gaussian):
        return ((1.0, d),)
    return d.components


def convolve(
    d1: Distribution,
    d2: Distribution,
    n: int = CONVOLVE_SAMPLE_SIZE,
    rng: np.random.Generator | None = None,
) -> Distribution:
    """Law of ``X + Y`` for independent ``X ~ d1`` and ``Y ~ d2``.

    Gaussian, Gaussian-mixture and Dirac combinations are exact. Anything
    else falls back to an :class:`Empirical` law built from ``n`` pairwise
    sums of fresh samples.
    """
    _check(d1)
    _check(d2)
    if isinstance(d1, Dirac):
        return pushforward_affine(d2, 1.0, d1.point)
    if isinstance(d2, Dirac):
        return pushforward_affine(d1, 1.0, d2.point)
    if isinstance(d1, Gaussian) and isinstance(d2, Gaussian):
        return Gaussian(d1.mean + d2.mean, math.hypot(d1.std, d2.std))
    if isinstance(d1, (Gaussian, Mixture)) and isinstance(d2, (Gaussian, Mixture)):
        comps = tuple(
            (w1 * w2, Gaussian(g1.mean + g2.mean, math.hypot(g1.std, g2.std)))
            for w1, g1 in _as_mixture(d1)
            for w2, g2 in _as_mixture(d2)
        )
        return Mixture(comps)
    if rng is None:
        rng = np.random.default_rng(_CONVOLVE_SEED)
    return Empirical(sample(d1, n, rng) + sample(d2, n, rng))


def char_fn(d: Distribution, xi: float) -> complex:
    """Characteristic function ``E[exp(i xi X)]``."""
    if xi == 0:
        return complex(1.0)
    return complex(_check(d).char_fn(float(xi)))


def standardized_moments(d: Distribution) -> tuple[float, float]:
    """Third and fourth standardized moments (skewness, kurtosis) of ``d``."""
    m, v = _check(d).moments()
    if v <= 0:
        raise ValueError("standardized moments need positive variance")
    s = math.sqrt(v)
    if isinstance(d, Gaussian):
        return 0.0, 3.0
    if isinstance(d, Uniform):
        return 0.0, 1.8
    if isinstance(d, Mixture):
        # central moments of each component about the mixture mean
        m3 = m4 = 0.0
        for w, g in d.components:
            c, s2 = g.mean - m, g.std**2
            m3 += w * (c**3 + 3 * c * s2)
            m4 += w * (c**4 + 6 * c * c * s2 + 3 * s2 * s2)
        return m3 / s**3, m4 / s**4
    if isinstance(d, Empirical):
        z = (d.samples - m) / s
        return float(np.mean(z**3)), float(np.mean(z**4))
    raise ValueError("standardized moments need positive variance")


def from_dict(spec: dict) -> Distribution:
    """Build a law from a JSON-style literal such as ``{"kind": "gaussian", ...}``."""
    kind = spec.get("kind")
    if kind == "gaussian":
        return Gaussian(float(spec["mean"]), float(spec["std"]))
    if kind == "uniform":
        return Uniform(float(spec["lo"]), float(spec["hi"]))
    if kind == "dirac":
        return Dirac(float(spec["point"]))
    if kind == "mixture":
        return Mixture(
            tuple(
                (float(c["weight"]), Gaussian(float(c["mean"]), float(c["std"])))
                for c in spec["components"]
            )
        )
    if kind == "empirical":
        return Empirical(np.asarray(spec["samples"], dtype=float))
    raise ValueError(f"unknown distribution kind {kind!r}")


def to_dict(d: Distribution) -> dict:
    if isinstance(d, Gaussian):
        return {"kind": "gaussian", "mean": d.mean, "std": d.std}
    if isinstance(d, Uniform):
        return {"kind": "uniform", "lo": d.lo, "hi": d.hi}
    if isinstance(d, Dirac):
        return {"kind": "dirac", "point": d.point}
    if isinstance(d, Mixture):
        return {
            "kind": "mixture",
            "components": [
                {"weight": w, "mean": g.mean, "std": g.std} for w, g in d.components
            ],
        }
    if isinstance(d, Empirical):
        return {"kind": "empirical", "samples": d.samples.tolist()}
    raise TypeError(f"not a Distribution: {d!r}")

