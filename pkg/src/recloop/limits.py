"""Analytic oracles for the two tractable exploration regimes.

* no exploration (``T = +inf``): every user keeps its first random
  recommendation, so the opinion law converges to
  ``(eta x)#mu0 * ((1 - eta) x)#rho``;
* continuous exploration (``T = 1``): closed-form mean and variance, a
  Gaussian limit when both laws are Gaussian, and a bound on how far the
  normalised discounted-sum law is from the standard normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import (
    Distribution,
    Gaussian,
    char_fn,
    convolve,
    mean,
    pushforward_affine,
    sample,
    standardized_moments,
    variance,
)
from .dynamics import ModelParams

__all__ = [
    "LimitReport",
    "no_exploration_limit",
    "continuous_exploration_moments",
    "continuous_exploration_gaussian_limit",
    "gaussian_proximity_bound",
    "proximity_constant",
    "example_micro_macro",
    "discounted_sum_terms",
    "discounted_sum_sample",
    "discounted_sum_samples",
    "limit_report",
]

STANDARD_NORMAL = Gaussian(0.0, 1.0)

NO_EXPLORATION = "NO_EXPLORATION"
CONTINUOUS = "CONTINUOUS"

# ratio grid for the proximity bound: |xi| in [1e-3, 1e2], 2000 points per sign
_XI_MIN, _XI_MAX, _XI_POINTS = 1e-3, 1e2, 2000
# below this |xi| the characteristic-function difference is replaced by its Taylor expansion
_TAYLOR_XI = 1e-2


@dataclass(frozen=True)
class LimitReport:
    regime: str
    limit_law: Optional[Distribution]
    mean: float
    variance: float
    gaussian_bound: Optional[float] = None


def no_exploration_limit(params: ModelParams, rng: np.random.Generator | None = None) -> Distribution:
    """Opinion law reached when the first random recommendation is kept forever."""
    eta = params.eta
    bias_part = pushforward_affine(params.mu0, eta, 0.0)
    rec_part = pushforward_affine(params.rho, 1.0 - eta, 0.0)
    return convolve(bias_part, rec_part, rng=rng)


def continuous_exploration_moments(params: ModelParams) -> tuple[float, float]:
    eta, gamma, beta = params.eta, params.gamma, params.beta
    m = eta * mean(params.mu0) + (1.0 - eta) * mean(params.rho)
    v = eta**2 * variance(params.mu0) + gamma**2 / (1.0 - beta**2) * variance(params.rho)
    return m, v


def continuous_exploration_gaussian_limit(params: ModelParams) -> Gaussian:
    if not (isinstance(params.mu0, Gaussian) and isinstance(params.rho, Gaussian)):
        raise TypeError("closed form requires Gaussians")
    m, v = continuous_exploration_moments(params)
    return Gaussian(m, math.sqrt(v))


def proximity_constant(beta: float) -> float:
    """Prefactor ``(18/pi)^(1/3) ((1 - beta^2) / (e beta^2))^(1/12)``."""
    return (18.0 / math.pi) ** (1.0 / 3.0) * ((1.0 - beta**2) / (math.e * beta**2)) ** (1.0 / 12.0)


def _char_gap_ratio(rho_hat, xi):
    gap = char_fn(rho_hat, xi) - char_fn(STANDARD_NORMAL, xi)
    return abs(gap) / abs(xi) ** 3


def _taylor_gap_ratio(skew, kurt, xi):
    # C(xi) - exp(-xi^2/2) = -i skew xi^3 / 6 + (kurt - 3) xi^4 / 24 + O(xi^5)
    gap = complex((kurt - 3.0) * xi**4 / 24.0, -skew * xi**3 / 6.0)
    return abs(gap) / abs(xi) ** 3


def gaussian_proximity_bound(rho_hat: Distribution, beta: float) -> float:
    """Upper bound on W1 between a normalised discounted-sum law and N(0, 1).

    ``rho_hat`` must already have zero mean and unit variance. The supremum
    of ``|C(xi) - C_Phi(xi)| / |xi|^3`` is taken on a logarithmic grid;
    ``inf`` is returned when the ratio is not finite there.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    m, v = mean(rho_hat), variance(rho_hat)
    if abs(m) > 1e-9 or abs(v - 1.0) > 1e-9:
        raise ValueError(f"bound requires normalized law (mean={m}, variance={v})")
    skew, kurt = standardized_moments(rho_hat)
    pos = np.geomspace(_XI_MIN, _XI_MAX, _XI_POINTS)
    best = abs(skew) / 6.0  # limit of the ratio as xi -> 0
    for xi in np.concatenate([-pos[::-1], pos]):
        if abs(xi) < _TAYLOR_XI:
            r = _taylor_gap_ratio(skew, kurt, xi)
        else:
            r = _char_gap_ratio(rho_hat, xi)
        if not math.isfinite(r):
            return math.inf
        best = max(best, r)
    return proximity_constant(beta) * best


def example_micro_macro(sigma: float, alpha: float, beta: float) -> tuple[float, float]:
    """Macro (squared W2) and micro (mean squared shift) change for ``mu0 = rho = N(0, sigma)``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not 0.0 <= beta < 1.0 or alpha < 0 or alpha + beta > 1.0 + 1e-12:
        raise ValueError(f"infeasible (alpha, beta) = ({alpha}, {beta})")
    eta = alpha / (1.0 - beta)
    w2_sq = sigma**2 * (1.0 - math.sqrt(eta**2 + (1.0 - eta) ** 2)) ** 2
    delta = 2.0 * (1.0 - eta) ** 2 * sigma**2
    return w2_sq, delta


def discounted_sum_terms(beta: float) -> int:
    """Terms needed so the truncated geometric tail is below 1e-9."""
    return math.ceil(9.0 / -math.log10(beta))


def discounted_sum_samples(
    nu: Distribution, beta: float, n: int, rng: np.random.Generator, n_terms: int | None = None
) -> np.ndarray:
    """``n`` independent realisations of ``sum_l beta^(K-1-l) (1 - beta) X_l``."""
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    k = n_terms or discounted_sum_terms(beta)
    weights = (1.0 - beta) * beta ** np.arange(k - 1, -1, -1)
    xs = sample(nu, n * k, rng).reshape(n, k)
    return xs @ weights


def discounted_sum_sample(
    nu: Distribution, beta: float, n_terms: int, rng: np.random.Generator
) -> float:
    if beta ** n_terms >= 1e-9:
        raise ValueError(f"n_terms={n_terms} too small for beta={beta}")
    return float(discounted_sum_samples(nu, beta, 1, rng, n_terms)[0])


def limit_report(params: ModelParams, regime: str, rng: np.random.Generator | None = None) -> LimitReport:
    """Summarise the analytic limit of ``params`` in the given regime."""
    if regime == NO_EXPLORATION:
        law = no_exploration_limit(params, rng)
        eta = params.eta
        m = eta * mean(params.mu0) + (1.0 - eta) * mean(params.rho)
        v = eta**2 * variance(params.mu0) + (1.0 - eta) ** 2 * variance(params.rho)
        return LimitReport(regime, law, m, v)
    if regime == CONTINUOUS:
        m, v = continuous_exploration_moments(params)
        law = None
        if isinstance(params.mu0, Gaussian) and isinstance(params.rho, Gaussian):
            law = continuous_exploration_gaussian_limit(params)
        bound = None
        if 0.0 < params.beta < 1.0 and variance(params.rho) > 0:
            sd = math.sqrt(variance(params.rho))
            rho_hat = pushforward_affine(params.rho, 1.0 / sd, -mean(params.rho) / sd)
            try:
                bound = gaussian_proximity_bound(rho_hat, params.beta)
            except ValueError:
                bound = None
        return LimitReport(regime, law, m, v, bound)
    raise ValueError(f"unknown regime {regime!r}")
