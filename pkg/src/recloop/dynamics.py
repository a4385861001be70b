"""Closed loop between opinionated users and a greedy recommender.

Each user holds a fixed bias ``x0`` and an opinion ``x`` updated by the
Friedkin-Johnsen rule ``x' = alpha*x0 + beta*x + (1 - alpha - beta)*u``.
The recommender serves the best recommendation found so far and explores
(draws ``u ~ rho``) at steps ``0, T, 2T, ...``.

Two rules decide whether an exploration replaces the incumbent:

``SuccessRule.LEMMA`` (default)
    replace iff the draw is strictly closer to the current opinion than
    the incumbent.
``SuccessRule.HISTORY``
    replace iff the draw's reward beats the best reward the incumbent
    ever earned (argmax over the full reward history).
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import kernels, rng as rngmod
from .distributions import Distribution, cdf, point_mass, sample

__all__ = [
    "INITIAL_ONLY",
    "SuccessRule",
    "ModelParams",
    "RecommenderConfig",
    "UserState",
    "UserTrajectory",
    "PopulationRun",
    "reward",
    "step_opinion",
    "closed_form_hold",
    "success_probability",
    "recommender_step",
    "simulate_user",
    "simulate_population",
    "run_population",
]

#: period sentinel: explore only at k = 0 (T = +inf)
INITIAL_ONLY = None


class SuccessRule(enum.Enum):
    LEMMA = "lemma"
    HISTORY = "history"


def reward(d: float) -> float:
    """Reward of a recommendation at distance ``d`` from the opinion (telemetry only)."""
    return math.exp(-d * d)


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    beta: float
    mu0: Distribution
    rho: Distribution

    def __post_init__(self):
        a, b = self.alpha, self.beta
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {a}")
        if not 0.0 <= b < 1.0:
            raise ValueError(f"beta must lie in [0, 1), got {b}")
        if a + b > 1.0 + 1e-12:
            raise ValueError(f"alpha + beta must be <= 1, got alpha={a}, beta={b}")

    @property
    def gamma(self) -> float:
        """Weight of the recommendation, ``1 - alpha - beta`` (clipped at 0)."""
        return max(1.0 - self.alpha - self.beta, 0.0)

    @property
    def eta(self) -> float:
        return self.alpha / (1.0 - self.beta)


@dataclass(frozen=True)
class RecommenderConfig:
    period: Optional[int] = INITIAL_ONLY
    cycles: int = 1
    horizon_override: Optional[int] = None
    success_rule: SuccessRule = SuccessRule.LEMMA
    master_seed: int = 0

    def __post_init__(self):
        if self.period is INITIAL_ONLY:
            if self.horizon_override is None or self.horizon_override < 1:
                raise ValueError("initial-only exploration needs a positive horizon_override")
        else:
            if int(self.period) != self.period or self.period < 1:
                raise ValueError(f"period must be a positive integer, got {self.period}")
            if int(self.cycles) != self.cycles or self.cycles < 1:
                raise ValueError(f"cycles must be a positive integer, got {self.cycles}")
            if self.horizon_override is not None and self.horizon_override < 1:
                raise ValueError("horizon_override must be positive")
        if not isinstance(self.success_rule, SuccessRule):
            object.__setattr__(self, "success_rule", SuccessRule(self.success_rule))

    @property
    def horizon(self) -> int:
        """``cycles * period``, unless ``horizon_override`` is set."""
        if self.horizon_override is not None:
            return int(self.horizon_override)
        return int(self.cycles * self.period)

    @property
    def explorations(self) -> int:
        """Number of exploration steps ``k < horizon``."""
        if self.period is INITIAL_ONLY:
            return 1
        return -(-self.horizon // self.period)

    def is_exploration(self, k: int) -> bool:
        if self.period is INITIAL_ONLY:
            return k == 0
        return k % self.period == 0


@dataclass(frozen=True)
class UserState:
    x0: float
    x: float
    incumbent: float = math.nan
    incumbent_best_reward: float = -math.inf
    step: int = 0


@dataclass
class UserTrajectory:
    x0: float
    x_final: float
    path: Optional[np.ndarray] = None
    served: Optional[np.ndarray] = None


@dataclass
class PopulationRun:
    """Array view of a simulated population (one entry per user index)."""

    x0: np.ndarray
    x_final: np.ndarray
    incumbent: np.ndarray
    paths: Optional[np.ndarray] = None
    served: Optional[np.ndarray] = None

    def __len__(self):
        return self.x0.size

    def trajectories(self) -> list[UserTrajectory]:
        out = []
        for i in range(self.x0.size):
            out.append(
                UserTrajectory(
                    float(self.x0[i]),
                    float(self.x_final[i]),
                    None if self.paths is None else self.paths[i],
                    None if self.served is None else self.served[i],
                )
            )
        return out


def step_opinion(x: float, x0: float, u: float, params: ModelParams) -> float:
    return params.alpha * x0 + params.beta * x + params.gamma * u


def closed_form_hold(x0: float, u: float, params: ModelParams, k: int) -> float:
    """Opinion after ``k`` steps of the constant recommendation ``u``, starting at ``x0``."""
    eta, bk = params.eta, params.beta**k
    return (eta + bk * (1.0 - eta)) * x0 + (1.0 - bk) * (1.0 - eta) * u


def success_probability(x: float, u: float, rho: Distribution) -> float:
    """Probability that a fresh draw of ``rho`` lands strictly closer to ``x`` than ``u``."""
    r = abs(x - u)
    p = cdf(rho, x + r) - point_mass(rho, x + r) - cdf(rho, x - r)
    return min(max(p, 0.0), 1.0)


def recommender_step(
    state: UserState,
    k: int,
    cfg: RecommenderConfig,
    params: ModelParams,
    rng: np.random.Generator,
    reward_shape: Callable[[float], float] = reward,
) -> tuple[float, UserState]:
    """Serve one recommendation at step ``k`` and advance the opinion.

    Pure-Python reference for the vectorised kernels; the draw for an
    exploration step is taken from ``rng`` only when ``k`` is one.
    """
    if k >= cfg.horizon:
        raise ValueError(f"step {k} beyond horizon {cfg.horizon}")
    x = state.x
    incumbent, best = state.incumbent, state.incumbent_best_reward
    if cfg.is_exploration(k):
        u = float(sample(params.rho, 1, rng)[0])
        r_new = reward_shape(abs(x - u))
        if k == 0:
            incumbent, best = u, r_new
        elif cfg.success_rule is SuccessRule.HISTORY:
            if r_new > best:
                incumbent, best = u, r_new
        elif abs(x - u) < abs(x - incumbent):
            incumbent = u
    else:
        u = incumbent
        if cfg.success_rule is SuccessRule.HISTORY:
            best = max(best, reward_shape(abs(x - u)))
    x_next = step_opinion(x, state.x0, u, params)
    return u, replace(state, x=x_next, incumbent=incumbent, incumbent_best_reward=best, step=k + 1)


def _user_inputs(params, cfg, indices):
    seed = cfg.master_seed
    n_draws = cfg.explorations
    x0 = np.empty(len(indices))
    draws = np.empty((len(indices), n_draws))
    for row, i in enumerate(indices):
        x0[row] = sample(params.mu0, 1, rngmod.substream(seed, rngmod.BIASES, i))[0]
        draws[row] = sample(params.rho, n_draws, rngmod.substream(seed, rngmod.RECOMMENDATIONS, i))
    return x0, draws


def _run_block(params, cfg, indices, record, backend=None):
    x0, draws = _user_inputs(params, cfg, indices)
    run = backend or kernels.run_users
    out = run(
        x0,
        draws,
        params.alpha,
        params.beta,
        params.gamma,
        0 if cfg.period is INITIAL_ONLY else int(cfg.period),
        cfg.horizon,
        cfg.success_rule is SuccessRule.HISTORY,
        record,
    )
    return (x0,) + tuple(out)


def _run_block_star(args):
    return _run_block(*args)


def run_population(
    params: ModelParams,
    cfg: RecommenderConfig,
    m: int,
    workers: int = 1,
    record: bool = False,
    first_index: int = 0,
) -> PopulationRun:
    """Simulate users ``first_index .. first_index + m - 1``.

    The result depends only on ``(params, cfg, m)``, never on ``workers``.
    """
    if m < 1:
        raise ValueError("population size must be >= 1")
    indices = np.arange(first_index, first_index + m)
    if workers <= 1 or m < 2:
        parts = [_run_block(params, cfg, indices, record)]
    else:
        blocks = [b for b in np.array_split(indices, workers) if b.size]
        with ProcessPoolExecutor(max_workers=len(blocks)) as pool:
            parts = list(pool.map(_run_block_star, [(params, cfg, b, record) for b in blocks]))
    cols = list(zip(*parts))
    x0, x_final, incumbent = (np.concatenate(c) for c in cols[:3])
    paths = np.concatenate(cols[3]) if record else None
    served = np.concatenate(cols[4]) if record else None
    return PopulationRun(x0, x_final, incumbent, paths, served)


def simulate_user(
    params: ModelParams, cfg: RecommenderConfig, user_index: int, record: bool = False
) -> UserTrajectory:
    return run_population(params, cfg, 1, record=record, first_index=user_index).trajectories()[0]


def simulate_population(
    params: ModelParams, cfg: RecommenderConfig, m: int, workers: int = 1, record: bool = False
) -> list[UserTrajectory]:
    return run_population(params, cfg, m, workers=workers, record=record).trajectories()
