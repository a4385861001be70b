"""Micro/macro metrics, parameter sweeps, isolines, presets and CSV output."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .distributions import Distribution, Gaussian, Mixture, Uniform
from .dynamics import (
    ModelParams,
    PopulationRun,
    RecommenderConfig,
    SuccessRule,
    run_population,
)
from .limits import no_exploration_limit
from .transport import w_empirical, w_sampled

__all__ = [
    "endpoints",
    "micro_shift",
    "micro_mean_square_shift",
    "macro_shift",
    "bimodality",
    "beta_grid",
    "SweepSpec",
    "SweepGrid",
    "run_sweep",
    "IsolineReport",
    "isoline_check",
    "RunPreset",
    "PolarizationSpec",
    "run_polarization",
    "preset",
    "PRESETS",
    "emit_grid_csv",
    "emit_trajectory_csv",
    "read_grid_csv",
    "read_trajectory_csv",
    "grid_csv_name",
]

MICRO, MACRO = "micro", "macro"
ISOLINE_BUCKET = 0.02


def endpoints(population) -> tuple[np.ndarray, np.ndarray]:
    """``(x0, x_final)`` arrays of a :class:`PopulationRun` or trajectory list."""
    if isinstance(population, PopulationRun):
        return population.x0, population.x_final
    pop = list(population)
    x0 = np.array([t.x0 for t in pop], dtype=float)
    xn = np.array([t.x_final for t in pop], dtype=float)
    return x0, xn


def micro_shift(population) -> float:
    """Mean absolute change between each user's initial and final opinion."""
    x0, xn = endpoints(population)
    if x0.size < 1:
        raise ValueError("micro shift needs at least one user")
    return float(np.mean(np.abs(x0 - xn)))


def micro_mean_square_shift(population) -> float:
    x0, xn = endpoints(population)
    return float(np.mean((x0 - xn) ** 2))


def macro_shift(population) -> float:
    """W1 between the initial and the final opinion samples."""
    x0, xn = endpoints(population)
    if x0.size < 2:
        raise ValueError("macro shift needs at least two users")
    return w_empirical(x0, xn, 1).distance


def bimodality(values) -> float:
    """Distance between the medians of the lower and upper half of a sample."""
    xs = np.sort(np.asarray(values, dtype=float))
    half = xs.size // 2
    if half < 1:
        raise ValueError("bimodality needs at least two samples")
    return float(np.median(xs[-half:]) - np.median(xs[:half]))


def beta_grid(alpha: float, step: float = 0.1) -> list[float]:
    """``beta in {0, step, ...}`` up to ``1 - alpha``, excluding ``beta = 1``."""
    out = []
    i = 0
    while True:
        b = round(i * step, 10)
        if b > 1.0 - alpha + 1e-12 or b >= 1.0:
            break
        out.append(b)
        i += 1
    return out


@dataclass(frozen=True)
class SweepSpec:
    alpha_values: tuple
    beta_grid: tuple  # one tuple of betas per alpha
    T_values: tuple
    cycles: int = 20
    population: int = 500
    mu0: Distribution = Uniform(-2.0, 2.0)
    rho: Distribution = Gaussian(0.0, 1.0)
    master_seed: int = 0
    record_full_paths: bool = False
    success_rule: SuccessRule = SuccessRule.LEMMA
    kind: str = "micro_macro"  # or "no_exploration": W1 to the no-exploration limit
    horizon: Optional[int] = None  # fixed step count for every cell instead of cycles * T

    def __post_init__(self):
        object.__setattr__(self, "alpha_values", tuple(float(a) for a in self.alpha_values))
        object.__setattr__(self, "beta_grid", tuple(tuple(float(b) for b in row) for row in self.beta_grid))
        object.__setattr__(self, "T_values", tuple(int(t) for t in self.T_values))
        if not self.alpha_values or not self.T_values:
            raise ValueError("sweep grids must be nonempty")
        if len(self.beta_grid) != len(self.alpha_values):
            raise ValueError("need one beta list per alpha value")
        if any(len(row) == 0 for row in self.beta_grid):
            raise ValueError("sweep grids must be nonempty")
        if self.kind not in ("micro_macro", "no_exploration"):
            raise ValueError(f"unknown sweep kind {self.kind!r}")

    @classmethod
    def full(cls, alpha_values, T_values, **kw):
        """Spec with the standard ``beta`` grid for every ``alpha``."""
        return cls(tuple(alpha_values), tuple(tuple(beta_grid(a)) for a in alpha_values), tuple(T_values), **kw)

    def cells(self):
        """Yield ``(alpha_index, beta_index, alpha, beta, T)`` for every cell."""
        for ai, a in enumerate(self.alpha_values):
            for bi, b in enumerate(self.beta_grid[ai]):
                for T in self.T_values:
                    yield ai, bi, a, b, T


@dataclass
class SweepGrid:
    """Metric values per ``(alpha, beta, T)`` cell."""

    cells: dict = field(default_factory=dict)
    metrics: tuple = (MICRO, MACRO)

    @property
    def normalization(self) -> dict:
        """Per ``(alpha, metric)`` maximum over all ``beta`` and ``T``."""
        out = {}
        for (a, _, _), vals in self.cells.items():
            for m in self.metrics:
                out[(a, m)] = max(out.get((a, m), -math.inf), vals[m])
        return out

    @property
    def alphas(self):
        return sorted({a for a, _, _ in self.cells})

    def values(self, alpha: float, metric: str, normalized: bool = False) -> dict:
        """``{(beta, T): value}`` for one ``alpha``."""
        top = self.normalization[(alpha, metric)] if normalized else 1.0
        out = {}
        for (a, b, T), vals in self.cells.items():
            if a != alpha:
                continue
            v = vals[metric]
            if normalized:
                v = v / top if top > 0 else 0.0
            out[(b, T)] = v
        return out


def _cell_seed(master_seed, ai, bi, T):
    return rngmod.derive_seed(master_seed, ai, bi, T)


def _run_cell(spec: SweepSpec, ai, bi, alpha, beta, T):
    params = ModelParams(alpha, beta, spec.mu0, spec.rho)
    seed = _cell_seed(spec.master_seed, ai, bi, T)
    cfg = RecommenderConfig(
        period=T, cycles=spec.cycles, horizon_override=spec.horizon, success_rule=spec.success_rule, master_seed=seed
    )
    run = run_population(params, cfg, spec.population, record=spec.record_full_paths)
    if spec.kind == "no_exploration":
        oracle = rngmod.substream(seed, rngmod.ORACLE, 0)
        limit = no_exploration_limit(params, rngmod.substream(seed, rngmod.ORACLE, 1))
        return {"w1_limit": w_sampled(run.x_final, limit, oracle, p=1).distance}
    return {MICRO: micro_shift(run), MACRO: macro_shift(run)}


def _run_cell_star(args):
    return _run_cell(*args)


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepGrid:
    """Run one population per cell; each cell has its own derived seed."""
    jobs = []
    for ai, bi, a, b, T in spec.cells():
        if a + b > 1.0 + 1e-12 or not 0.0 <= b < 1.0 or not 0.0 <= a <= 1.0:
            raise ValueError(f"infeasible cell alpha={a}, beta={b}, T={T}")
        jobs.append((spec, ai, bi, a, b, T))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_run_cell_star(j) for j in jobs]
    metrics = ("w1_limit",) if spec.kind == "no_exploration" else (MICRO, MACRO)
    grid = SweepGrid(metrics=metrics)
    for (_, _, _, a, b, T), res in zip(jobs, results):
        grid.cells[(a, b, T)] = res
    return grid


@dataclass
class IsolineReport:
    c: float
    cells: list  # (beta, T) pairs in the group
    micro_spread: float
    macro_spread: float
    tol_rel: float

    @property
    def flagged(self) -> list:
        return [m for m, s in ((MICRO, self.micro_spread), (MACRO, self.macro_spread)) if s > self.tol_rel]


def _relative_spread(values):
    vals = np.asarray(values, dtype=float)
    centre = abs(vals.mean())
    if centre == 0:
        return 0.0 if np.ptp(vals) == 0 else math.inf
    return float(np.ptp(vals) / centre)


def isoline_check(
    grid: SweepGrid, c: float, tol_rel: float, alpha: float = 0.0, bucket: float = ISOLINE_BUCKET
) -> IsolineReport:
    """Group the ``alpha`` slice by ``beta^(T-1)`` near ``c`` and measure the spread.

    The spread of a group is ``(max - min) / mean`` of the raw metric.
    """
    if alpha not in grid.alphas:
        raise ValueError(f"no cells with alpha={alpha}")
    micro = grid.values(alpha, MICRO)
    macro = grid.values(alpha, MACRO)
    group = sorted(k for k in micro if abs(k[0] ** (k[1] - 1) - c) <= bucket)
    if not group:
        raise ValueError(f"empty isoline: no cell with |beta^(T-1) - {c}| <= {bucket}")
    return IsolineReport(
        c,
        group,
        _relative_spread([micro[k] for k in group]),
        _relative_spread([macro[k] for k in group]),
        tol_rel,
    )


@dataclass(frozen=True)
class RunPreset:
    """Configuration of a single population run."""

    params: ModelParams
    config: RecommenderConfig
    population: int


@dataclass(frozen=True)
class PolarizationSpec:
    separations: tuple = tuple(round(0.1 * i, 10) for i in range(21))
    T_values: tuple = tuple(range(1, 22))
    alpha: float = 0.0
    beta: float = 0.8
    mode_std: float = 0.1
    cycles: int = 20
    population: int = 500
    mu0: Distribution = Uniform(-2.0, 2.0)
    master_seed: int = 0

    def rho(self, separation: float) -> Distribution:
        if separation == 0:
            return Gaussian(0.0, self.mode_std)
        half = separation / 2.0
        return Mixture(((0.5, Gaussian(-half, self.mode_std)), (0.5, Gaussian(half, self.mode_std))))


def _run_polarization_cell(spec: PolarizationSpec, si, sep, T):
    rho = spec.rho(sep)
    params = ModelParams(spec.alpha, spec.beta, spec.mu0, rho)
    seed = _cell_seed(spec.master_seed, 0, si, T)
    cfg = RecommenderConfig(period=T, cycles=spec.cycles, master_seed=seed)
    run = run_population(params, cfg, spec.population)
    oracle = rngmod.substream(seed, rngmod.ORACLE, 0)
    return {
        "beta_pow": spec.beta ** (T - 1),
        "w1_to_rho": w_sampled(run.x_final, rho, oracle, p=1).distance,
        "bimodality": bimodality(run.x_final),
    }


def run_polarization(spec: PolarizationSpec) -> dict:
    """``{(separation, T): metrics}`` for the polarized-recommendation study."""
    out = {}
    for si, sep in enumerate(spec.separations):
        for T in spec.T_values:
            out[(sep, T)] = _run_polarization_cell(spec, si, sep, T)
    return out


def _illustrative():
    params = ModelParams(0.1, 0.7, Uniform(0.0, 2.0), Gaussian(0.0, 0.5))
    return RunPreset(params, RecommenderConfig(period=5, cycles=10), 5000)


def _bimodal_gaussian():
    rho = Mixture(((0.5, Gaussian(-1.0, 0.4)), (0.5, Gaussian(1.0, 0.4))))
    params = ModelParams(0.0, 0.8, Uniform(-2.0, 2.0), rho)
    return RunPreset(params, RecommenderConfig(period=3, cycles=34, horizon_override=100), 5000)


def _micro_macro_sweep():
    return SweepSpec.full((0.0, 0.1, 0.2), range(1, 22), cycles=20, population=500)


def _no_exploration_convergence():
    return SweepSpec(
        (0.1,),
        (tuple(beta_grid(0.1)),),
        tuple(range(1, 52)),
        population=5000,
        mu0=Uniform(0.0, 2.0),
        rho=Gaussian(0.0, 0.5),
        kind="no_exploration",
        horizon=50,
    )


PRESETS = {
    "illustrative": _illustrative,
    "bimodal_gaussian": _bimodal_gaussian,
    "micro_macro_sweep": _micro_macro_sweep,
    "no_exploration_convergence": _no_exploration_convergence,
    "polarization": PolarizationSpec,
}


def preset(name: str):
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory()


def grid_csv_name(metric: str, alpha: float, normalized: bool = True) -> str:
    suffix = "" if normalized else "_raw"
    return f"d_{metric}_alpha={alpha:g}{suffix}.csv"


def _fmt(v):
    return f"{v:.6f}"


def emit_grid_csv(grid: SweepGrid, path, alpha: float, metric: str, normalized: bool = True) -> Path:
    """Write ``T,beta,value`` rows for one ``(alpha, metric)``, sorted by T then beta."""
    vals = grid.values(alpha, metric, normalized)
    rows = sorted(vals.items(), key=lambda kv: (kv[0][1], kv[0][0]))
    text = "".join(f"{T},{_fmt(b)},{_fmt(v)}\n" for (b, T), v in rows)
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def emit_trajectory_csv(population, path) -> Path:
    """Write one ``x0,xN`` row per user, in user-index order."""
    x0, xn = endpoints(population)
    text = "".join(f"{_fmt(a)},{_fmt(b)}\n" for a, b in zip(x0, xn))
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def read_grid_csv(path) -> dict:
    """``{(beta, T): value}`` from a grid file."""
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        T, b, v = line.split(",")
        out[(float(b), int(T))] = float(v)
    return out


def read_trajectory_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return data
