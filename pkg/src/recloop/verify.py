"""Acceptance criteria A1-A13, runnable from the CLI and from pytest.

Each criterion returns a :class:`CriterionResult`; it passes only when the
measured value is within tolerance *and* the run stayed inside its time
budget.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import erf

from . import limits, rng as rngmod, transport
from .distributions import Gaussian, Mixture, Uniform, sample
from .dynamics import INITIAL_ONLY, ModelParams, RecommenderConfig, run_population, success_probability
from .experiments import (
    MACRO,
    MICRO,
    SweepSpec,
    emit_grid_csv,
    emit_trajectory_csv,
    isoline_check,
    macro_shift,
    micro_mean_square_shift,
    preset,
    run_sweep,
)

DEFAULT_SEED = 20231


@dataclass
class CriterionResult:
    id: str
    observed: str
    expected: str
    tolerance: str
    passed: bool
    seconds: float = 0.0
    budget: float = math.inf
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{self.id} {status} observed={self.observed} expected={self.expected} "
            f"tolerance={self.tolerance} seconds={self.seconds:.2f} budget={self.budget:g}"
            + (f" detail={self.detail}" if self.detail else "")
        )


@dataclass
class _Context:
    seed: int
    level: str
    cache: dict = field(default_factory=dict)


def _phi(x):
    return 0.5 * (1.0 + erf(x / math.sqrt(2.0)))


def _mc_success_frequency(x, u, rho, n, g):
    draws = sample(rho, n, g)
    return float(np.mean(np.abs(x - draws) < abs(x - u)))


def a1(ctx):
    rho = Uniform(-1.0, 1.0)
    p = success_probability(0.1, 0.4, rho)
    freq = _mc_success_frequency(0.1, 0.4, rho, 100_000, rngmod.substream(ctx.seed, rngmod.ORACLE, 1))
    ok = p == 0.3 or abs(p - 0.3) <= 1e-15
    ok = ok and abs(freq - p) <= 0.006
    return f"p={p:.12g},freq={freq:.5f}", "0.3", "exact;mc<=0.006", ok, 1.0


def a2(ctx):
    rho = Gaussian(0.0, 1.0)
    p = success_probability(0.0, 1.0, rho)
    oracle = _phi(1.0) - _phi(-1.0)
    freq = _mc_success_frequency(0.0, 1.0, rho, 100_000, rngmod.substream(ctx.seed, rngmod.ORACLE, 2))
    ok = abs(p - oracle) <= 1e-6 and abs(freq - p) <= 0.006
    return f"p={p:.8f},freq={freq:.5f}", f"{oracle:.8f}", "1e-6;mc<=0.006", ok, 1.0


def a3(ctx):
    w = transport.w2_gaussian(Gaussian(0.0, 1.0), Gaussian(0.0, 2.0))
    g = rngmod.substream(ctx.seed, rngmod.ORACLE, 3)
    xs = sample(Gaussian(0.0, 1.0), 100_000, g)
    ys = sample(Gaussian(0.0, 2.0), 100_000, g)
    emp = transport.w_empirical(xs, ys, 2).distance
    ok = abs(w - 1.0) <= 1e-12 and abs(emp - w) <= 0.02
    return f"closed={w:.12g},empirical={emp:.5f}", "1", "exact;empirical<=0.02", ok, 2.0


def a4(ctx):
    params = ModelParams(0.1, 0.7, Uniform(-2.0, 2.0), Gaussian(0.0, 0.5))
    cfg = RecommenderConfig(period=INITIAL_ONLY, horizon_override=100, master_seed=ctx.seed)
    run = run_population(params, cfg, 5000)
    limit = limits.no_exploration_limit(params, rngmod.substream(ctx.seed, rngmod.ORACLE, 41))
    w1 = transport.w_sampled(run.x_final, limit, rngmod.substream(ctx.seed, rngmod.ORACLE, 40), 1).distance
    return f"{w1:.5f}", "0", "<=0.05", w1 <= 0.05, 5.0


def _a5_run(ctx):
    if "a5" not in ctx.cache:
        params = ModelParams(0.2, 0.5, Gaussian(1.0, 1.0), Gaussian(0.0, 1.0))
        cfg = RecommenderConfig(period=1, cycles=200, master_seed=ctx.seed + 5)
        ctx.cache["a5"] = (params, run_population(params, cfg, 10_000))
    return ctx.cache["a5"]


def a5(ctx):
    params, run = _a5_run(ctx)
    m_exp, v_exp = limits.continuous_exploration_moments(params)
    m, v = float(run.x_final.mean()), float(run.x_final.var())
    ok = abs(m - 0.4) <= 0.03 and abs(v - 0.28) <= 0.03
    return f"mean={m:.5f},var={v:.5f}", f"mean={m_exp:.4g},var={v_exp:.4g}", "0.03", ok, 10.0


def a6(ctx):
    params, run = _a5_run(ctx)
    law = limits.continuous_exploration_gaussian_limit(params)
    w1 = transport.w_sampled(run.x_final, law, rngmod.substream(ctx.seed, rngmod.ORACLE, 60), 1).distance
    return f"{w1:.5f}", "0", "<=0.03", w1 <= 0.03, 10.0


def a7(ctx):
    sigma = 1.0
    law = Gaussian(0.0, sigma)
    beta = 0.7
    cfg = RecommenderConfig(period=INITIAL_ONLY, horizon_override=1000, master_seed=ctx.seed + 7)
    run0 = run_population(ModelParams(0.0, beta, law, law), cfg, 10_000)
    macro0, ms0 = macro_shift(run0), micro_mean_square_shift(run0)
    _, delta = limits.example_micro_macro(sigma, 0.0, beta)
    run1 = run_population(ModelParams(1.0 - beta, beta, law, law), cfg, 10_000)
    macro1, ms1 = macro_shift(run1), micro_mean_square_shift(run1)
    ok = macro0 <= 0.05 and abs(ms0 - delta) <= 0.05 * delta and macro1 <= 1e-9 and ms1 <= 1e-9
    return (
        f"alpha0:macro={macro0:.4f},msq={ms0:.4f};alpha1-beta:macro={macro1:.2e},msq={ms1:.2e}",
        f"macro~0,msq={delta:g};both=0",
        "macro<=0.05,msq 5%;1e-9",
        ok,
        10.0,
    )


def a8_spec(seed):
    return SweepSpec(
        (0.0,),
        ((0.0, 0.2, 0.4, 0.6, 0.8),),
        tuple(range(1, 22, 2)),
        cycles=20,
        population=500,
        mu0=Uniform(-2.0, 2.0),
        rho=Gaussian(0.0, 1.0),
        master_seed=seed,
    )


def isoline_spec(seed):
    """alpha = 0 grid on the 0.1-step beta lattice (T = 1..21)."""
    return SweepSpec.full((0.0,), range(1, 22), cycles=20, population=500, master_seed=seed)


def _pearson(grid):
    micro = grid.values(0.0, MICRO, normalized=True)
    macro = grid.values(0.0, MACRO, normalized=True)
    keys = sorted(micro)
    return float(np.corrcoef([micro[k] for k in keys], [macro[k] for k in keys])[0, 1])


def a8(ctx):
    grid = run_sweep(a8_spec(ctx.seed))
    ctx.cache["a8"] = grid
    r = _pearson(grid)
    return f"{r:.4f}", "<0", "sign", r < 0, 60.0


def a9(ctx):
    literal = ctx.cache.get("a8") or run_sweep(a8_spec(ctx.seed))
    notes = []
    for c in (0.81, 0.33):
        try:
            isoline_check(literal, c, 0.15)
        except ValueError:
            notes.append(f"a8-grid-empty@{c}")
    grid = run_sweep(isoline_spec(ctx.seed))
    spreads = []
    ok = True
    for c in (0.81, 0.33):
        rep = isoline_check(grid, c, 0.15)
        spreads.append(f"c={c}:{rep.micro_spread:.3f}")
        ok = ok and rep.micro_spread <= 0.15
    return ",".join(spreads), "<=0.15", "relative spread (max-min)/mean", ok, 60.0, ";".join(notes)


def a10(ctx):
    g = rngmod.substream(ctx.seed, rngmod.ORACLE, 10)
    n = 100_000
    worst_scale = 0.0
    worst_excess = -math.inf
    ok = True
    for trial in range(20):
        xs = g.normal(g.uniform(-1, 1), g.uniform(0.2, 2.0), n)
        ys = g.uniform(-2, 2, n) * g.uniform(0.5, 1.5) + g.uniform(-1, 1)
        a = g.uniform(0.1, 5.0)
        lhs = transport.w_empirical(a * xs, a * ys, 2).distance
        rhs = a * transport.w_empirical(xs, ys, 2).distance
        worst_scale = max(worst_scale, abs(lhs - rhs))
        zs = sample(Mixture(((0.5, Gaussian(-1.0, 0.3)), (0.5, Gaussian(1.0, 0.3)))), n, g)
        left = xs + g.permutation(zs)
        right = ys + g.permutation(zs)
        conv = transport.w_empirical(left, right, 2).distance
        base = transport.w_empirical(xs, ys, 2).distance
        worst_excess = max(worst_excess, conv - base)
        ok = ok and abs(lhs - rhs) <= 1e-12 and conv <= base + 0.02
    return (
        f"scale_err={worst_scale:.2e},conv_excess={worst_excess:.4f}",
        "scale_err=0,conv_excess<=0",
        "1e-12;0.02",
        ok,
        20.0,
    )


def _discounted_kurtosis(beta, nu_kurt):
    # kurtosis of sum w_l X_l with w_l proportional to beta^l (infinite sum)
    ratio = (1.0 - beta**2) ** 2 / (1.0 - beta**4)
    return 3.0 + (nu_kurt - 3.0) * ratio


def a11(ctx):
    beta = 0.8
    nu = Uniform(-1.0, 1.0)
    n = 100_000
    g = rngmod.substream(ctx.seed, rngmod.ORACLE, 11)
    sums = limits.discounted_sum_samples(nu, beta, n, g)
    sigma2 = 1.0 / 3.0
    v_exp = (1.0 - beta) / (1.0 + beta) * sigma2
    band = 4.0 * v_exp * math.sqrt((_discounted_kurtosis(beta, 1.8) - 1.0) / n)
    v = float(sums.var())
    normalized = math.sqrt((1.0 + beta) / ((1.0 - beta) * sigma2)) * sums
    w1 = transport.w_sampled(normalized, Gaussian(0.0, 1.0), rngmod.substream(ctx.seed, rngmod.ORACLE, 12), 1).distance
    bound = limits.gaussian_proximity_bound(Uniform(-math.sqrt(3.0), math.sqrt(3.0)), beta)
    ok = abs(v - v_exp) <= band and w1 <= bound + 0.02
    return (
        f"var={v:.6f},w1={w1:.4f}",
        f"var={v_exp:.6f},w1<=bound={bound:.4f}",
        f"4sigma={band:.2e};slack 0.02",
        ok,
        10.0,
    )


def a12(ctx):
    pre = preset("illustrative")
    cfg = RecommenderConfig(
        period=pre.config.period, cycles=pre.config.cycles, master_seed=ctx.seed + 12
    )
    run = run_population(pre.params, cfg, pre.population)
    m0, mn = float(run.x0.mean()), float(run.x_final.mean())
    with tempfile.TemporaryDirectory() as tmp:
        path = emit_trajectory_csv(run, Path(tmp) / "illustrative.csv")
        lines = path.read_text(encoding="utf-8").splitlines()
    ok = mn < m0 and len(lines) == 5000 and abs(m0 - 1.0) < 0.05
    return f"mean0={m0:.4f},meanN={mn:.4f},rows={len(lines)}", "meanN<mean0~1,rows=5000", "strict", ok, 5.0


def a13(ctx):
    pre = preset("illustrative")
    cfg = RecommenderConfig(period=pre.config.period, cycles=pre.config.cycles, master_seed=ctx.seed + 13)
    spec = a8_spec(ctx.seed + 13)
    blobs = {}
    with tempfile.TemporaryDirectory() as tmp:
        for workers in (1, 2, 8):
            run = run_population(pre.params, cfg, pre.population, workers=workers)
            traj = emit_trajectory_csv(run, Path(tmp) / f"traj_{workers}.csv").read_bytes()
            grid = run_sweep(spec, workers=workers)
            parts = [traj]
            for metric in (MICRO, MACRO):
                for norm in (True, False):
                    p = emit_grid_csv(grid, Path(tmp) / f"g_{metric}_{norm}_{workers}.csv", 0.0, metric, norm)
                    parts.append(p.read_bytes())
            blobs[workers] = parts
    same = all(blobs[w] == blobs[1] for w in (2, 8))
    return "identical" if same else "differs", "identical", "byte-exact", same, 60.0


def full_grid_check(ctx):
    spec = SweepSpec.full((0.0, 0.1, 0.2), range(1, 22), cycles=20, population=500, master_seed=ctx.seed)
    grid = run_sweep(spec, workers=4)
    ok = True
    for a in (0.0, 0.1, 0.2):
        for metric in (MICRO, MACRO):
            vals = list(grid.values(a, metric, normalized=True).values())
            ok = ok and min(vals) >= 0.0 and max(vals) == 1.0
    r = _pearson(grid)
    return f"pearson_alpha0={r:.4f}", "normalized in [0,1], max=1", "exact", ok and r < 0, 300.0


CRITERIA: dict[str, Callable] = {
    "A1": a1,
    "A2": a2,
    "A3": a3,
    "A4": a4,
    "A5": a5,
    "A6": a6,
    "A7": a7,
    "A8": a8,
    "A9": a9,
    "A10": a10,
    "A11": a11,
    "A12": a12,
    "A13": a13,
}

FULL_ONLY = {"FULL_GRID": full_grid_check}


def run_criterion(cid: str, ctx: _Context) -> CriterionResult:
    fn = CRITERIA.get(cid) or FULL_ONLY[cid]
    t0 = time.perf_counter()
    out = fn(ctx)
    elapsed = time.perf_counter() - t0
    observed, expected, tol, ok, budget = out[:5]
    detail = out[5] if len(out) > 5 else ""
    in_time = elapsed <= budget
    if not in_time:
        detail = (detail + ";" if detail else "") + "over time budget"
    return CriterionResult(cid, observed, expected, tol, bool(ok and in_time), elapsed, budget, detail)


def run_all(level: str = "fast", seed: int = DEFAULT_SEED, only=None) -> list[CriterionResult]:
    ctx = _Context(seed=seed, level=level)
    ids = list(only) if only else list(CRITERIA)
    if level == "full" and not only:
        ids += list(FULL_ONLY)
    return [run_criterion(cid, ctx) for cid in ids]
