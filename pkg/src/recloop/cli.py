"""Command-line interface: ``recloop {simulate,sweep,limits,verify}``.

Settings are resolved as flags > config file > preset defaults. Exit codes:
0 ok, 1 invalid configuration, 2 runtime failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from pathlib import Path

import jsonschema

from . import kernels, limits, rng as rngmod, transport
from .distributions import Gaussian, from_dict, to_dict
from .dynamics import INITIAL_ONLY, ModelParams, RecommenderConfig, SuccessRule, run_population
from .experiments import (
    MACRO,
    MICRO,
    PolarizationSpec,
    RunPreset,
    SweepSpec,
    beta_grid,
    emit_grid_csv,
    emit_trajectory_csv,
    grid_csv_name,
    macro_shift,
    micro_shift,
    preset,
    run_polarization,
    run_sweep,
)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3
OUTPUT_ENV = "RECLOOP_OUTPUT_DIR"

_DIST = {
    "type": "object",
    "required": ["kind"],
    "properties": {"kind": {"enum": ["gaussian", "uniform", "mixture", "dirac", "empirical"]}},
    "allOf": [
        {
            "if": {"properties": {"kind": {"const": "gaussian"}}},
            "then": {
                "required": ["mean", "std"],
                "properties": {"mean": {"type": "number"}, "std": {"type": "number", "exclusiveMinimum": 0}},
            },
        },
        {
            "if": {"properties": {"kind": {"const": "uniform"}}},
            "then": {"required": ["lo", "hi"], "properties": {"lo": {"type": "number"}, "hi": {"type": "number"}}},
        },
        {
            "if": {"properties": {"kind": {"const": "dirac"}}},
            "then": {"required": ["point"], "properties": {"point": {"type": "number"}}},
        },
        {
            "if": {"properties": {"kind": {"const": "mixture"}}},
            "then": {
                "required": ["components"],
                "properties": {
                    "components": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["weight", "mean", "std"],
                            "properties": {
                                "weight": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                                "mean": {"type": "number"},
                                "std": {"type": "number", "exclusiveMinimum": 0},
                            },
                        },
                    }
                },
            },
        },
        {
            "if": {"properties": {"kind": {"const": "empirical"}}},
            "then": {
                "required": ["samples"],
                "properties": {"samples": {"type": "array", "minItems": 1, "items": {"type": "number"}}},
            },
        },
    ],
}

RUN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alpha": {"type": "number", "minimum": 0, "maximum": 1},
                "beta": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "mu0": _DIST,
                "rho": _DIST,
            },
        },
        "recommender": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "period": {"oneOf": [{"type": "integer", "minimum": 1}, {"const": "initial_only"}]},
                "cycles": {"type": "integer", "minimum": 1},
                "horizon": {"type": "integer", "minimum": 1},
                "success_rule": {"enum": ["lemma", "history"]},
            },
        },
        "population": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"M": {"type": "integer", "minimum": 1}, "seed": {"type": "integer"}},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}, "record_paths": {"type": "boolean"}},
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alpha_values": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
                "beta_values": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
                "T_values": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
            },
        },
    },
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors, not runtime failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def validate(doc: dict) -> dict:
    """Schema-check ``doc`` and enforce the cross-field model constraints."""
    errors = sorted(jsonschema.Draft202012Validator(RUN_SCHEMA).iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        msgs = []
        for e in errors:
            where = ".".join(str(p) for p in e.absolute_path) or "<root>"
            msgs.append(f"{where}: {e.message}")
        raise ConfigError("; ".join(msgs))
    model = doc.get("model", {})
    a, b = model.get("alpha"), model.get("beta")
    if a is not None and b is not None and a + b > 1.0 + 1e-12:
        raise ConfigError(f"model.alpha + model.beta must be <= 1 (alpha={a}, beta={b})")
    rec = doc.get("recommender", {})
    if rec.get("period") == "initial_only" and "horizon" not in rec:
        raise ConfigError("recommender.horizon is required when recommender.period is 'initial_only'")
    for key in ("mu0", "rho"):
        if key in model:
            try:
                from_dict(model[key])
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"model.{key}: {exc}") from None
    return doc


def preset_document(name: str) -> dict:
    """The JSON run configuration a named preset corresponds to."""
    p = preset(name)
    if isinstance(p, RunPreset):
        cfg = p.config
        rec = {"success_rule": cfg.success_rule.value}
        if cfg.period is INITIAL_ONLY:
            rec.update(period="initial_only", horizon=cfg.horizon)
        else:
            rec.update(period=cfg.period, cycles=cfg.cycles)
            if cfg.horizon_override is not None:
                rec["horizon"] = cfg.horizon_override
        return {
            "model": {"alpha": p.params.alpha, "beta": p.params.beta, "mu0": to_dict(p.params.mu0), "rho": to_dict(p.params.rho)},
            "recommender": rec,
            "population": {"M": p.population, "seed": cfg.master_seed},
        }
    if isinstance(p, SweepSpec):
        return {
            "model": {"mu0": to_dict(p.mu0), "rho": to_dict(p.rho)},
            "recommender": {"cycles": p.cycles, "success_rule": p.success_rule.value}
            | ({"horizon": p.horizon} if p.horizon is not None else {}),
            "population": {"M": p.population, "seed": p.master_seed},
            "sweep": {"alpha_values": list(p.alpha_values), "T_values": list(p.T_values)},
        }
    raise ConfigError(f"preset {name!r} has no run configuration")


def _resolve(args, defaults: dict | None = None) -> dict:
    doc = defaults or {}
    if getattr(args, "preset", None):
        doc = _merge(doc, preset_document(args.preset))
    if args.config:
        doc = _merge(doc, load_config(args.config))
    flags = {}
    if args.seed is not None:
        flags.setdefault("population", {})["seed"] = args.seed
    if getattr(args, "population", None) is not None:
        flags.setdefault("population", {})["M"] = args.population
    if args.out is not None:
        flags.setdefault("output", {})["dir"] = args.out
    if getattr(args, "record_paths", False):
        flags.setdefault("output", {})["record_paths"] = True
    return validate(_merge(doc, flags))


def _require(doc, *path):
    node = doc
    for key in path:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"{'.'.join(path)}: required")
        node = node[key]
    return node


def build_run(doc: dict) -> tuple[ModelParams, RecommenderConfig, int]:
    params = ModelParams(
        float(_require(doc, "model", "alpha")),
        float(_require(doc, "model", "beta")),
        from_dict(_require(doc, "model", "mu0")),
        from_dict(_require(doc, "model", "rho")),
    )
    rec = doc.get("recommender", {})
    period = _require(doc, "recommender", "period")
    rule = SuccessRule(rec.get("success_rule", "lemma"))
    seed = int(doc.get("population", {}).get("seed", 0))
    if period == "initial_only":
        cfg = RecommenderConfig(INITIAL_ONLY, horizon_override=int(rec["horizon"]), success_rule=rule, master_seed=seed)
    else:
        if "cycles" not in rec and "horizon" not in rec:
            raise ConfigError("recommender.cycles or recommender.horizon is required")
        cycles = int(rec.get("cycles", -(-int(rec.get("horizon", 1)) // int(period))))
        cfg = RecommenderConfig(int(period), cycles, rec.get("horizon"), rule, seed)
    return params, cfg, int(doc.get("population", {}).get("M", 1000))


def _output_dir(doc) -> Path:
    out = doc.get("output", {}).get("dir") or os.environ.get(OUTPUT_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _kv(key, value):
    if isinstance(value, float):
        value = f"{value:.6f}"
    print(f"{key}={value}")


def cmd_simulate(args) -> int:
    doc = _resolve(args)
    params, cfg, m = build_run(doc)
    record = bool(doc.get("output", {}).get("record_paths", False))
    run = run_population(params, cfg, m, workers=args.workers, record=record)
    out = _output_dir(doc)
    traj = emit_trajectory_csv(run, out / "trajectories.csv")
    if record:
        with open(out / "paths.csv", "w", encoding="utf-8", newline="\n") as fh:
            for row in run.paths:
                fh.write(",".join(f"{v:.6f}" for v in row) + "\n")
    _kv("backend", kernels.BACKEND)
    _kv("users", m)
    _kv("horizon", cfg.horizon)
    _kv("trajectories", traj)
    _kv("mean_initial", float(run.x0.mean()))
    _kv("mean_final", float(run.x_final.mean()))
    _kv("micro", micro_shift(run))
    if m >= 2:
        _kv("macro", macro_shift(run))
    oracle = rngmod.substream(cfg.master_seed, rngmod.ORACLE, 0)
    if cfg.period is INITIAL_ONLY:
        limit = limits.no_exploration_limit(params, rngmod.substream(cfg.master_seed, rngmod.ORACLE, 1))
        _kv("w1_to_no_exploration_limit", transport.w_sampled(run.x_final, limit, oracle, 1).distance)
    elif cfg.period == 1:
        lm, lv = limits.continuous_exploration_moments(params)
        _kv("limit_mean", lm)
        _kv("limit_variance", lv)
        _kv("final_variance", float(run.x_final.var()))
        if isinstance(params.mu0, Gaussian) and isinstance(params.rho, Gaussian):
            law = limits.continuous_exploration_gaussian_limit(params)
            _kv("w1_to_gaussian_limit", transport.w_sampled(run.x_final, law, oracle, 1).distance)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.preset == "polarization":
        spec = PolarizationSpec(master_seed=args.seed or 0, population=args.population or 500)
        grid = run_polarization(spec)
        out = _output_dir({"output": {"dir": args.out}} if args.out else {})
        for metric in ("w1_to_rho", "bimodality"):
            rows = sorted(grid.items(), key=lambda kv: (kv[0][1], kv[0][0]))
            with open(out / f"polarization_{metric}.csv", "w", encoding="utf-8", newline="\n") as fh:
                for (sep, T), vals in rows:
                    fh.write(f"{vals['beta_pow']:.6f},{sep:.6f},{vals[metric]:.6f}\n")
        _kv("cells", len(grid))
        _kv("output", out)
        return EXIT_OK
    doc = _resolve(args, preset_document("micro_macro_sweep") if not args.preset and not args.config else None)
    model, rec, pop = doc.get("model", {}), doc.get("recommender", {}), doc.get("population", {})
    sw = doc.get("sweep", {})
    alphas = sw.get("alpha_values") or ([model["alpha"]] if "alpha" in model else [0.0])
    betas = sw.get("beta_values")
    kind = "no_exploration" if args.preset == "no_exploration_convergence" else "micro_macro"
    grid_betas = []
    for a in alphas:
        row = beta_grid(a) if betas is None else list(betas)
        for b in row:
            if a + b > 1.0 + 1e-12:
                raise ConfigError(f"sweep.alpha_values/sweep.beta_values: infeasible cell alpha={a}, beta={b}")
        grid_betas.append(row)
    spec = SweepSpec(
        tuple(alphas),
        tuple(tuple(r) for r in grid_betas),
        tuple(sw.get("T_values", range(1, 22))),
        cycles=int(rec.get("cycles", 20)),
        population=int(pop.get("M", 500)),
        mu0=from_dict(_require(doc, "model", "mu0")),
        rho=from_dict(_require(doc, "model", "rho")),
        master_seed=int(pop.get("seed", 0)),
        success_rule=SuccessRule(rec.get("success_rule", "lemma")),
        kind=kind,
        horizon=rec.get("horizon"),
    )
    grid = run_sweep(spec, workers=args.workers)
    out = _output_dir(doc)
    written = 0
    for a in spec.alpha_values:
        for metric in grid.metrics:
            for norm in (True, False):
                emit_grid_csv(grid, out / grid_csv_name(metric, a, norm), a, metric, norm)
                written += 1
    _kv("cells", len(grid.cells))
    _kv("files", written)
    _kv("output", out)
    if spec.kind == "micro_macro":
        for a in spec.alpha_values:
            _kv(f"max_micro@alpha={a:g}", grid.normalization[(a, MICRO)])
            _kv(f"max_macro@alpha={a:g}", grid.normalization[(a, MACRO)])
    return EXIT_OK


def cmd_limits(args) -> int:
    doc = _resolve(args)
    params, cfg, _ = build_run(doc)
    regimes = []
    if cfg.period is INITIAL_ONLY:
        regimes = [limits.NO_EXPLORATION]
    elif cfg.period == 1:
        regimes = [limits.CONTINUOUS]
    else:
        regimes = [limits.NO_EXPLORATION, limits.CONTINUOUS]
    rng = rngmod.substream(cfg.master_seed, rngmod.ORACLE, 1)
    _kv("eta", params.eta)
    for regime in regimes:
        rep = limits.limit_report(params, regime, rng)
        _kv(f"{regime}.mean", rep.mean)
        _kv(f"{regime}.variance", rep.variance)
        _kv(f"{regime}.limit_law", repr(rep.limit_law) if rep.limit_law is not None else "moments-only")
        if rep.gaussian_bound is not None:
            _kv(f"{regime}.gaussian_bound", rep.gaussian_bound)
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify

    only = args.only.split(",") if args.only else None
    results = verify.run_all(args.level, args.seed if args.seed is not None else verify.DEFAULT_SEED, only)
    for r in results:
        print(r.line())
    failed = [r.id for r in results if not r.passed]
    print(f"summary passed={len(results) - len(failed)} failed={len(failed)}" + (f" ids={','.join(failed)}" if failed else ""))
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="recloop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, presets):
        p.add_argument("config", nargs="?", help="JSON run configuration")
        p.add_argument("--preset", choices=presets, help="start from a named preset")
        p.add_argument("--seed", type=int, help="master seed (overrides population.seed)")
        p.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV} or .)")

    p = sub.add_parser("simulate", help="simulate one population and write x0,xN rows")
    common(p, ["illustrative", "bimodal_gaussian"])
    p.add_argument("--population", type=int, help="number of users M")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--record-paths", action="store_true", help="also write full opinion paths")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter sweep and write grid CSVs")
    common(p, ["micro_macro_sweep", "no_exploration_convergence", "polarization"])
    p.add_argument("--population", type=int, help="users per cell")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("limits", help="print the analytic limit report of a configuration")
    common(p, ["illustrative", "bimodal_gaussian"])
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--level", choices=["fast", "full"], default="fast")
    p.add_argument("--seed", type=int, help="seed for all criteria")
    p.add_argument("--only", help="comma-separated criterion ids, e.g. A1,A3")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
