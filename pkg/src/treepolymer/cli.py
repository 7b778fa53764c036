"""Experiment runner.

Every subcommand resolves a flat key=value configuration (optionally
seeded from a --config file, with flags overriding), runs the pipeline,
and writes a CSV of per-row results plus a JSON summary that echoes the
resolved configuration.  Identical configurations produce byte-identical
CSVs regardless of worker count: replicas are keyed by index, never by
scheduling order.

Exit codes: 0 success, 2 configuration error (message names the offending
field), 3 budget guard tripped.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import cascade, estimators, rwfunctional, spine
from .environment import EnvironmentModel, solve_beta_c
from .errors import BudgetExceeded, NoFiniteCriticalPoint, QuadratureError

SCHEMA_VERSION = "1.0"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: str, header: list[str], rows: list[list]):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(c) for c in row])


def _write_json(path: str, subcommand: str, config: dict, results: dict):
    doc = {"schema_version": SCHEMA_VERSION, "subcommand": subcommand,
           "config": config, "results": results}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _env_from(cfg: dict) -> EnvironmentModel:
    kind = cfg["env"]
    try:
        if kind == "gaussian":
            return EnvironmentModel.gaussian(cfg["mu"], cfg["sigma"])
        return EnvironmentModel(kind)
    except ValueError as exc:
        raise ConfigError(f"env: {exc}") from exc


def _parse_grid(text: str, field: str) -> list[int]:
    try:
        grid = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"{field}: expected comma-separated integers") from exc
    if len(grid) < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"{field}: must be strictly increasing and nonempty")
    return grid


def _require(cond: bool, field: str, msg: str):
    if not cond:
        raise ConfigError(f"{field}: {msg}")


# --- subcommand pipelines -------------------------------------------------

def _run_critical(cfg: dict) -> tuple[list[str], list[list], dict]:
    model = _env_from(cfg)
    cp = solve_beta_c(model)
    header = ["beta_c", "lambda_c", "lambda_prime_c", "lambda_second_c",
              "sigma_sq"]
    rows = [[cp.beta_c, cp.lambda_c, cp.lambda_prime_c, cp.lambda_second_c,
             cp.sigma_sq]]
    results = {"beta_c": cp.beta_c, "lambda_c": cp.lambda_c,
               "lambda_prime_c": cp.lambda_prime_c,
               "lambda_second_c": cp.lambda_second_c, "sigma_sq": cp.sigma_sq}
    return header, rows, results


def _run_enumerate(cfg: dict) -> tuple[list[str], list[list], dict]:
    _require(cfg["n"] >= 0, "n", "must be nonnegative")
    _require(cfg["delta"] > 0, "delta", "must be positive")
    _require(cfg["replicas"] >= 1, "replicas", "must be >= 1")
    model = _env_from(cfg)
    cp = solve_beta_c(model)
    logs_w = []
    rows = []
    for r in range(cfg["replicas"]):
        spec = cascade.TreeSpec(model, cp, cfg["n"], cfg["seed"], r)
        s = cascade.enumerate_partition(spec, delta=cfg["delta"],
                                        force=cfg["force"])
        rows.append([r, s.n, s.log_wn, s.log_wn_minus_delta,
                     s.log_wn_plus_delta, s.min_v, s.max_v])
        logs_w.append(s.log_wn)
    header = ["replica", "n", "log_Wn", "log_Wn_minus", "log_Wn_plus",
              "min_V", "max_V"]
    w = np.exp(logs_w)
    results = {"mean_Wn": float(w.mean()),
               "stderr_Wn": float(w.std(ddof=1) / math.sqrt(len(w)))
               if len(w) > 1 else 0.0}
    return header, rows, results


def _run_gibbs(cfg: dict) -> tuple[list[str], list[list], dict]:
    _require(cfg["n"] >= 1, "n", "must be >= 1")
    _require(0 < cfg["eps"] < 0.5, "eps", "must lie in (0, 1/2)")
    _require(cfg["eps_prime"] > 0, "eps_prime", "must be positive")
    _require(cfg["replicas"] >= 1, "replicas", "must be >= 1")
    model = _env_from(cfg)
    cp = solve_beta_c(model)
    rows = []
    masses = []
    for r in range(cfg["replicas"]):
        spec = cascade.TreeSpec(model, cp, cfg["n"], cfg["seed"], r)
        mass = cascade.gibbs_window_mass(spec, cfg["eps"], cfg["eps_prime"],
                                         force=cfg["force"])
        rows.append([r, cfg["n"], mass])
        masses.append(mass)
    header = ["replica", "n", "window_mass"]
    results = {"median_window_mass": float(np.median(masses))}
    return header, rows, results


def _run_spine(cfg: dict) -> tuple[list[str], list[list], dict]:
    _require(cfg["n"] >= 0, "n", "must be nonnegative")
    _require(cfg["walks"] >= 1, "walks", "must be >= 1")
    model = _env_from(cfg)
    cp = solve_beta_c(model)
    dist = spine.SpineIncrementDist(model, cp)
    rng = np.random.default_rng(cfg["seed"])
    mat = spine.sample_walk_matrix(dist, cfg["n"], cfg["walks"], rng)
    rows = [[i, cfg["n"], float(mat[i, -1]), float(mat[i].min())]
            for i in range(cfg["walks"])]
    header = ["walk", "n", "S_n", "min_S"]
    finals = mat[:, -1]
    results = {"mean_S_n": float(finals.mean()),
               "var_S_n": float(finals.var(ddof=1)) if cfg["walks"] > 1 else 0.0,
               "target_var": cp.sigma_sq * cfg["n"]}
    return header, rows, results


def _run_rw_functional(cfg: dict) -> tuple[list[str], list[list], dict]:
    _require(cfg["replicas"] >= 1, "replicas", "must be >= 1")
    _require(cfg["tol"] > 0, "tol", "must be positive")
    model = _env_from(cfg)
    cp = solve_beta_c(model)
    try:
        fspec = rwfunctional.FunctionalSpec(cfg["delta"], cfg["sign"],
                                            cfg["star"], cfg["kappa"])
    except ValueError as exc:
        raise ConfigError(f"delta/sign/star/kappa: {exc}") from exc
    dist = spine.SpineIncrementDist(model, cp)
    grid = _parse_grid(cfg["ngrid"], "ngrid")
    rows = []
    summary = []
    rng = np.random.default_rng(cfg["seed"])
    for n in grid:
        est, err = rwfunctional.mc_functional(fspec, dist, n,
                                              cfg["replicas"], rng)
        quad = rwfunctional.bm_functional_quadrature(fspec, cp.sigma_sq, n,
                                                     cfg["tol"])
        rows.append([n, "mc", est, err])
        rows.append([n, "quadrature", quad, cfg["tol"]])
        rel = abs(est - quad) / quad if quad > 0 else math.inf
        summary.append({"n": n, "mc": est, "mc_stderr": err,
                        "quadrature": quad, "rel_gap": rel})
    header = ["n", "method", "estimate", "stderr_or_tol"]
    results = {"alpha": fspec.alpha, "g_exponent": fspec.g_exponent,
               "grid": summary}
    return header, rows, results


def _run_moments(cfg: dict) -> tuple[list[str], list[list], dict]:
    _require(0 < cfg["gamma"] <= 1, "gamma", "must lie in (0, 1]")
    _require(cfg["replicas"] >= 2, "replicas", "must be >= 2")
    _require(cfg["sign"] in ("plus", "minus", "none"), "sign",
             "must be plus, minus or none")
    if cfg["sign"] != "none":
        _require(cfg["delta"] is not None and cfg["delta"] > 0, "delta",
                 "must be positive when sign is plus or minus")
    model = _env_from(cfg)
    cp = solve_beta_c(model)
    grid = _parse_grid(cfg["ngrid"], "ngrid")
    series = []
    rows = []
    for n in grid:
        est = estimators.fractional_moment(model, cp, n, cfg["gamma"],
                                           cfg["delta"], cfg["sign"],
                                           cfg["replicas"], cfg["seed"],
                                           cfg["workers"])
        series.append(est)
        rows.append([n, est.gamma, est.delta if est.delta is not None else "",
                     est.sign, est.mean, est.stderr, est.replicas])
    header = ["n", "gamma", "delta", "sign", "mean", "stderr", "replicas"]
    if cfg["target"] is not None:
        target = cfg["target"]
    elif cfg["sign"] == "plus" and cfg["delta"] < 0.5:
        target = cfg["gamma"] * (2.0 * cfg["delta"] - 1.5)
    else:
        target = -cfg["gamma"] / 2.0
    results: dict = {"target_slope": target}
    if len(grid) >= 3:
        fit = estimators.fit_exponent(series, target, cfg["tolerance"])
        results.update({"slope": fit.slope, "intercept": fit.intercept,
                        "slope_stderr": fit.slope_stderr,
                        "tolerance": cfg["tolerance"],
                        "verdict": fit.verdict})
    return header, rows, results


def _run_fit_report(cfg: dict) -> tuple[list[str], list[list], dict]:
    _require(0 < cfg["delta"] < 0.5, "delta", "must lie in (0, 1/2)")
    _require(cfg["replicas"] >= 2, "replicas", "must be >= 2")
    model = _env_from(cfg)
    cp = solve_beta_c(model)
    grid = _parse_grid(cfg["ngrid"], "ngrid")
    report = estimators.growth_rate_check(model, cp, grid, cfg["delta"],
                                          cfg["replicas"], cfg["seed"],
                                          workers=cfg["workers"])
    rows = [[r["n"], r["median"], r["iqr"], report["target"]]
            for r in report["rows"]]
    header = ["n", "median_ratio", "iqr", "target"]
    results = {"target": report["target"],
               "monotone_toward_target": report["monotone_toward_target"],
               "in_band": report["in_band"], "band": list(report["band"]),
               "verdict": report["verdict"]}
    return header, rows, results


_PIPELINES = {"critical": _run_critical, "enumerate": _run_enumerate,
              "gibbs": _run_gibbs, "spine": _run_spine,
              "rw-functional": _run_rw_functional, "moments": _run_moments,
              "fit-report": _run_fit_report}


# --- configuration plumbing ----------------------------------------------

_COMMON = {"env": "gaussian", "mu": 0.0, "sigma": 1.0, "seed": 0,
           "workers": 1, "force": False, "out": "", "summary": ""}

_DEFAULTS = {
    "critical": {},
    "enumerate": {"n": 10, "delta": 0.25, "replicas": 100},
    "gibbs": {"n": 10, "eps": 0.45, "eps_prime": 0.45, "replicas": 100},
    "spine": {"n": 16, "walks": 1000},
    "rw-functional": {"delta": 0.6, "sign": "plus", "star": "max",
                      "kappa": 10.0, "ngrid": "64,256", "replicas": 20000,
                      "tol": 1e-8},
    "moments": {"gamma": 0.5, "delta": None, "sign": "none",
                "ngrid": "8,12,16,20,24", "replicas": 200,
                "target": None, "tolerance": 0.25},
    "fit-report": {"delta": 0.2, "ngrid": "8,16,24", "replicas": 100},
}

_TYPES = {"env": str, "mu": float, "sigma": float, "seed": int,
          "workers": int, "force": bool, "out": str, "summary": str,
          "n": int, "delta": float, "replicas": int, "eps": float,
          "eps_prime": float, "walks": int, "sign": str, "star": str,
          "kappa": float, "ngrid": str, "tol": float, "gamma": float,
          "target": float, "tolerance": float}


def _coerce(field: str, raw: str):
    typ = _TYPES.get(field)
    if typ is None:
        raise ConfigError(f"{field}: unknown configuration key")
    try:
        if typ is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError("expected a boolean")
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"{field}: {exc}") from exc


def load_config_file(path: str) -> dict:
    """Parse a plain-text `key = value` configuration file."""
    cfg = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(
                        f"config: line {lineno} is not `key = value`")
                key, _, val = line.partition("=")
                cfg[key.strip()] = _coerce(key.strip(), val.strip())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    return cfg


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="treepolymer",
        description="Simulation lab for directed polymers on binary trees.")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name, extra in _DEFAULTS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None,
                        help="key = value file; flags override entries")
        for field in {**_COMMON, **extra}:
            flag = "--" + field.replace("_", "-")
            if _TYPES[field] is bool:
                sp.add_argument(flag, dest=field, action="store_const",
                                const=True, default=None)
            else:
                sp.add_argument(flag, dest=field, type=_TYPES[field],
                                default=None)
    return ap


def resolve_config(subcommand: str, args: argparse.Namespace) -> dict:
    """Defaults < config file < explicit flags; returns the full run config."""
    cfg = {**_COMMON, **_DEFAULTS[subcommand]}
    if getattr(args, "config", None):
        file_cfg = load_config_file(args.config)
        for key, val in file_cfg.items():
            if key not in cfg:
                raise ConfigError(
                    f"{key}: not a valid key for subcommand {subcommand}")
            cfg[key] = val
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def run_config(subcommand: str, cfg: dict) -> dict:
    """Execute one resolved configuration; writes artifacts, returns results."""
    header, rows, results = _PIPELINES[subcommand](cfg)
    if cfg["out"]:
        _write_csv(cfg["out"], header, rows)
    if cfg["summary"]:
        echo = {k: v for k, v in cfg.items()}
        _write_json(cfg["summary"], subcommand, echo, results)
    return results


def run(argv) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = resolve_config(args.subcommand, args)
        results = run_config(args.subcommand, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except NoFiniteCriticalPoint as exc:
        print(f"config error: env: {exc}", file=sys.stderr)
        return 2
    except QuadratureError as exc:
        print(f"quadrature failure: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(results, sort_keys=True))
    return 0


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
