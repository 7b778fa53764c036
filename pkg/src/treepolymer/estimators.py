"""Replica aggregation: fractional-moment estimates, log-log exponent
fits, growth-rate checks, and the exact per-replica perturbation
inequalities.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .cascade import (CHUNK_LEVELS, TreeSpec, _Sweeper, _sweep,
                      enumerate_partition)
from .environment import CriticalPoint, EnvironmentModel


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo mean of (W_n^{sign,delta})^gamma over replicas."""

    n: int
    gamma: float
    delta: float | None
    sign: str
    mean: float
    stderr: float
    replicas: int

    def __post_init__(self):
        if self.mean < 0 or self.stderr < 0:
            raise ValueError("mean and stderr must be nonnegative")
        if self.replicas < 2:
            raise ValueError("replicas must be >= 2")


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    slope_stderr: float
    n_grid: tuple
    target_exponent: float
    verdict: bool


def _replica_chunk(model: EnvironmentModel, cp: CriticalPoint, n: int,
                   delta: float | None, sign: str, master_seed: int,
                   start: int, count: int) -> np.ndarray:
    """Log-domain W values for replicas start..start+count-1, in order.

    Computes only the single requested exponent and reuses one sweep
    buffer across replicas; large replica counts at n = 16 stay inside the
    stated runtime budgets only on this path.
    """
    if sign == "none":
        theta = 1.0
    else:
        eps = float(n) ** (-delta) if n > 0 else 1.0
        theta = 1.0 - eps if sign == "minus" else 1.0 + eps
    thetas = np.array([theta])
    sweeper = _Sweeper(min(max(n, 1), CHUNK_LEVELS))
    out = np.empty(count)
    for i in range(count):
        spec = TreeSpec(model, cp, n, master_seed, start + i)
        out[i] = _sweep(spec, thetas, sweeper=sweeper).log_z[0]
    return out


def replica_log_values(model: EnvironmentModel, cp: CriticalPoint, n: int,
                       delta: float | None, sign: str, replicas: int,
                       master_seed: int, workers: int = 1) -> np.ndarray:
    """log W_n^{sign,delta} for replicas 0..replicas-1.

    The result depends only on (model, cp, n, delta, sign, replicas,
    master_seed): replicas are keyed by index, so the worker count never
    changes the output.
    """
    if sign not in ("plus", "minus", "none"):
        raise ValueError("sign must be 'plus', 'minus' or 'none'")
    if sign != "none" and delta is None:
        raise ValueError("delta required for a perturbed moment")
    if workers <= 1 or replicas < 2 * workers:
        return _replica_chunk(model, cp, n, delta, sign, master_seed,
                              0, replicas)
    bounds = np.linspace(0, replicas, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_replica_chunk,
                         *zip(*[(model, cp, n, delta, sign, master_seed,
                                 int(lo), int(hi - lo))
                                for lo, hi in zip(bounds[:-1], bounds[1:])]))
    return np.concatenate(list(parts))


def fractional_moment(model: EnvironmentModel, cp: CriticalPoint, n: int,
                      gamma: float, delta: float | None, sign: str,
                      replicas: int, master_seed: int,
                      workers: int = 1) -> MomentEstimate:
    """MC estimate of E[(W_n^{sign,delta})^gamma].

    gamma in (0, 1) keeps the heavy-tailed W under control; gamma = 1 is
    allowed so the full-moment closed-form anchor can be checked.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    if replicas < 2:
        raise ValueError("replicas must be >= 2")
    logs = replica_log_values(model, cp, n, delta, sign, replicas,
                              master_seed, workers)
    vals = np.exp(gamma * logs)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(replicas))
    d = None if sign == "none" else delta
    return MomentEstimate(n=n, gamma=gamma, delta=d, sign=sign,
                          mean=mean, stderr=stderr, replicas=replicas)


def fit_exponent(series: list[MomentEstimate],
                 target_exponent: float, tolerance: float) -> ExponentFit:
    """OLS fit of log mean against log n; verdict is pass iff the slope is
    within tolerance of the target."""
    if len(series) < 3:
        raise ValueError("need at least 3 grid points")
    ns = [e.n for e in series]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n grid must be strictly increasing")
    if any(e.mean <= 0 for e in series):
        raise ValueError("all means must be positive")
    x = np.log([float(v) for v in ns])
    y = np.log([e.mean for e in series])
    res = stats.linregress(x, y)
    verdict = abs(res.slope - target_exponent) <= tolerance
    return ExponentFit(slope=float(res.slope), intercept=float(res.intercept),
                       slope_stderr=float(res.stderr), n_grid=tuple(ns),
                       target_exponent=target_exponent, verdict=bool(verdict))


def growth_rate_check(model: EnvironmentModel, cp: CriticalPoint,
                      n_grid: list[int], delta: float, replicas: int,
                      master_seed: int, band: tuple[float, float] = (0.3, 1.3),
                      workers: int = 1) -> dict:
    """Per-replica log W_n^{-,delta} / n^{1-2 delta} against the target
    growth constant sigma_sq / 2.

    Reports the median and interquartile range at each n, plus a verdict:
    the median at the largest n must land inside band * target and the
    median sequence must move toward the target monotonically.
    """
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    target = cp.sigma_sq / 2.0
    rows = []
    for n in n_grid:
        logs = replica_log_values(model, cp, n, delta, "minus", replicas,
                                  master_seed, workers)
        ratios = logs / float(n) ** (1.0 - 2.0 * delta)
        q1, med, q3 = np.percentile(ratios, [25, 50, 75])
        rows.append({"n": n, "median": float(med), "iqr": float(q3 - q1)})
    meds = [r["median"] for r in rows]
    gaps = [abs(m - target) for m in meds]
    monotone = all(b <= a for a, b in zip(gaps, gaps[1:]))
    in_band = band[0] * target <= meds[-1] <= band[1] * target
    return {"target": target, "rows": rows, "band": band,
            "monotone_toward_target": monotone, "in_band": in_band,
            "verdict": monotone and in_band}


def perturbation_inequality_check(model: EnvironmentModel, cp: CriticalPoint,
                                  n: int, delta: float, replicas: int,
                                  master_seed: int, slack: float = 1e-9,
                                  workers: int = 1) -> dict:
    """Exact algebraic bounds relating the perturbed and unperturbed
    partition functions on every single replica:

        log W_n^{-,delta} >= n^{-delta} min_V + log W_n
        log W_n^{+,delta} <= -n^{-delta} min_V + log W_n

    Both follow by factoring e^{-+ eps V(v)} termwise against its extreme
    value, so any violation beyond float roundoff is a numerics bug.
    """
    eps = float(n) ** (-delta)
    violations = 0
    worst = 0.0
    for r in range(replicas):
        spec = TreeSpec(model, cp, n, master_seed, r)
        s = enumerate_partition(spec, delta=delta)
        lo = s.log_wn + eps * s.min_v - s.log_wn_minus_delta
        hi = s.log_wn_plus_delta - (s.log_wn - eps * s.min_v)
        gap = max(lo, hi)
        worst = max(worst, gap)
        if gap > slack:
            violations += 1
    return {"replicas": replicas, "violations": violations,
            "worst_gap": worst, "slack": slack, "verdict": violations == 0}
