"""The random-walk functional of the near-critical analysis and its
Brownian surrogate.

The walk side is the Monte Carlo average, over tilted spine walks, of

    (g(n) * (S_n^+)^alpha) e^{-gamma_n S_n} 1{min_j S_j >= -kappa log n, S_n >= 0}

with * either min or max.  The Brownian side evaluates the same object for
a Brownian endpoint/running-minimum pair by deterministic 2-D quadrature
of the reflected joint density

    f(x, m) = 2 (2m - x) / (t sqrt(2 pi t)) exp(-(2m - x)^2 / (2t)),

integrated over m in (0, kappa log t], x <= 0, with the walk's increment
scale sigma entering through the e^{gamma_t sigma x} factor.  Agreement of
the two routes is approximate (strong-approximation coupling error is
logarithmic in n), which fixes the cross-check tolerance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import QuadratureError
from .spine import SpineIncrementDist, sample_spine_increments


def scaling_params(delta: float, sign: str) -> tuple[float, float]:
    """(alpha, g_exponent) for a perturbation of strength n^-delta.

    delta >= 1/2 (either sign): alpha = 1, g(n) = n^(1/2).
    delta in (0, 1/2), positive: alpha = 3/(2 delta) - 2, g(n) = n^(3/2 - 2 delta).
    Negative perturbations require delta >= 1/2.
    """
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if delta >= 0.5:
        return 1.0, 0.5
    if sign == "minus":
        raise ValueError("negative perturbation needs delta >= 1/2")
    return 1.5 / delta - 2.0, 1.5 - 2.0 * delta


@dataclass(frozen=True)
class FunctionalSpec:
    """Parameters (delta, sign, star, kappa) of the walk functional."""

    delta: float
    sign: str
    star: str
    kappa: float

    def __post_init__(self):
        scaling_params(self.delta, self.sign)  # validates delta/sign
        if self.star not in ("min", "max"):
            raise ValueError("star must be 'min' or 'max'")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")

    @property
    def alpha(self) -> float:
        return scaling_params(self.delta, self.sign)[0]

    @property
    def g_exponent(self) -> float:
        return scaling_params(self.delta, self.sign)[1]

    def g(self, n: float) -> float:
        return float(n) ** self.g_exponent

    def gamma(self, n: float) -> float:
        s = 1.0 if self.sign == "plus" else -1.0
        return s * float(n) ** (-self.delta)

    def combine(self, gn, power_term):
        if self.star == "max":
            return np.maximum(gn, power_term)
        return np.minimum(gn, power_term)


def mc_functional(fspec: FunctionalSpec, dist: SpineIncrementDist, n: int,
                  replicas: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo value of the walk functional over tilted spine walks."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    gn = fspec.g(n)
    gam = fspec.gamma(n)
    barrier = -fspec.kappa * math.log(n)
    alpha = fspec.alpha
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk = max(1, (1 << 23) // n)
    while done < replicas:
        c = min(chunk, replicas - done)
        incs = sample_spine_increments(dist, c * n, rng).reshape(c, n)
        s = np.cumsum(incs, axis=1)
        send = s[:, -1]
        smin = np.minimum(s.min(axis=1), 0.0)
        ok = (smin >= barrier) & (send >= 0.0)
        vals = np.zeros(c)
        if ok.any():
            se = send[ok]
            vals[ok] = fspec.combine(gn, np.maximum(se, 0.0) ** alpha) * np.exp(-gam * se)
        total += vals.sum()
        total_sq += (vals * vals).sum()
        done += c
    mean = total / replicas
    if replicas > 1:
        var = max(total_sq / replicas - mean * mean, 0.0) * replicas / (replicas - 1)
        stderr = math.sqrt(var / replicas)
    else:
        stderr = 0.0
    return float(mean), float(stderr)


def mc_functional_exhaustive(fspec: FunctionalSpec, support: dict[float, float],
                             n: int) -> float:
    """Exact value of the walk functional for a finitely supported
    increment law (oracle for small n).

    ``support`` maps increment values to probabilities.
    """
    gn = fspec.g(n)
    gam = fspec.gamma(n)
    barrier = -fspec.kappa * math.log(n)
    alpha = fspec.alpha
    vals = list(support.items())
    total = 0.0

    def rec(step, s, mn, prob):
        nonlocal total
        if step == n:
            if mn >= barrier and s >= 0.0:
                term = max(gn, max(s, 0.0) ** alpha) if fspec.star == "max" \
                    else min(gn, max(s, 0.0) ** alpha)
                total += prob * term * math.exp(-gam * s)
            return
        for x, p in vals:
            rec(step + 1, s + x, min(mn, s + x), prob * p)

    rec(0, 0.0, 0.0, 1.0)
    return total


def bm_joint_density(x: float, m: float, t: float) -> float:
    """Joint density of (endpoint, running maximum) of standard Brownian
    motion at time t; zero outside {x <= m, m > 0}."""
    if t <= 0:
        raise ValueError("t must be positive")
    if m <= 0 or x > m:
        return 0.0
    z = 2.0 * m - x
    return 2.0 * z / (t * math.sqrt(2.0 * math.pi * t)) * math.exp(-z * z / (2.0 * t))


def bm_functional_quadrature(fspec: FunctionalSpec, sigma_sq: float, n: int,
                             tol: float = 1e-8) -> float:
    """Deterministic value of the Brownian surrogate functional.

    The surrogate replaces the walk by Brownian motion with the walk's
    per-step variance sigma_sq.  In standard-BM coordinates (x = endpoint,
    m = running maximum of the reflected path) that is

        (2/sqrt(2 pi)) t^(-3/2) *
        int_0^{kappa log t / sigma} int_{-inf}^0
            (g(t) * (-sigma x)^alpha) e^{gamma_t sigma x}
            (2m - x) exp(-(2m - x)^2 / (2t)) dx dm,

    which reduces to the sigma = 1 form when sigma_sq = 1.  Matching the
    walk's scale inside the power term matters: for alpha > 1 the sigma^alpha
    factor is far larger than the cross-check tolerance.  The inner integral
    is truncated at x = -30 sqrt(t), where the Gaussian factor is below
    e^-450, far under any requested tolerance.  Raises QuadratureError
    rather than returning a value the integrator could not certify.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if sigma_sq <= 0:
        raise ValueError("sigma_sq must be positive")
    t = float(n)
    sigma = math.sqrt(sigma_sq)
    m_hi = fspec.kappa * math.log(t) / sigma
    if m_hi <= 0.0:
        return 0.0
    gn = fspec.g(t)
    gam_sig = fspec.gamma(t) * sigma
    alpha = fspec.alpha
    pref = 2.0 / math.sqrt(2.0 * math.pi) * t ** (-1.5)
    x_lo = -30.0 * math.sqrt(t)
    use_max = fspec.star == "max"

    def integrand(x, m):
        p = (-sigma * x) ** alpha
        star = max(gn, p) if use_max else min(gn, p)
        z = 2.0 * m - x
        return star * math.exp(gam_sig * x - z * z / (2.0 * t)) * z

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, abserr = integrate.dblquad(integrand, 0.0, m_hi,
                                            lambda m: x_lo, lambda m: 0.0,
                                            epsabs=tol / (2.0 * pref),
                                            epsrel=1e-10)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature did not converge: {exc}") from exc
    if pref * abserr > tol:
        raise QuadratureError(
            f"quadrature error estimate {pref * abserr:g} exceeds tol {tol:g}")
    return pref * val
