"""Noise distributions, their cumulant generating functions, and the
critical inverse temperature of the binary-tree polymer.

The menu is fixed to three families with closed-form CGFs (Gaussian,
Rademacher, Uniform(0,1)): exact lambda, lambda', lambda'' are needed for
the closed-form moment anchors, so empirical moment estimation is out of
scope by design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NoFiniteCriticalPoint

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class EnvironmentModel:
    """One i.i.d. vertex-noise law with an everywhere-finite CGF."""

    kind: str
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "rademacher", "uniform01"):
            raise ValueError(f"unknown environment kind {self.kind!r}")
        if self.kind == "gaussian" and self.sigma <= 0:
            raise ValueError("gaussian sigma must be positive")

    @classmethod
    def gaussian(cls, mu: float = 0.0, sigma: float = 1.0) -> "EnvironmentModel":
        return cls("gaussian", mu, sigma)

    @classmethod
    def rademacher(cls) -> "EnvironmentModel":
        return cls("rademacher")

    @classmethod
    def uniform01(cls) -> "EnvironmentModel":
        return cls("uniform01")


@dataclass(frozen=True)
class CriticalPoint:
    """The critical inverse temperature and the CGF data evaluated there.

    ``sigma_sq = beta_c**2 * lambda_second_c`` is the variance of one
    increment of the tilted spine walk.
    """

    beta_c: float
    lambda_c: float
    lambda_prime_c: float
    lambda_second_c: float
    sigma_sq: float

    @property
    def energy_shift(self) -> float:
        """Per-generation centering lambda(beta_c) + log 2 of the energies."""
        return self.lambda_c + LOG2


# Below |beta| < _SMALL the Uniform(0,1) formulas hit removable
# singularities; Taylor series keep full double precision there.
_SMALL = 1e-4


def cgf(model: EnvironmentModel, beta: float) -> float:
    """lambda(beta) = log E[exp(beta * omega)]."""
    if model.kind == "gaussian":
        return model.mu * beta + 0.5 * model.sigma ** 2 * beta * beta
    if model.kind == "rademacher":
        # log cosh, overflow-safe
        ab = abs(beta)
        return ab + math.log1p(math.exp(-2.0 * ab)) - LOG2
    # uniform01: log((e^b - 1)/b)
    if abs(beta) < _SMALL:
        return beta / 2.0 + beta * beta / 24.0 - beta ** 4 / 2880.0
    if beta > 0:
        return beta + math.log1p(-math.exp(-beta)) - math.log(beta)
    return math.log1p(-math.exp(beta)) - math.log(-beta)


def cgf_d1(model: EnvironmentModel, beta: float) -> float:
    """lambda'(beta)."""
    if model.kind == "gaussian":
        return model.mu + model.sigma ** 2 * beta
    if model.kind == "rademacher":
        return math.tanh(beta)
    if abs(beta) < _SMALL:
        return 0.5 + beta / 12.0 - beta ** 3 / 720.0
    # e^b/(e^b - 1) - 1/b, written with expm1 for small-beta stability
    return 1.0 / (-math.expm1(-beta)) - 1.0 / beta


def cgf_d2(model: EnvironmentModel, beta: float) -> float:
    """lambda''(beta)."""
    if model.kind == "gaussian":
        return model.sigma ** 2
    if model.kind == "rademacher":
        # sech^2, overflow-safe
        e = math.exp(-2.0 * abs(beta))
        return 4.0 * e / (1.0 + e) ** 2
    if abs(beta) < _SMALL:
        return 1.0 / 12.0 - beta * beta / 240.0 + beta ** 4 / 6048.0
    # 1/b^2 - e^b/(e^b - 1)^2
    b = beta
    eb = math.expm1(b)
    return 1.0 / (b * b) - (eb + 1.0) / (eb * eb)


def _crit_residual(model: EnvironmentModel, beta: float) -> float:
    """h(beta) = beta lambda'(beta) - lambda(beta) - log 2; nondecreasing."""
    return beta * cgf_d1(model, beta) - cgf(model, beta) - LOG2


def solve_beta_c(model: EnvironmentModel) -> CriticalPoint:
    """Unique positive root of lambda(b) + log 2 = b lambda'(b).

    h(b) = b lambda'(b) - lambda(b) - log 2 has h'(b) = b lambda''(b) >= 0,
    so bracketing plus bisection is unconditionally safe.  Raises
    NoFiniteCriticalPoint if h stays negative up to the search bound
    (beta_c = infinity, e.g. a nearly deterministic noise).
    """
    lo = 1e-6
    hi = 1.0
    bound = 1e9
    # A genuine bracket must clear a margin above float roundoff: h is
    # computed from terms of size ~beta, so near-zero values at large beta
    # (e.g. symmetric two-point noise, where h -> 0 from below) are pure
    # cancellation noise, not roots.
    while _crit_residual(model, hi) <= 1e-9 + 1e-12 * hi:
        hi *= 2.0
        if hi > bound:
            raise NoFiniteCriticalPoint(
                f"h(beta) < 0 for all beta <= {bound:g}; beta_c = infinity")
    if _crit_residual(model, lo) > 0.0:
        lo = 1e-12
    # bisect to a ~1e-13 interval, then one Newton polish
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < 1e-13:
            break
        if _crit_residual(model, mid) > 0.0:
            hi = mid
        else:
            lo = mid
    beta = 0.5 * (lo + hi)
    hprime = beta * cgf_d2(model, beta)
    if hprime > 0.0:
        beta -= _crit_residual(model, beta) / hprime
    lam = cgf(model, beta)
    lam1 = cgf_d1(model, beta)
    lam2 = cgf_d2(model, beta)
    return CriticalPoint(beta_c=beta, lambda_c=lam, lambda_prime_c=lam1,
                         lambda_second_c=lam2, sigma_sq=beta * beta * lam2)


def free_energy(model: EnvironmentModel, cp: CriticalPoint, beta: float) -> float:
    """Limiting n^-1 log Z_n(beta): lambda(beta)+log 2 up to beta_c, then linear."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if beta <= cp.beta_c:
        return cgf(model, beta) + LOG2
    return (beta / cp.beta_c) * (cp.lambda_c + LOG2)


def annealed_perturbed_moment(model: EnvironmentModel, cp: CriticalPoint,
                              k: int, n: int, delta: float) -> float:
    """log E[sum over generation-k vertices of exp(-(1 - n^-delta) V(v))].

    Exactly k * (lambda((1-eps) beta_c) - lambda(beta_c) + eps beta_c
    lambda'(beta_c)) with eps = n^-delta; no Taylor truncation.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    eps = float(n) ** (-delta)
    return k * (cgf(model, (1.0 - eps) * cp.beta_c) - cp.lambda_c
                + eps * cp.beta_c * cp.lambda_prime_c)
