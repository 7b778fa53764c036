"""The size-biased (spinal) measure: tilted increments, spine walks, and
the many-to-one estimator.

Under the tilted measure the energies along the marked ray form a mean
zero random walk S whose one-step law is that of V_0 = -beta_c omega +
lambda(beta_c) + log 2 reweighted by 2 e^{-V_0}; equivalently omega is
exponentially tilted by e^{beta_c omega}.  Sampling is exact per
environment kind: a closed-form Gaussian shift, the two-point tilt for
Rademacher, and inverse-CDF for Uniform(0,1) -- no MCMC anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environment import CriticalPoint, EnvironmentModel


@dataclass(frozen=True)
class SpineIncrementDist:
    """Law of one spine-walk increment S_1 for a given environment."""

    model: EnvironmentModel
    cp: CriticalPoint

    @property
    def mean(self) -> float:
        return 0.0

    @property
    def variance(self) -> float:
        return self.cp.sigma_sq

    def tilted_omega_pdf(self, w):
        """Density of the tilted noise (continuous kinds only)."""
        b = self.cp.beta_c
        lam = self.cp.lambda_c
        w = np.asarray(w, dtype=float)
        if self.model.kind == "gaussian":
            mu, s = self.model.mu, self.model.sigma
            base = np.exp(-0.5 * ((w - mu) / s) ** 2) / (s * math.sqrt(2 * math.pi))
        elif self.model.kind == "uniform01":
            base = ((w >= 0.0) & (w <= 1.0)).astype(float)
        else:
            raise ValueError("rademacher noise has no density; use tilted_omega_pmf")
        return np.exp(b * w - lam) * base

    def tilted_omega_pmf(self) -> dict[float, float]:
        """Tilted two-point law for the Rademacher environment."""
        if self.model.kind != "rademacher":
            raise ValueError("pmf defined for the rademacher kind only")
        b = self.cp.beta_c
        p = math.exp(b) / (2.0 * math.cosh(b))
        return {1.0: p, -1.0: 1.0 - p}

    def increment_pdf(self, s):
        """Density of S_1 = -beta_c omega + lambda(beta_c) + log 2."""
        b = self.cp.beta_c
        s = np.asarray(s, dtype=float)
        w = (self.cp.energy_shift - s) / b
        return self.tilted_omega_pdf(w) / b


@dataclass(frozen=True)
class SpineWalk:
    """One spine trajectory S_0 = 0, S_1, ..., S_n with its running minimum."""

    steps: np.ndarray

    @property
    def n(self) -> int:
        return len(self.steps) - 1

    @property
    def final(self) -> float:
        return float(self.steps[-1])

    @property
    def running_min(self) -> float:
        return float(self.steps.min())


def sample_tilted_omega(dist: SpineIncrementDist, size: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Draw noise values under the exponential tilt e^{beta_c omega}."""
    b = dist.cp.beta_c
    m = dist.model
    if m.kind == "gaussian":
        # conjugate shift: mean moves by beta_c sigma^2
        return rng.normal(m.mu + b * m.sigma ** 2, m.sigma, size)
    if m.kind == "rademacher":
        p = math.exp(b) / (2.0 * math.cosh(b))
        return np.where(rng.random(size) < p, 1.0, -1.0)
    # uniform01 inverse CDF: F(x) = (e^{bx} - 1)/(e^b - 1)
    u = rng.random(size)
    return np.log1p(u * math.expm1(b)) / b


def sample_spine_increments(dist: SpineIncrementDist, size: int,
                            rng: np.random.Generator) -> np.ndarray:
    return dist.cp.energy_shift - dist.cp.beta_c * sample_tilted_omega(dist, size, rng)


def sample_spine_increment(dist: SpineIncrementDist,
                           rng: np.random.Generator) -> float:
    return float(sample_spine_increments(dist, 1, rng)[0])


def sample_spine_walk(dist: SpineIncrementDist, n: int,
                      rng: np.random.Generator) -> SpineWalk:
    steps = np.zeros(n + 1)
    if n > 0:
        np.cumsum(sample_spine_increments(dist, n, rng), out=steps[1:])
    return SpineWalk(steps)


def sample_walk_matrix(dist: SpineIncrementDist, n: int, walks: int,
                       rng: np.random.Generator) -> np.ndarray:
    """(walks, n+1) matrix of spine trajectories including the S_0 = 0 column."""
    out = np.zeros((walks, n + 1))
    np.cumsum(sample_spine_increments(dist, walks * n, rng).reshape(walks, n),
              axis=1, out=out[:, 1:])
    return out


def many_to_one(dist: SpineIncrementDist, n: int, f, replicas: int,
                rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimate of the tilted expectation of f at the walk endpoint.

    By the change of measure this equals the annealed cascade expectation
    E[sum over generation-n vertices of f(V(v)) e^{-V(v)}], which
    `cascade_side_expectation` estimates from environment replicas; the two
    routes cross-validate each other.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    vals = np.empty(replicas)
    done = 0
    chunk = max(1, min(replicas, (1 << 22) // max(n, 1)))
    while done < replicas:
        c = min(chunk, replicas - done)
        if n == 0:
            endpoints = np.zeros(c)
        else:
            incs = sample_spine_increments(dist, c * n, rng).reshape(c, n)
            endpoints = incs.sum(axis=1)
        vals[done:done + c] = f(endpoints)
        done += c
    est = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    return est, stderr


def cascade_side_expectation(model: EnvironmentModel, cp: CriticalPoint, n: int,
                             f, replicas: int, master_seed: int) -> tuple[float, float]:
    """Annealed estimate of E[sum f(V(v)) e^{-V(v)}] over generation n,
    averaged over independent environment replicas (the cascade side of the
    many-to-one identity)."""
    from .cascade import TreeSpec, _Sweeper

    vals = np.empty(replicas)
    sweeper = _Sweeper(max(n, 1))
    for r in range(replicas):
        spec = TreeSpec(model, cp, n, master_seed, r)
        c0, c1, kind = spec.energy_coeffs()
        v = sweeper.leaves(spec.node_key, 0, 0, n, 0.0, c0, c1, kind)
        vals[r] = float(np.sum(f(v) * np.exp(-v)))
    est = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    return est, stderr
