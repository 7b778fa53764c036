"""Exhaustive log-domain enumeration of the weighted binary tree.

One replica is a deterministic environment: the noise at every vertex is a
pure function of (master_seed, replica_index, vertex path), so a 2^n-leaf
sweep needs only O(2^min(n, CHUNK_LEVELS)) memory and re-runs of any
subtree reproduce identical energies.  Energies accumulate as

    V(v) = V(parent) - beta_c * omega(v) + lambda(beta_c) + log 2,

the centered form in which the critical partition function is
W_n = sum over leaves of exp(-V).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import _kernels, noise
from .environment import CriticalPoint, EnvironmentModel
from .errors import BudgetExceeded

MAX_ENUM_N = 30
MAX_GIBBS_N = 24
# Leaves per vectorized chunk; sweeps deeper than this split at a top prefix.
CHUNK_LEVELS = 22

_KIND_CODES = {"gaussian": _kernels.KIND_GAUSSIAN,
               "rademacher": _kernels.KIND_RADEMACHER,
               "uniform01": _kernels.KIND_UNIFORM01}


@dataclass(frozen=True)
class TreeSpec:
    """One environment replica of the depth-n weighted tree."""

    model: EnvironmentModel
    cp: CriticalPoint
    n: int
    master_seed: int
    replica_index: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")

    @property
    def node_key(self) -> np.uint64:
        return noise.derive_key(self.master_seed, self.replica_index,
                                noise.STREAM_NODE)

    def energy_coeffs(self) -> tuple[float, float, int]:
        """(c0, c1, kind) with V-increment = c0 + c1 * variate.

        The raw variate is standardized (N(0,1), +-1 sign, or U(0,1)); the
        model's location/scale fold into the coefficients.
        """
        cp = self.cp
        m = self.model
        if m.kind == "gaussian":
            c0 = -cp.beta_c * m.mu + cp.energy_shift
            c1 = -cp.beta_c * m.sigma
        else:
            c0 = cp.energy_shift
            c1 = -cp.beta_c
        return c0, c1, _KIND_CODES[m.kind]

    def node_omega(self, node: noise.NodeId) -> float:
        """The raw environment noise omega(v) at one vertex."""
        x = noise.node_variate(self.node_key, node, self.model.kind)
        if self.model.kind == "gaussian":
            return self.model.mu + self.model.sigma * x
        return x

    def node_energy_increment(self, node: noise.NodeId) -> float:
        c0, c1, kind = self.energy_coeffs()
        return c0 + c1 * noise.node_variate(self.node_key, node, self.model.kind)


@dataclass(frozen=True)
class PartitionSample:
    """Log-domain partition values of one replica at generation n."""

    replica_index: int
    n: int
    log_wn: float
    log_wn_minus_delta: float | None
    log_wn_plus_delta: float | None
    log_w_gamma: dict[float, float] = field(default_factory=dict)
    min_v: float = math.nan
    max_v: float = math.nan


class _Sweeper:
    """Reusable buffers for chunked leaf sweeps of one or many replicas."""

    def __init__(self, levels: int):
        self.levels = levels
        self.out = np.empty(1 << levels)
        half = 1 << max(levels - 1, 0)
        self.wa = np.empty(half)
        self.wb = np.empty(half)
        self.expbuf = np.empty(1 << levels)

    def leaves(self, key, prefix, d0, m, v0, c0, c1, kind) -> np.ndarray:
        _kernels.subtree_leaf_energies(np.uint64(key), np.uint64(prefix),
                                       np.int64(d0), np.int64(m), v0, c0, c1,
                                       kind, self.out, self.wa, self.wb,
                                       self.expbuf)
        return self.out[: 1 << m]


def _logsumexp_scaled(theta: float, v: np.ndarray, buf: np.ndarray) -> float:
    """log sum exp(-theta * v), shift-stable for any energy range."""
    b = buf[: v.shape[0]]
    np.multiply(v, -theta, out=b)
    mx = b.max()
    np.subtract(b, mx, out=b)
    np.exp(b, out=b)
    return mx + math.log(b.sum())


@dataclass
class _SweepResult:
    log_z: np.ndarray          # per requested theta
    min_v: float
    max_v: float
    argmin_index: int = -1
    log_window: float = -math.inf   # log sum e^-V over leaves inside window


def _sweep(spec: TreeSpec, thetas: np.ndarray, window=None,
           want_argmin: bool = False, sweeper: _Sweeper | None = None) -> _SweepResult:
    n = spec.n
    c0, c1, kind = spec.energy_coeffs()
    key = spec.node_key
    if n == 0:
        lw = math.log(1.0) if window is None else (
            0.0 if window[0] <= 0.0 <= window[1] else -math.inf)
        return _SweepResult(np.zeros(len(thetas)), 0.0, 0.0, 0,
                            log_window=lw)
    d0 = max(0, n - CHUNK_LEVELS)
    m = n - d0
    if sweeper is None or sweeper.levels < m:
        sweeper = _Sweeper(m)
    if d0 > 0:
        top = _Sweeper(d0)
        v_top = top.leaves(key, 0, 0, d0, 0.0, c0, c1, kind).copy()
    else:
        v_top = np.zeros(1)

    nchunks = 1 << d0
    chunk_lz = np.empty((nchunks, len(thetas)))
    chunk_win = np.full(nchunks, -math.inf)
    min_v = math.inf
    max_v = -math.inf
    argmin = -1
    for p in range(nchunks):
        v = sweeper.leaves(key, p, d0, m, v_top[p], c0, c1, kind)
        mn = v.min()
        mx = v.max()
        if mn < min_v:
            min_v = mn
            if want_argmin:
                argmin = (p << m) + int(np.argmin(v))
        if mx > max_v:
            max_v = mx
        for j, th in enumerate(thetas):
            chunk_lz[p, j] = _logsumexp_scaled(th, v, sweeper.expbuf)
        if window is not None:
            lo, hi = window
            mask = (v >= lo) & (v <= hi)
            if mask.any():
                b = sweeper.expbuf[: v.shape[0]]
                np.subtract(mn, v, out=b)
                np.exp(b, out=b)
                s = float(b[mask].sum())
                chunk_win[p] = -mn + math.log(s)
    # merge chunks (order-independent up to IEEE associativity: fixed order)
    log_z = logsumexp(chunk_lz, axis=0) if nchunks > 1 else chunk_lz[0]
    log_window = float(logsumexp(chunk_win)) if window is not None else -math.inf
    return _SweepResult(np.atleast_1d(log_z), float(min_v), float(max_v),
                        argmin, log_window)


def _check_enum_budget(n: int, force: bool):
    if n > MAX_ENUM_N and not force:
        raise BudgetExceeded(f"enumeration at n={n} exceeds cap {MAX_ENUM_N}")


def log_partition(spec: TreeSpec, exponents, *, force: bool = False) -> np.ndarray:
    """log of sum over generation-n leaves of exp(-theta * V), per theta."""
    _check_enum_budget(spec.n, force)
    thetas = np.asarray(list(exponents), dtype=float)
    if np.any(thetas <= 0):
        raise ValueError("partition exponents must be positive")
    return _sweep(spec, thetas).log_z


def enumerate_partition(spec: TreeSpec, delta: float | None = None,
                        gammas=(), *, force: bool = False) -> PartitionSample:
    """One exhaustive sweep: W_n, the delta-perturbed pair, extra gamma
    powers, and the extremal energies of generation n.

    The perturbed entries use exponents theta = 1 -+ n^-delta.
    """
    _check_enum_budget(spec.n, force)
    thetas = [1.0]
    if delta is not None:
        if delta <= 0:
            raise ValueError("delta must be positive")
        eps = float(spec.n) ** (-delta) if spec.n > 0 else 1.0
        thetas += [1.0 - eps, 1.0 + eps]
    gammas = [float(g) for g in gammas]
    for g in gammas:
        if g <= 0:
            raise ValueError("gamma exponents must be positive")
    thetas += gammas
    res = _sweep(spec, np.asarray(thetas))
    k = 3 if delta is not None else 1
    return PartitionSample(
        replica_index=spec.replica_index, n=spec.n,
        log_wn=float(res.log_z[0]),
        log_wn_minus_delta=float(res.log_z[1]) if delta is not None else None,
        log_wn_plus_delta=float(res.log_z[2]) if delta is not None else None,
        log_w_gamma={g: float(res.log_z[k + i]) for i, g in enumerate(gammas)},
        min_v=res.min_v, max_v=res.max_v)


def energy_window_mass(spec: TreeSpec, lo: float, hi: float, *,
                       force: bool = False) -> float:
    """Gibbs mass of the energy window: sum e^-V over {lo <= V <= hi} / W_n."""
    _check_enum_budget(spec.n, force)
    if lo > hi:
        return 0.0
    res = _sweep(spec, np.array([1.0]), window=(lo, hi))
    return float(math.exp(res.log_window - res.log_z[0]))


def gibbs_window_mass(spec: TreeSpec, eps: float, eps_prime: float, *,
                      force: bool = False) -> float:
    """Critical Gibbs mass of { n^(1/2-eps) <= V(v) <= n^(1/2+eps') }."""
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    if eps_prime <= 0.0:
        raise ValueError("eps_prime must be positive")
    nf = float(spec.n)
    return energy_window_mass(spec, nf ** (0.5 - eps), nf ** (0.5 + eps_prime),
                              force=force)


def min_energy_stats(spec: TreeSpec, *, force: bool = False) -> tuple[float, noise.NodeId]:
    """Exact minimum of V over generation n; ties go to the lexicographically
    smallest path."""
    _check_enum_budget(spec.n, force)
    res = _sweep(spec, np.array([1.0]), want_argmin=True)
    return res.min_v, noise.NodeId.from_index(spec.n, res.argmin_index)


def gibbs_sample_path(spec: TreeSpec, rng: np.random.Generator, *,
                      force: bool = False) -> tuple[noise.NodeId, np.ndarray]:
    """Exact draw of a generation-n leaf with probability e^-V(v) / W_n.

    Top-down descent: at each internal vertex the two child-subtree
    log-partition sums are recomputed by re-traversal (nothing is stored
    between calls), and the branch is taken with the exact conditional
    probability.  Returns the leaf and the energies V(xi_1..xi_n) along it.
    Costs O(n 2^n), hence the tighter generation cap.
    """
    n = spec.n
    if n > MAX_GIBBS_N and not force:
        raise BudgetExceeded(f"gibbs descent at n={n} exceeds cap {MAX_GIBBS_N}")
    c0, c1, kind = spec.energy_coeffs()
    key = spec.node_key
    sweeper = _Sweeper(max(n, 1))
    path: list[int] = []
    traj = np.empty(n)
    p = 0
    v_cur = 0.0
    for d in range(n):
        child_lz = np.empty(2)
        child_v = np.empty(2)
        for b in (0, 1):
            c = (p << 1) | b
            node = noise.NodeId(tuple(path) + (b,))
            v_c = v_cur + spec.node_energy_increment(node)
            child_v[b] = v_c
            m = n - d - 1
            leaves = sweeper.leaves(key, c, d + 1, m, v_c, c0, c1, kind)
            child_lz[b] = _logsumexp_scaled(1.0, leaves, sweeper.expbuf)
        p_left = 1.0 / (1.0 + math.exp(child_lz[1] - child_lz[0]))
        bit = 0 if rng.random() < p_left else 1
        path.append(bit)
        p = (p << 1) | bit
        v_cur = child_v[bit]
        traj[d] = v_cur
    return noise.NodeId(tuple(path)), traj
