"""Deterministic per-node noise and stream-key derivation.

A node is addressed by its root-to-vertex path; the integer code
``(1 << depth) | path_bits`` is unique across depths.  The noise at a node
is a pure function of (master_seed, replica_index, node code), so any
subtree can be re-traversed from scratch, in any order, on any worker,
and reproduce identical values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Stream tags keep the node-noise, Gibbs-descent, spine and functional
# streams of one experiment disjoint.
STREAM_NODE = 1
STREAM_GIBBS = 2
STREAM_SPINE = 3
STREAM_FUNCTIONAL = 4

_KIND_CODES = {"gaussian": _kernels.KIND_GAUSSIAN,
               "rademacher": _kernels.KIND_RADEMACHER,
               "uniform01": _kernels.KIND_UNIFORM01}


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_key(master_seed: int, replica_index: int, stream: int) -> np.uint64:
    """64-bit stream key for one (seed, replica, purpose) triple."""
    k = _mix64(master_seed & _MASK64)
    k = _mix64((k + replica_index * _GOLDEN) & _MASK64)
    k = _mix64((k + stream * _GOLDEN) & _MASK64)
    return np.uint64(k)


@dataclass(frozen=True)
class NodeId:
    """Path from the root: a tuple of left(0)/right(1) choices."""

    path: tuple[int, ...] = ()

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.path):
            raise ValueError("path bits must be 0 or 1")

    @property
    def depth(self) -> int:
        return len(self.path)

    @property
    def index(self) -> int:
        """Position among the nodes of this generation, in path order."""
        i = 0
        for b in self.path:
            i = (i << 1) | b
        return i

    @property
    def code(self) -> int:
        return (1 << self.depth) | self.index

    @classmethod
    def from_index(cls, depth: int, index: int) -> "NodeId":
        if not 0 <= index < (1 << depth):
            raise ValueError(f"index {index} out of range at depth {depth}")
        return cls(tuple((index >> (depth - 1 - j)) & 1 for j in range(depth)))

    def child(self, bit: int) -> "NodeId":
        return NodeId(self.path + (bit,))


ROOT = NodeId()


def node_variate(key: np.uint64, node: NodeId, kind: str) -> float:
    """Standardized variate (N(0,1) draw, +-1 sign, or U(0,1)) at one node."""
    if node.depth == 0:
        raise ValueError("the root carries no noise")
    return _kernels.node_variate(np.uint64(key), np.uint64(node.code),
                                 _KIND_CODES[kind])


def node_variates(key: np.uint64, codes: np.ndarray, kind: str) -> np.ndarray:
    out = np.empty(len(codes), dtype=np.float64)
    _kernels.node_variates(np.uint64(key), codes.astype(np.uint64),
                           _KIND_CODES[kind], out)
    return out


def generation_codes(depth: int, start: int = 0, count: int | None = None) -> np.ndarray:
    """Codes of generation-``depth`` nodes [start, start+count) in path order."""
    if count is None:
        count = (1 << depth) - start
    return (1 << depth) + np.arange(start, start + count, dtype=np.uint64)
