"""Dyadic grid on [0, 1), step functions and exact integral primitives.

Every dyadic interval of a depth-``L`` grid is addressed by its heap id
``n = 2**level + index`` (root is ``1``).  Arrays indexed by heap id have
length ``2**(L + 1)``; slot ``0`` is unused.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

MAX_DEPTH = 24
DEFAULT_DEPTH = 12


class RegimeError(ValueError):
    """Raised when an operation is requested outside its exponent regime."""


def node_id(level: int, index: int) -> int:
    return (1 << level) + index


def node_level(n):
    """Level of heap id ``n`` (vectorised for integer arrays)."""
    if isinstance(n, (int, np.integer)):
        return int(n).bit_length() - 1
    n = np.asarray(n, dtype=np.int64)
    return np.floor(np.log2(n)).astype(np.int64)


def level_slice(k: int) -> slice:
    return slice(1 << k, 1 << (k + 1))


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """The interval ``[index * 2**-level, (index + 1) * 2**-level)``."""

    level: int
    index: int

    def __post_init__(self):
        if self.level < 0 or self.level > MAX_DEPTH:
            raise ValueError(f"level {self.level} outside [0, {MAX_DEPTH}]")
        if not 0 <= self.index < (1 << self.level):
            raise ValueError(f"index {self.index} outside [0, 2**{self.level})")

    @classmethod
    def from_node(cls, n: int) -> "DyadicInterval":
        level = int(n).bit_length() - 1
        return cls(level, int(n) - (1 << level))

    @property
    def node(self) -> int:
        return node_id(self.level, self.index)

    @property
    def length(self) -> float:
        return 2.0 ** -self.level

    @property
    def start(self) -> float:
        return self.index * self.length

    @property
    def end(self) -> float:
        return (self.index + 1) * self.length

    @property
    def parent(self) -> "DyadicInterval | None":
        if self.level == 0:
            return None
        return DyadicInterval(self.level - 1, self.index // 2)

    @property
    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return (DyadicInterval(self.level + 1, 2 * self.index),
                DyadicInterval(self.level + 1, 2 * self.index + 1))

    def contains(self, other: "DyadicInterval") -> bool:
        """True when ``other`` is a (non-strict) subinterval of ``self``."""
        if other.level < self.level:
            return False
        return other.index >> (other.level - self.level) == self.index

    def disjoint(self, other: "DyadicInterval") -> bool:
        return not (self.contains(other) or other.contains(self))

    def cells(self, depth: int) -> slice:
        """Slice of the finest cells of a depth-``depth`` grid inside this interval."""
        if self.level > depth:
            raise ValueError(f"interval of level {self.level} is finer than grid depth {depth}")
        width = 1 << (depth - self.level)
        return slice(self.index * width, (self.index + 1) * width)

    def __str__(self):
        return f"[{self.start:g}, {self.end:g})"


ROOT = DyadicInterval(0, 0)


def all_intervals(depth: int, max_level: int | None = None):
    """Iterate over every dyadic interval of level ``<= max_level`` (default ``depth``)."""
    top = depth if max_level is None else max_level
    for k in range(top + 1):
        for j in range(1 << k):
            yield DyadicInterval(k, j)


def _check_depth(depth: int):
    if depth < 0 or depth > MAX_DEPTH:
        raise ValueError(f"depth {depth} outside [0, {MAX_DEPTH}]")


def tree_sums(cell_masses: np.ndarray) -> np.ndarray:
    """Heap-indexed sums of ``cell_masses`` over every dyadic interval.

    Sums are formed bottom-up as children pairs, which fixes the summation
    order and makes parent sums exactly the sum of their two children.
    """
    n = cell_masses.size
    depth = n.bit_length() - 1
    out = np.zeros(2 * n)
    out[n:] = cell_masses
    for k in range(depth - 1, -1, -1):
        child = out[level_slice(k + 1)]
        out[level_slice(k)] = child[0::2] + child[1::2]
    return out


def accumulate_down(node_values: np.ndarray, depth: int) -> np.ndarray:
    """For every node, the sum of ``node_values`` over the node and its ancestors."""
    acc = np.zeros(1 << (depth + 1))
    acc[1] = node_values[1]
    for k in range(1, depth + 1):
        acc[level_slice(k)] = node_values[level_slice(k)] + np.repeat(acc[level_slice(k - 1)], 2)
    return acc


def accumulate_up(node_values: np.ndarray, depth: int) -> np.ndarray:
    """For every node, the sum of ``node_values`` over the node and its descendants."""
    acc = np.array(node_values, dtype=float)
    acc[0] = 0.0
    for k in range(depth - 1, -1, -1):
        child = acc[level_slice(k + 1)]
        acc[level_slice(k)] += child[0::2] + child[1::2]
    return acc


def max_down(node_values: np.ndarray, depth: int) -> np.ndarray:
    """For every node, the max of ``node_values`` over the node and its ancestors."""
    acc = np.empty(1 << (depth + 1))
    acc[0] = -np.inf
    acc[1] = node_values[1]
    for k in range(1, depth + 1):
        acc[level_slice(k)] = np.maximum(node_values[level_slice(k)], np.repeat(acc[level_slice(k - 1)], 2))
    return acc


def node_lengths(depth: int) -> np.ndarray:
    """Heap-indexed array of ``|Q| = 2**-level``."""
    out = np.zeros(1 << (depth + 1))
    for k in range(depth + 1):
        out[level_slice(k)] = 2.0 ** -k
    return out


def node_scales(depth: int) -> np.ndarray:
    """Heap-indexed array of ``1/|Q| = 2**level`` (slot 0 holds 0)."""
    out = np.zeros(1 << (depth + 1))
    for k in range(depth + 1):
        out[level_slice(k)] = 2.0 ** k
    return out


class GridFunction:
    """A step function constant on the ``2**depth`` finest dyadic cells of [0, 1).

    Values are copied and frozen on construction.
    """

    def __init__(self, values):
        arr = np.array(values, dtype=float).ravel()
        n = arr.size
        if n == 0 or n & (n - 1):
            raise ValueError(f"number of cells must be a power of two, got {n}")
        depth = n.bit_length() - 1
        _check_depth(depth)
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid function values must be finite")
        arr.setflags(write=False)
        self._values = arr
        self._depth = depth

    @classmethod
    def constant(cls, c: float, depth: int):
        _check_depth(depth)
        return cls(np.full(1 << depth, float(c)))

    @classmethod
    def indicator(cls, Q: DyadicInterval, depth: int, value: float = 1.0):
        v = np.zeros(1 << depth)
        v[Q.cells(depth)] = value
        return cls(v)

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def depth(self) -> int:
        return self._depth

    @property
    def cell_width(self) -> float:
        return 2.0 ** -self._depth

    def __len__(self):
        return self._values.size

    def __repr__(self):
        return f"{type(self).__name__}(depth={self._depth}, values={self._values!r})"

    @cached_property
    def node_integrals(self) -> np.ndarray:
        """Heap-indexed integrals over every dyadic interval."""
        out = tree_sums(self._values * self.cell_width)
        out.setflags(write=False)
        return out

    @cached_property
    def node_averages(self) -> np.ndarray:
        out = self.node_integrals * node_scales(self._depth)
        out.setflags(write=False)
        return out

    def refine(self, extra: int = 1) -> "GridFunction":
        """Same function on a grid ``extra`` levels deeper."""
        return type(self)(np.repeat(self._values, 1 << extra))

    def is_nonnegative(self) -> bool:
        return bool(np.all(self._values >= 0))


def _same_depth(*fs):
    depths = {f.depth for f in fs if f is not None}
    if len(depths) > 1:
        raise ValueError(f"grid functions live on different depths: {sorted(depths)}")


def integrate(f: GridFunction, Q: DyadicInterval = ROOT) -> float:
    if Q.level > f.depth:
        raise ValueError(f"interval of level {Q.level} is finer than grid depth {f.depth}")
    return float(f.node_integrals[Q.node])


def average(f: GridFunction, Q: DyadicInterval = ROOT) -> float:
    return integrate(f, Q) / Q.length


def weighted_average(f: GridFunction, sigma: GridFunction, Q: DyadicInterval = ROOT) -> float:
    """``<f>_Q^sigma = int_Q f sigma / sigma(Q)``."""
    _same_depth(f, sigma)
    fs = GridFunction(f.values * sigma.values)
    return integrate(fs, Q) / integrate(sigma, Q)


def _cell_masses(f: GridFunction, w: GridFunction | None) -> np.ndarray:
    if w is None:
        return np.full(len(f), f.cell_width)
    _same_depth(f, w)
    return w.values * f.cell_width


def lp_norm(f: GridFunction, w: GridFunction | None = None, p: float = 2.0) -> float:
    """``||f||_{L^p(w)}``; ``w=None`` means Lebesgue measure."""
    if p <= 0:
        raise ValueError("p must be positive")
    m = _cell_masses(f, w)
    return float(np.sum(np.abs(f.values) ** p * m) ** (1.0 / p))


def _level_profile(a: np.ndarray, m: np.ndarray):
    """Distinct positive values of ``a`` (descending) and ``m``-mass of ``{a >= v}``."""
    order = np.argsort(-a, kind="stable")
    a_sorted = a[order]
    mass = np.cumsum(m[order])
    keep = a_sorted > 0
    a_sorted, mass = a_sorted[keep], mass[keep]
    if a_sorted.size == 0:
        return a_sorted, mass
    # last position of each run of equal values carries the closed level-set mass
    last = np.r_[a_sorted[1:] != a_sorted[:-1], True]
    return a_sorted[last], mass[last]


def weak_lp_norm(f: GridFunction, w: GridFunction | None = None, p: float = 2.0) -> float:
    """``sup_t t w({|f| > t})^{1/p}``, realised as a max over attained values."""
    if p <= 0:
        raise ValueError("p must be positive")
    vals, mass = _level_profile(np.abs(f.values), _cell_masses(f, w))
    if vals.size == 0:
        return 0.0
    return float(np.max(vals * mass ** (1.0 / p)))


def lorentz_p1_norm(f: GridFunction, w: GridFunction | None = None, p: float = 2.0) -> float:
    """Layer-cake value ``int_0^inf w({|f| > t})^{1/p} dt``.

    The distribution function is piecewise constant between consecutive
    distinct values of ``|f|``, so the integral is a finite sum.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    vals, mass = _level_profile(np.abs(f.values), _cell_masses(f, w))
    if vals.size == 0:
        return 0.0
    gaps = vals - np.r_[vals[1:], 0.0]
    return float(np.sum(gaps * mass ** (1.0 / p)))


@dataclass(frozen=True)
class ExponentParams:
    """Exponents ``p`` in (1, inf) and ``r`` in (0, inf) with derived quantities."""

    p: float
    r: float = 1.0

    def __post_init__(self):
        if not self.p > 1 or not math.isfinite(self.p):
            raise ValueError(f"p must lie in (1, inf), got {self.p}")
        if not self.r > 0 or not math.isfinite(self.r):
            raise ValueError(f"r must lie in (0, inf), got {self.r}")

    @property
    def p_dual(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def regime(self) -> str:
        if self.p > self.r:
            return "p>r"
        if self.p < self.r:
            return "p<r"
        return "p=r"

    @property
    def s(self) -> float | None:
        """``(p/r)'``, defined only for ``p > r``."""
        if self.p <= self.r:
            return None
        q = self.p / self.r
        return q / (q - 1.0)

    @property
    def eps_weak(self) -> float | None:
        """``(r - p) / 2``, defined only for ``p < r``."""
        if self.p >= self.r:
            return None
        return (self.r - self.p) / 2.0
