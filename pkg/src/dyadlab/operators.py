"""Sparse operators, the positive operator ``T_tau``, and the Haar square function.

All operators are evaluated by a single top-down accumulation over the
heap-indexed tree, so a call costs ``O(2**depth)`` regardless of family size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    DyadicInterval,
    GridFunction,
    accumulate_down,
    level_slice,
    node_scales,
)
from .sparse import SparseCollection
from .weights import Weight


class CoefficientFamily:
    """Nonnegative numbers attached to the members of a sparse collection."""

    def __init__(self, collection: SparseCollection, values):
        values = np.array(values, dtype=float).ravel()
        if values.size != len(collection):
            raise ValueError("one coefficient per member is required")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("coefficients must be finite and nonnegative")
        values.setflags(write=False)
        self.collection = collection
        self.values = values

    @classmethod
    def from_mapping(cls, collection: SparseCollection, mapping: dict) -> "CoefficientFamily":
        for Q in mapping:
            if Q not in collection:
                raise KeyError(f"{Q} is not a member of the collection")
        return cls(collection, [mapping.get(Q, 0.0) for Q in collection.members])

    @classmethod
    def constant(cls, collection: SparseCollection, c: float = 1.0) -> "CoefficientFamily":
        return cls(collection, np.full(len(collection), float(c)))

    @classmethod
    def sigma_power(cls, collection: SparseCollection, sigma: Weight, exponent: float) -> "CoefficientFamily":
        """``tau_Q = <sigma>_Q ** exponent`` (``exponent = r - 1`` gives the operator behind A^r)."""
        return cls(collection, sigma.node_averages[collection.nodes] ** exponent)

    def __getitem__(self, Q: DyadicInterval) -> float:
        i = self.collection.position(Q.node)
        if Q not in self.collection:
            raise KeyError(Q)
        return float(self.values[i])

    def items(self):
        return zip(self.collection.members, self.values.tolist())

    def node_array(self) -> np.ndarray:
        """Heap-indexed array with the coefficient on member nodes and 0 elsewhere."""
        out = np.zeros(1 << (self.collection.depth + 1))
        out[self.collection.nodes] = self.values
        return out


def _leaves(node_values: np.ndarray, depth: int) -> np.ndarray:
    return accumulate_down(node_values, depth)[level_slice(depth)]


def _check(S: SparseCollection, *fs):
    for f in fs:
        if f.depth != S.depth:
            raise ValueError(f"grid depth {f.depth} does not match family depth {S.depth}")


def sparse_accumulate(S: SparseCollection, r: float, g: GridFunction) -> np.ndarray:
    """Cell values of ``sum_{Q in S} <g>_Q^r 1_Q`` (the r-th power of ``A_S^r g``)."""
    if r <= 0:
        raise ValueError("r must be positive")
    _check(S, g)
    if np.any(g.values < 0):
        raise ValueError("sparse operator input must be nonnegative")
    contrib = np.zeros(1 << (S.depth + 1))
    contrib[S.nodes] = g.node_averages[S.nodes] ** r
    return _leaves(contrib, S.depth)


def sparse_apply(S: SparseCollection, r: float, g: GridFunction) -> GridFunction:
    """``A_S^r g = (sum_{Q in S} <g>_Q^r 1_Q)^{1/r}`` for ``g >= 0``."""
    return GridFunction(sparse_accumulate(S, r, g) ** (1.0 / r))


def positive_apply(S: SparseCollection, tau: CoefficientFamily, g: GridFunction) -> GridFunction:
    """``T_tau g = sum_Q tau_Q <g>_Q 1_Q``."""
    if tau.collection != S:
        raise ValueError("coefficients are attached to a different collection")
    _check(S, g)
    if np.any(g.values < 0):
        raise ValueError("positive operator input must be nonnegative")
    contrib = tau.node_array()
    contrib[S.nodes] *= g.node_averages[S.nodes]
    return GridFunction(_leaves(contrib, S.depth))


def char_functional(S: SparseCollection, sigma: Weight, r: float, f: GridFunction) -> GridFunction:
    """``sum_Q <sigma>_Q^r <f^r>_Q^sigma 1_Q``."""
    if r <= 0:
        raise ValueError("r must be positive")
    _check(S, sigma, f)
    if np.any(f.values < 0):
        raise ValueError("f must be nonnegative")
    frs = GridFunction(f.values ** r * sigma.values).node_integrals
    n = S.nodes
    contrib = np.zeros(1 << (S.depth + 1))
    contrib[n] = sigma.node_averages[n] ** r * frs[n] / sigma.node_masses[n]
    return GridFunction(_leaves(contrib, S.depth))


@dataclass(frozen=True)
class HaarCoefficients:
    """``<h_I, f>`` for every dyadic I of level ``< depth``, heap-indexed.

    ``h_I = |I|^{-1/2}`` on the left half of I and ``-|I|^{-1/2}`` on the right.
    """

    depth: int
    coefficients: np.ndarray
    mean: float

    def __getitem__(self, I: DyadicInterval) -> float:
        if I.level >= self.depth:
            raise KeyError(f"no Haar function for {I} at depth {self.depth}")
        return float(self.coefficients[I.node])

    def energy(self) -> float:
        """``sum_I <h_I, f>^2 + (int f)^2``, equal to ``||f||_2^2`` by Parseval."""
        return float(np.sum(self.coefficients ** 2) + self.mean ** 2)


def haar_transform(f: GridFunction) -> HaarCoefficients:
    L = f.depth
    sums = f.node_integrals
    coef = np.zeros(1 << L) if L else np.zeros(1)
    if L:
        # children of node n are 2n and 2n + 1; n runs over 1 .. 2**L - 1
        left, right = sums[2::2], sums[3::2]
        coef[1:] = (left - right) * np.sqrt(node_scales(L)[1:1 << L])
    coef.setflags(write=False)
    return HaarCoefficients(L, coef, float(sums[1]))


def haar_square(f: GridFunction) -> GridFunction:
    """``Sf = (sum_I |<h_I, f>|^2 / |I| 1_I)^{1/2}``."""
    L = f.depth
    coef = haar_transform(f).coefficients
    contrib = np.zeros(1 << (L + 1))
    contrib[1:1 << L] = coef[1:] ** 2 * node_scales(L)[1:1 << L]
    return GridFunction(np.sqrt(_leaves(contrib, L)))


def haar_sign(I: DyadicInterval, depth: int) -> np.ndarray:
    """Cell values of ``sgn(h_I)``: +1 on the left half, -1 on the right, 0 off I."""
    if I.level >= depth:
        raise ValueError("the Haar function of I needs I.level < depth")
    out = np.zeros(1 << depth)
    cells = I.cells(depth)
    half = (cells.stop - cells.start) // 2
    out[cells.start:cells.start + half] = 1.0
    out[cells.start + half:cells.stop] = -1.0
    return out


def sign_witness(I: DyadicInterval, magnitude: GridFunction) -> GridFunction:
    """``f = sgn(h_I) |magnitude|`` on I and 0 elsewhere, so that ``Sf >= <magnitude>_I`` on I."""
    if np.any(magnitude.values < 0):
        raise ValueError("magnitude must be nonnegative")
    f = GridFunction(haar_sign(I, magnitude.depth) * magnitude.values)
    Sf = haar_square(f).values[I.cells(f.depth)]
    target = magnitude.node_averages[I.node]
    if np.any(Sf < target * (1 - 1e-12)):
        raise AssertionError("sign witness lost its Haar mass")
    return f
