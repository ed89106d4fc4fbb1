"""Sparse families of dyadic intervals.

A family is stored as the sorted array of heap ids of its members.  The
S-parent of a member is the smallest member strictly containing it; the
canonical sparsity witness of ``Q`` is ``E(Q) = Q`` minus its S-children.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import (
    DyadicInterval,
    GridFunction,
    MAX_DEPTH,
    level_slice,
    node_level,
)
from .weights import Weight

DEFAULT_STOPPING_FACTOR = 2.0


class SparsifyError(RuntimeError):
    """Raised when the density reduction does not reach its target."""


class SparseCollection:
    """Finite set of dyadic intervals of level ``<= depth``."""

    def __init__(self, depth: int, members=()):
        if depth < 0 or depth > MAX_DEPTH:
            raise ValueError(f"depth {depth} outside [0, {MAX_DEPTH}]")
        nodes = set()
        for Q in members:
            if not isinstance(Q, DyadicInterval):
                Q = DyadicInterval(*Q)
            if Q.level > depth:
                raise ValueError(f"member {Q} is finer than depth {depth}")
            nodes.add(Q.node)
        self._init(depth, np.array(sorted(nodes), dtype=np.int64))

    def _init(self, depth, nodes):
        nodes.setflags(write=False)
        self._depth = depth
        self._nodes = nodes

    @classmethod
    def from_nodes(cls, depth: int, nodes) -> "SparseCollection":
        nodes = np.unique(np.asarray(nodes, dtype=np.int64))
        if nodes.size and (nodes[0] < 1 or nodes[-1] >= 1 << (depth + 1)):
            raise ValueError("heap ids out of range for this depth")
        obj = cls.__new__(cls)
        obj._init(depth, nodes)
        return obj

    @property
    def depth(self) -> int:
        return self._depth

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes

    @cached_property
    def members(self) -> tuple[DyadicInterval, ...]:
        return tuple(DyadicInterval.from_node(int(n)) for n in self._nodes)

    @cached_property
    def levels(self) -> np.ndarray:
        return node_level(self._nodes) if self._nodes.size else np.zeros(0, dtype=np.int64)

    @cached_property
    def lengths(self) -> np.ndarray:
        return 2.0 ** -self.levels.astype(float)

    def __len__(self):
        return int(self._nodes.size)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, Q: DyadicInterval) -> bool:
        i = np.searchsorted(self._nodes, Q.node)
        return bool(i < self._nodes.size and self._nodes[i] == Q.node)

    def __eq__(self, other):
        if not isinstance(other, SparseCollection):
            return NotImplemented
        return self._depth == other._depth and np.array_equal(self._nodes, other._nodes)

    def __hash__(self):
        return hash((self._depth, self._nodes.tobytes()))

    def __repr__(self):
        return f"SparseCollection(depth={self._depth}, size={len(self)})"

    def position(self, nodes) -> np.ndarray:
        """Positions of the given heap ids inside ``self.nodes``."""
        return np.searchsorted(self._nodes, nodes)

    @cached_property
    def mask(self) -> np.ndarray:
        m = np.zeros(1 << (self._depth + 1), dtype=bool)
        m[self._nodes] = True
        return m

    @cached_property
    def owner(self) -> np.ndarray:
        """Heap-indexed: the smallest member containing each node (0 if none)."""
        owner = np.zeros(1 << (self._depth + 1), dtype=np.int64)
        ids = np.arange(owner.size, dtype=np.int64)
        mask = self.mask
        for k in range(self._depth + 1):
            sl = level_slice(k)
            inherited = np.repeat(owner[level_slice(k - 1)], 2) if k else np.zeros(1, dtype=np.int64)
            owner[sl] = np.where(mask[sl], ids[sl], inherited)
        return owner

    @cached_property
    def parent_nodes(self) -> np.ndarray:
        """S-parent heap id of every member, 0 for maximal members."""
        if not len(self):
            return np.zeros(0, dtype=np.int64)
        return self.owner[self._nodes // 2]

    @cached_property
    def parent_positions(self) -> np.ndarray:
        """Position of the S-parent in ``nodes``; -1 for maximal members."""
        par = self.parent_nodes
        pos = np.where(par > 0, self.position(par), -1)
        return pos

    @cached_property
    def generations(self) -> np.ndarray:
        """S-generation: 0 for maximal members, parent's generation + 1 otherwise."""
        gen = np.zeros(len(self), dtype=np.int64)
        parent = self.parent_positions
        # parents precede children in heap order
        for i in range(len(self)):
            if parent[i] >= 0:
                gen[i] = gen[parent[i]] + 1
        return gen

    @property
    def maximal(self) -> tuple[DyadicInterval, ...]:
        return tuple(Q for Q, par in zip(self.members, self.parent_nodes) if par == 0)

    def children(self, Q: DyadicInterval) -> tuple[DyadicInterval, ...]:
        """S-children: the maximal members strictly inside ``Q``."""
        return tuple(DyadicInterval.from_node(int(n)) for n in self._nodes[self.parent_nodes == Q.node])

    def parent(self, Q: DyadicInterval) -> DyadicInterval | None:
        par = int(self.parent_nodes[self.position(Q.node)])
        return DyadicInterval.from_node(par) if par else None

    def subfamily(self, selector) -> "SparseCollection":
        """Family of members picked by a boolean mask or an array of heap ids."""
        selector = np.asarray(selector)
        nodes = self._nodes[selector] if selector.dtype == bool else selector
        return SparseCollection.from_nodes(self._depth, nodes)

    def inside(self, R: DyadicInterval) -> "SparseCollection":
        """Members contained in ``R``."""
        shift = self.levels - R.level
        idx = self._nodes - (1 << self.levels)
        keep = (shift >= 0) & ((idx >> np.maximum(shift, 0)) == R.index)
        return self.subfamily(keep)


@dataclass(frozen=True)
class SparsityCertificate:
    """Canonical witness measures ``|E(Q)|`` aligned with ``collection.nodes``."""

    collection: SparseCollection
    e_measures: np.ndarray
    theta: float

    @property
    def half_sparse(self) -> bool:
        return self.theta >= 0.5

    @property
    def quarter_dense(self) -> bool:
        return self.theta >= 0.75

    def passes(self, theta: float = 0.5) -> bool:
        return self.theta >= theta

    def as_dict(self) -> dict[DyadicInterval, float]:
        return dict(zip(self.collection.members, self.e_measures.tolist()))


def children_measure(S: SparseCollection) -> np.ndarray:
    """Total length of the S-children of every member."""
    out = np.zeros(len(S))
    pos = S.parent_positions
    has = pos >= 0
    np.add.at(out, pos[has], S.lengths[has])
    return out


def verify_sparse(S: SparseCollection) -> SparsityCertificate:
    """Exact canonical witness measures and the density ``theta = min |E(Q)|/|Q|``."""
    if not len(S):
        return SparsityCertificate(S, np.zeros(0), 1.0)
    e = S.lengths - children_measure(S)
    theta = float(np.min(e / S.lengths))
    return SparsityCertificate(S, e, theta)


def sparsify(S: SparseCollection, theta_target: float = 0.75, max_rounds: int = 3) -> list[SparseCollection]:
    """Split ``S`` by S-generation parity until every part has density ``>= theta_target``.

    Parts that already meet the target are kept as they are; failing parts
    are re-split, at most ``max_rounds`` times.
    """
    if not 0.5 < theta_target < 1:
        raise ValueError("theta_target must lie in (1/2, 1)")
    if not len(S):
        return []
    families = [S]
    for _ in range(max_rounds):
        if all(verify_sparse(F).theta >= theta_target for F in families):
            return families
        split = []
        for F in families:
            if verify_sparse(F).theta >= theta_target:
                split.append(F)
                continue
            parity = F.generations % 2
            for bit in (0, 1):
                if np.any(parity == bit):
                    split.append(F.subfamily(parity == bit))
        families = split
    bad = [verify_sparse(F).theta for F in families if verify_sparse(F).theta < theta_target]
    if bad:
        raise SparsifyError(
            f"{len(bad)} subfamilies still below theta={theta_target} after {max_rounds} rounds "
            f"(worst theta {min(bad):.6g})")
    return families


@dataclass(frozen=True)
class PrincipalForest:
    """Principal cubes and the map ``pi`` from members to their principal ancestor."""

    collection: SparseCollection
    principal_nodes: np.ndarray
    pi_nodes: np.ndarray
    averages: np.ndarray
    tau: float

    @property
    def principal(self) -> tuple[DyadicInterval, ...]:
        return tuple(DyadicInterval.from_node(int(n)) for n in self.principal_nodes)

    def pi(self, Q: DyadicInterval) -> DyadicInterval:
        return DyadicInterval.from_node(int(self.pi_nodes[self.collection.position(Q.node)]))

    def stopping_holds(self) -> bool:
        """``<f>_Q^sigma <= tau <f>_{pi(Q)}^sigma`` for every member."""
        pos = self.collection.position(self.pi_nodes)
        return bool(np.all(self.averages <= self.tau * self.averages[pos]))

    def carleson_constant(self, sigma: Weight) -> float:
        """``sum_F sigma(F) / sigma(union of maximal members)``."""
        S = self.collection
        if not len(S):
            return 0.0
        top = S.nodes[S.parent_nodes == 0]
        return float(np.sum(sigma.node_masses[self.principal_nodes]) / np.sum(sigma.node_masses[top]))


def principal_cubes(f: GridFunction, sigma: Weight, S: SparseCollection,
                    tau: float = DEFAULT_STOPPING_FACTOR) -> PrincipalForest:
    """Top-down stopping family for the sigma-averages of ``f >= 0``."""
    if np.any(f.values < 0):
        raise ValueError("principal cubes need a nonnegative function")
    if f.depth != S.depth or sigma.depth != S.depth:
        raise ValueError("f, sigma and S must share the grid depth")
    fs = GridFunction(f.values * sigma.values).node_integrals
    avg = fs[S.nodes] / sigma.node_masses[S.nodes]
    pi = np.zeros(len(S), dtype=np.int64)
    parent = S.parent_positions
    for i in range(len(S)):
        if parent[i] < 0:
            pi[i] = S.nodes[i]
            continue
        F = pi[parent[i]]
        if avg[i] > tau * avg[S.position(F)]:
            pi[i] = S.nodes[i]
        else:
            pi[i] = F
    principal = S.nodes[pi == S.nodes]
    forest = PrincipalForest(S, principal, pi, avg, tau)
    if not forest.stopping_holds():
        raise AssertionError("principal cube stopping condition violated")
    return forest


@dataclass(frozen=True)
class DensityProfile:
    """Controls for :func:`random_sparse`.

    ``child_fraction`` caps the total length of the children of a member
    relative to the member itself; ``max_jump`` is the largest level gap
    between a member and a child; ``attempts`` is the number of candidate
    children drawn per member.
    """

    child_fraction: float = 0.5
    max_jump: int = 3
    attempts: int = 6
    include_root: bool = True


def random_sparse(depth: int, profile: DensityProfile = DensityProfile(), seed=0) -> SparseCollection:
    """Grow a sparse family top-down, deterministically per seed."""
    if not 0 < profile.child_fraction <= 0.5:
        raise ValueError("child_fraction must lie in (0, 1/2]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    members = []
    queue = []
    if profile.include_root:
        queue.append((0, 0, profile.child_fraction))
        members.append((0, 0))
    else:
        # maximal members are drawn as disjoint subintervals of a virtual root
        queue.append((0, 0, 1.0))
    while queue:
        level, index, fraction = queue.pop(0)
        budget = fraction * 2.0 ** -level
        used = 0.0
        chosen = []
        for _ in range(profile.attempts):
            jump = int(rng.integers(1, profile.max_jump + 1))
            sub = int(rng.integers(0, 1 << jump))
            if level + jump > depth:
                continue
            cand = DyadicInterval(level + jump, (index << jump) + sub)
            if used + cand.length > budget:
                continue
            if any(not cand.disjoint(c) for c in chosen):
                continue
            chosen.append(cand)
            used += cand.length
        for c in chosen:
            members.append((c.level, c.index))
            queue.append((c.level, c.index, profile.child_fraction))
    return SparseCollection(depth, members)


def _half_chain(depth: int) -> SparseCollection:
    return SparseCollection(depth, [(k, 0) for k in range(depth + 1)])


def _cantor_half(depth: int) -> SparseCollection:
    # each member keeps its two outer grandchildren: children cover exactly half
    members = []
    level_members = [(0, 0)]
    while level_members:
        members.extend(level_members)
        nxt = []
        for level, index in level_members:
            if level + 2 <= depth:
                nxt.append((level + 2, 4 * index))
                nxt.append((level + 2, 4 * index + 3))
        level_members = nxt
    return SparseCollection(depth, members)


def canonical_families(depth: int) -> dict[str, SparseCollection]:
    """Named reference families, all 1/2-sparse."""
    return {
        "singleton_root": SparseCollection(depth, [(0, 0)]),
        "half_chain": _half_chain(depth),
        "cantor_half": _cantor_half(depth),
    }
