"""Sparse collections, sparsity certificates, sparsification and principal cubes."""

import numpy as np
import pytest

from dyadlab import (
    DensityProfile,
    DyadicInterval,
    GridFunction,
    SparseCollection,
    SparsifyError,
    Weight,
    all_intervals,
    canonical_families,
    principal_cubes,
    random_sparse,
    random_weight,
    sparsify,
    verify_sparse,
)


def chain(depth, levels):
    return SparseCollection(depth, [DyadicInterval(k, 0) for k in levels])


class TestSparseCollection:
    def test_members_sorted_and_deduplicated(self):
        S = SparseCollection(3, [(2, 1), (0, 0), (2, 1), (1, 0)])
        assert S.members == (DyadicInterval(0, 0), DyadicInterval(1, 0), DyadicInterval(2, 1))
        assert DyadicInterval(2, 1) in S and DyadicInterval(2, 0) not in S
        assert S == SparseCollection.from_nodes(3, [1, 2, 5])

    def test_rejects_members_below_depth(self):
        with pytest.raises(ValueError):
            SparseCollection(2, [(3, 0)])

    def test_tree_structure(self):
        S = SparseCollection(5, [(0, 0), (2, 1), (2, 3), (5, 9), (5, 31)])
        assert S.parent(DyadicInterval(5, 9)) == DyadicInterval(2, 1)
        assert S.parent(DyadicInterval(0, 0)) is None
        assert S.children(DyadicInterval(0, 0)) == (DyadicInterval(2, 1), DyadicInterval(2, 3))
        np.testing.assert_array_equal(S.generations, [0, 1, 1, 2, 2])
        assert S.maximal == (DyadicInterval(0, 0),)
        assert len(S.inside(DyadicInterval(1, 1))) == 2

    def test_parent_matches_brute_force(self, rng):
        S = random_sparse(7, seed=rng)
        for Q in S:
            anc = [A for A in S if A != Q and A.contains(Q)]
            expected = max(anc, key=lambda A: A.level) if anc else None
            assert S.parent(Q) == expected

    def test_empty(self):
        S = SparseCollection(4)
        assert len(S) == 0 and S.maximal == ()
        assert verify_sparse(S).theta == 1.0
        assert sparsify(S) == []


class TestVerifySparse:
    def test_examples(self):
        assert verify_sparse(SparseCollection(2, [(0, 0)])).theta == 1.0
        cert = verify_sparse(SparseCollection(2, [(0, 0), (1, 0)]))
        assert cert.theta == 0.5 and cert.half_sparse
        cert = verify_sparse(SparseCollection(2, [(0, 0), (1, 0), (1, 1)]))
        assert cert.theta == 0.0 and not cert.passes(0.5)

    def test_e_measures_brute_force(self, rng):
        S = random_sparse(8, seed=rng)
        cert = verify_sparse(S)
        for Q, e in cert.as_dict().items():
            covered = np.zeros(1 << 8, dtype=bool)
            for C in S.children(Q):
                covered[C.cells(8)] = True
            inside = np.zeros(1 << 8, dtype=bool)
            inside[Q.cells(8)] = True
            assert e == pytest.approx(np.sum(inside & ~covered) / 256, abs=1e-15)

    def test_packing_from_certificate(self, rng):
        """Half-sparse families pack: the lengths inside any member sum to at most twice its length."""
        for _ in range(10):
            S = random_sparse(9, seed=rng)
            assert verify_sparse(S).half_sparse
            for R in S:
                assert float(np.sum(S.inside(R).lengths)) <= 2 * R.length + 1e-12


class TestSparsify:
    def test_dense_family_returned_unchanged(self):
        S = SparseCollection(4, [(0, 0), (3, 2)])
        assert sparsify(S, 0.75) == [S]

    def test_chain_splits_by_parity(self):
        S = chain(3, range(4))
        parts = sparsify(S, 0.75)
        assert parts == [chain(3, (0, 2)), chain(3, (1, 3))]
        for F in parts:
            for Q in F:
                kids = F.children(Q)
                assert sum(C.length for C in kids) <= Q.length / 4

    def test_partition_property(self, rng):
        for _ in range(20):
            S = random_sparse(10, seed=rng)
            parts = sparsify(S, 0.75)
            nodes = np.concatenate([F.nodes for F in parts])
            assert sorted(nodes.tolist()) == S.nodes.tolist()
            assert all(verify_sparse(F).quarter_dense for F in parts)

    def test_reports_failure(self):
        # a tiled family cannot be made dense by parity splitting
        full = SparseCollection(6, all_intervals(6))
        with pytest.raises(SparsifyError):
            sparsify(full, 0.75, max_rounds=1)

    def test_rejects_target(self):
        with pytest.raises(ValueError):
            sparsify(chain(2, range(3)), 0.5)


class TestPrincipalCubes:
    def test_constant_function_keeps_maximal_members(self, rng):
        S = random_sparse(8, seed=rng)
        forest = principal_cubes(GridFunction.constant(1.0, 8), random_weight(8, rng), S)
        assert forest.principal == S.maximal

    def test_single_cube(self, rng):
        S = SparseCollection(5, [(2, 1)])
        forest = principal_cubes(GridFunction(rng.random(32)), random_weight(5, rng), S)
        assert forest.principal == S.members
        assert forest.pi(DyadicInterval(2, 1)) == DyadicInterval(2, 1)

    def test_quadrupling_chain_is_all_principal(self):
        L = 10
        f = GridFunction.indicator(DyadicInterval(L, 0), L)
        S = chain(L, range(0, L + 1, 2))
        forest = principal_cubes(f, Weight(np.ones(1 << L)), S)
        assert forest.principal == S.members

    def test_exact_doubling_alternates(self):
        """With strict stopping at factor 2, a chain whose averages exactly double keeps every other member."""
        L = 8
        f = GridFunction.indicator(DyadicInterval(L, 0), L)
        forest = principal_cubes(f, Weight(np.ones(1 << L)), chain(L, range(L + 1)))
        assert forest.principal == chain(L, range(0, L + 1, 2)).members

    def test_pi_nested_along_chains(self, rng):
        for _ in range(10):
            S = random_sparse(7, seed=rng)
            forest = principal_cubes(GridFunction(rng.random(128)), random_weight(7, rng), S)
            assert forest.stopping_holds()
            for Q in S:
                for P in S:
                    if P.contains(Q):
                        a, b = forest.pi(Q), forest.pi(P)
                        assert a.contains(b) or b.contains(a)

    def test_carleson_constant(self, rng):
        worst = 0.0
        for _ in range(30):
            S = random_sparse(12, seed=rng)
            sigma = random_weight(12, rng)
            f = GridFunction(2.0 ** rng.uniform(-4, 4, 1 << 12))
            worst = max(worst, principal_cubes(f, sigma, S).carleson_constant(sigma))
        assert 1.0 <= worst <= 4.0


class TestGenerators:
    def test_random_sparse_deterministic(self):
        assert random_sparse(10, seed=3) == random_sparse(10, seed=3)
        assert random_sparse(10, seed=3) != random_sparse(10, seed=4)

    def test_random_sparse_half_sparse(self, rng):
        for profile in (DensityProfile(), DensityProfile(0.25, 2, 4, False), DensityProfile(0.5, 1, 3)):
            for _ in range(10):
                assert verify_sparse(random_sparse(9, profile, rng)).half_sparse

    def test_canonical_families(self):
        fams = canonical_families(8)
        assert verify_sparse(fams["singleton_root"]).theta == 1.0
        assert verify_sparse(fams["half_chain"]).theta == 0.5
        assert verify_sparse(fams["cantor_half"]).theta == 0.5
