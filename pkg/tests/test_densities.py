import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import graphons, rand_graphon
from oracles import brute_graph_prob, brute_hom_density, brute_induced_density, isomorphic, mask_edges
from graphon_ldp.core import GraphonError, GuardError, SimpleGraph, StepGraphon, graph_to_graphon
from graphon_ldp.densities import (
    ball_mass,
    exact_distribution,
    hom_density,
    hom_density_relation_check,
    induced_density,
    sbm_exact_distribution,
)
from graphon_ldp.graphs import are_isomorphic, canonical_masks, graphs_up_to_iso, iso_classes

K2, K3 = SimpleGraph.complete(2), SimpleGraph.complete(3)


class TestIsoClasses:
    @pytest.mark.parametrize("n,count", [(1, 1), (2, 2), (3, 4), (4, 11), (5, 34), (6, 156)])
    def test_class_counts(self, n, count):
        assert len(iso_classes(n)) == count

    def test_canonical_matches_brute_force_n4(self):
        canon = canonical_masks(4)
        for a in range(64):
            for b in range(a, 64, 7):
                assert (canon[a] == canon[b]) == isomorphic(4, a, b)

    def test_are_isomorphic(self):
        assert are_isomorphic(SimpleGraph.path(3), SimpleGraph.from_edges(3, [(0, 2), (2, 1)]))
        assert not are_isomorphic(SimpleGraph.path(4), SimpleGraph.from_edges(4, [(0, 1), (0, 2), (0, 3)]))

    def test_no_isolated_vertices(self):
        reps = graphs_up_to_iso(3, connected_support=True)
        assert sorted(G.num_edges for G in reps) == [2, 3]

    def test_guard(self):
        with pytest.raises(GuardError):
            canonical_masks(8)


class TestHomDensity:
    def test_examples(self):
        assert hom_density(K2, StepGraphon.constant(0.3)) == pytest.approx(0.3, abs=1e-15)
        assert hom_density(K3, graph_to_graphon(K3)) == pytest.approx(2 / 9, abs=1e-15)
        assert induced_density(K2, StepGraphon.constant(0.3)) == pytest.approx(0.3, abs=1e-15)

    def test_induced_empty_in_k2(self):
        W = graph_to_graphon(K2)
        expected = brute_induced_density([], 2, [0.5, 0.5], W.values.tolist())
        assert induced_density(SimpleGraph.empty(2), W) == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(0.5)

    @given(graphons(max_parts=4), st.integers(0, 63))
    def test_against_brute_force(self, W, mask):
        F = SimpleGraph.from_mask(4, mask)
        P = W.values.tolist()
        w = W.measures.tolist()
        assert hom_density(F, W) == pytest.approx(brute_hom_density(F.edges, 4, w, P), abs=1e-12)
        assert induced_density(F, W) == pytest.approx(brute_induced_density(F.edges, 4, w, P), abs=1e-12)

    @given(graphons(max_parts=4))
    def test_range_and_induced_total(self, W):
        assert 0 <= hom_density(K3, W) <= 1
        total = math.fsum(induced_density(SimpleGraph.from_mask(4, m), W) for m in range(64))
        assert total == pytest.approx(1.0, abs=1e-12)

    @given(graphons(max_parts=4), st.integers(0, 63))
    def test_relation_check(self, W, mask):
        assert hom_density_relation_check(SimpleGraph.from_mask(4, mask), W)

    def test_relation_check_named_cases(self):
        W = graph_to_graphon(SimpleGraph.cycle(5))
        assert hom_density_relation_check(K3, W)
        assert hom_density_relation_check(SimpleGraph.empty(3), W)

    @given(graphons(max_parts=3))
    def test_disjoint_union_is_multiplicative(self, W):
        F1, F2 = SimpleGraph.path(3), K2
        assert hom_density(F1.disjoint_union(F2), W) == pytest.approx(hom_density(F1, W) * hom_density(F2, W), abs=1e-14)


class TestExactDistribution:
    def test_half_n3(self):
        d = exact_distribution(StepGraphon.constant(0.5), 3)
        assert np.allclose(d.probs, 0.125, atol=1e-15)

    def test_constant_one(self):
        d = exact_distribution(StepGraphon.constant(1.0), 4)
        assert d[SimpleGraph.complete(4)] == 1.0

    def test_guard(self):
        with pytest.raises(GuardError):
            exact_distribution(StepGraphon.constant(0.5), 7)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_against_label_sum_oracle(self, rng, n):
        W = rand_graphon(rng, 3)
        d = exact_distribution(W, n)
        P, w = W.values.tolist(), W.measures.tolist()
        for mask in range(1 << (n * (n - 1) // 2)):
            assert d[mask] == pytest.approx(brute_graph_prob(n, mask, w, P), abs=1e-13)

    @given(graphons(max_parts=3))
    def test_edge_marginals_and_isomorphism_invariance(self, W):
        d = exact_distribution(W, 4)
        assert abs(math.fsum(d.probs) - 1) <= 1e-9
        marg = d.edge_marginals()
        assert np.allclose(marg, hom_density(K2, W), atol=1e-10)
        for members in iso_classes(4).values():
            assert np.ptp(d.probs[members]) <= 1e-13

    def test_csv(self):
        text = exact_distribution(StepGraphon.constant(0.5), 2).to_csv()
        assert text.splitlines() == ["mask,probability", "0,0.5", "1,0.5"]


class TestSBMDistribution:
    def test_single_block_matches_graphon(self):
        a = sbm_exact_distribution([4], [[0.3]])
        b = exact_distribution(StepGraphon.constant(0.3), 4)
        assert np.allclose(a.probs, b.probs, atol=1e-15)

    def test_all_ones(self):
        d = sbm_exact_distribution([2, 2], np.ones((2, 2)))
        assert d[SimpleGraph.complete(4)] == 1.0

    def test_single_pair(self):
        d = sbm_exact_distribution([1, 1], [[0, 0.5], [0.5, 0]])
        assert d[1] == 0.5 and d[0] == 0.5

    def test_guard(self):
        with pytest.raises(GuardError):
            sbm_exact_distribution([4, 3], np.full((2, 2), 0.5))
        with pytest.raises(GraphonError):
            sbm_exact_distribution([2, 2], [[0.5]])

    def test_graphon_law_is_mixture_of_sbm_laws(self):
        """G(n, W) given the part labels is G(counts, p) after sorting vertices by label."""
        from itertools import product as labelings

        W = StepGraphon([0.4, 0.6], [[0.2, 0.7], [0.7, 0.9]])
        n = 4
        mix = np.zeros(64)
        for labels in labelings(range(2), repeat=n):
            weight = np.prod(W.measures[list(labels)])
            order = np.argsort(labels, kind="stable")
            sbm = sbm_exact_distribution(np.bincount(labels, minlength=2), W.values)
            for mask in range(64):
                G = SimpleGraph.from_mask(n, mask)
                mix[mask] += weight * sbm[SimpleGraph(n, G.adj[np.ix_(order, order)])]
        assert np.allclose(mix, exact_distribution(W, n).probs, atol=1e-14)


class TestBallMass:
    def test_radius_one(self):
        d = exact_distribution(StepGraphon.constant(0.3), 3)
        assert ball_mass(d, graph_to_graphon(K3), 1.0) == 1.0

    def test_radius_zero_collects_isomorphic_copies(self):
        d = exact_distribution(StepGraphon.constant(0.3), 3)
        P3 = SimpleGraph.path(3)
        expected = math.fsum(d[m] for m in range(8) if isomorphic(3, m, P3.mask()))
        assert ball_mass(d, graph_to_graphon(P3), 0.0) == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(3 * 0.3**2 * 0.7, abs=1e-15)

    def test_empty_ball(self):
        d = exact_distribution(StepGraphon.constant(1.0), 3)
        assert ball_mass(d, graph_to_graphon(SimpleGraph.empty(3)), 0.1) == 0.0


def test_mask_edges_helper_consistency():
    G = SimpleGraph.from_mask(4, 0b101001)
    assert sorted(G.edges) == sorted(mask_edges(4, 0b101001))
