import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import graphons, rand_graphon, sym
from oracles import grid_J_2x2, hp
from oracles import plan_objective as oracle_objective
from graphon_ldp.core import ColoredStepGraphon, GraphonError, GuardError, SimpleGraph, StepGraphon, graph_to_graphon, reweight
from graphon_ldp.metrics import colored_cut_norm, cut_norm_diff
from graphon_ldp.rates import (
    J_alpha_p,
    I_k_p,
    I_k_p_decomposed,
    I_p,
    K_W_step,
    R_p,
    RateResult,
    SimplexVector,
    discrete_rel_entropy,
    forb_consistent,
    gamma_forget,
    gamma_patch,
    h_matrix,
    plan_objective,
    rel_entropy,
    rn_member,
)


class TestRelEntropy:
    @pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
    def test_zero_at_p(self, p):
        assert rel_entropy(p, p) == 0.0

    def test_examples(self):
        assert rel_entropy(0.0, 0.5) == pytest.approx(math.log(2), abs=1e-15)
        assert rel_entropy(0.1, 0.0) == math.inf
        assert rel_entropy(0.0, 1.0) == math.inf

    def test_domain(self):
        with pytest.raises(GraphonError):
            rel_entropy(1.1, 0.5)
        with pytest.raises(GraphonError):
            rel_entropy(0.5, float("nan"))

    def test_pinsker_on_grid(self):
        g = np.arange(0, 1001) / 1000
        H = h_matrix(g[:, None], g[None, :])
        assert np.all(H >= 2 * (g[:, None] - g[None, :]) ** 2 - 1e-12)
        assert np.all(H[~np.eye(g.size, dtype=bool)] > 0)

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_matches_oracle(self, r, p):
        expected = hp(r, p)
        got = rel_entropy(r, p)
        if math.isinf(expected):
            assert got == math.inf
        else:
            assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)


class TestIp:
    def test_examples(self):
        assert I_p(StepGraphon.constant(0.3), 0.3) == 0.0
        assert I_p(StepGraphon.constant(0.0), 0.5) == pytest.approx(0.5 * math.log(2), abs=1e-15)
        assert I_p(graph_to_graphon(SimpleGraph.complete(2)), 0.0) == math.inf

    def test_null_cells_do_not_count(self):
        W = StepGraphon([1.0, 0.0], [[0.0, 0.4], [0.4, 0.9]])
        assert I_p(W, 0.0) == 0.0

    @given(graphons(max_parts=4), st.floats(0.01, 0.99))
    def test_permutation_invariance(self, U, p):
        perm = np.random.default_rng(U.m).permutation(U.m)
        assert I_p(U.permute(perm), p) == pytest.approx(I_p(U, p), abs=1e-12)


def colored(rng, m, k):
    return ColoredStepGraphon(rand_graphon(rng, m), rng.integers(0, k, m), k)


class TestColoredRates:
    def test_single_color_patch_is_identity(self, rng):
        X = colored(rng, 3, 1)
        assert gamma_patch(X, 0, 0, [[0.2]]).allclose(X.graphon, 0)
        assert gamma_forget(X) is X.graphon

    def test_patch_overwrites_other_cells(self):
        W = StepGraphon([0.5, 0.5], [[0.1, 0.2], [0.2, 0.3]])
        X = ColoredStepGraphon(W, [0, 0], 2)
        p = [[0.4, 0.6], [0.6, 0.8]]
        assert np.all(gamma_patch(X, 0, 1, p).values == 0.6)

    def test_patch_index_error(self, rng):
        with pytest.raises(GraphonError):
            gamma_patch(colored(rng, 2, 2), 0, 2, np.full((2, 2), 0.5))

    def test_patch_differs_only_outside_block(self, rng):
        for _ in range(50):
            k = int(rng.integers(1, 4))
            X = colored(rng, int(rng.integers(1, 6)), k)
            p = sym(rng, k)
            for i in range(k):
                for j in range(k):
                    P = gamma_patch(X, i, j, p)
                    ci, cj = X.colors[:, None], X.colors[None, :]
                    inside = ((ci == i) & (cj == j)) | ((ci == j) & (cj == i))
                    assert np.array_equal(P.values[inside], X.values[inside])
                    assert np.all(P.values[~inside] == p[i, j])

    def test_zero_when_values_match(self):
        p = np.array([[0.2, 0.7], [0.7, 0.4]])
        colors = np.array([0, 1, 1])
        W = StepGraphon([0.2, 0.3, 0.5], p[np.ix_(colors, colors)])
        assert I_k_p(ColoredStepGraphon(W, colors, 2), p) == 0.0

    def test_single_color_is_I_p(self, rng):
        X = colored(rng, 4, 1)
        assert I_k_p(X, [[0.35]]) == pytest.approx(I_p(X.graphon, 0.35), abs=1e-15)

    def test_decomposition_on_200_random(self, rng):
        for _ in range(200):
            k = int(rng.integers(1, 4))
            X = colored(rng, int(rng.integers(1, 6)), k)
            p = 0.05 + 0.9 * sym(rng, k)
            assert abs(I_k_p_decomposed(X, p) - I_k_p(X, p)) <= 1e-12

    def test_shape_mismatch(self, rng):
        with pytest.raises(GraphonError):
            I_k_p(colored(rng, 3, 2), [[0.5]])

    def test_lipschitz_maps(self, rng):
        for _ in range(100):
            k = int(rng.integers(1, 3))
            m = int(rng.integers(1, 5))
            w = rng.dirichlet(np.ones(m))
            X = ColoredStepGraphon(StepGraphon(w, sym(rng, m)), rng.integers(0, k, m), k)
            Y = ColoredStepGraphon(StepGraphon(w, sym(rng, m)), rng.integers(0, k, m), k)
            d = colored_cut_norm(X, Y)
            p = sym(rng, k)
            assert cut_norm_diff(gamma_forget(X), gamma_forget(Y)) <= d + 1e-12
            for i in range(k):
                for j in range(i, k):
                    assert cut_norm_diff(gamma_patch(X, i, j, p), gamma_patch(Y, i, j, p)) <= d + 1e-12


def two_by_two(rng):
    w = rng.dirichlet(np.ones(2))
    U = StepGraphon(w, 0.05 + 0.9 * sym(rng, 2))
    alpha = rng.dirichlet(np.ones(2))
    p = 0.05 + 0.9 * sym(rng, 2)
    return U, alpha, p


class TestJ:
    def test_zero_on_matching_instance(self, rng):
        for _ in range(20):
            k = int(rng.integers(1, 4))
            alpha = rng.dirichlet(np.ones(k))
            p = sym(rng, k)
            U = StepGraphon(alpha, p)
            assert J_alpha_p(U, alpha, p).value <= 1e-12

    def test_single_row_is_I_p(self, rng):
        U = rand_graphon(rng, 4)
        r = J_alpha_p(U, [2.0], [[0.3]])
        assert r.value == pytest.approx(I_p(U, 0.3), abs=1e-15)

    @pytest.mark.parametrize("method", ["exact", "heuristic"])
    def test_matches_grid_oracle(self, rng, method):
        for _ in range(5):
            U, alpha, p = two_by_two(rng)
            grid = grid_J_2x2(alpha, U.measures, p, U.values, step=1e-5)
            val = J_alpha_p(U, alpha, p, method=method).value
            assert val <= grid + 1e-9
            assert val >= grid - 1e-6

    def test_witness_reproduces_value(self, rng):
        for _ in range(10):
            U = rand_graphon(rng, 3)
            alpha = rng.dirichlet(np.ones(3))
            p = 0.05 + 0.9 * sym(rng, 3)
            r = J_alpha_p(U, alpha, p)
            C = np.array(r.witness["plan"])
            assert np.allclose(C.sum(1), alpha, atol=1e-9)
            assert np.allclose(C.sum(0), U.measures, atol=1e-9)
            assert plan_objective(U, p, C) == pytest.approx(r.value, abs=1e-9)
            assert oracle_objective(C.tolist(), p.tolist(), U.values.tolist()) == pytest.approx(r.value, abs=1e-9)

    def test_exact_below_heuristic_and_restarts_monotone(self, rng):
        for _ in range(8):
            U = rand_graphon(rng, 3)
            alpha = rng.dirichlet(np.ones(3))
            p = 0.05 + 0.9 * sym(rng, 3)
            exact = J_alpha_p(U, alpha, p, method="exact").value
            prev = math.inf
            for restarts in (1, 2, 4, 8):
                h = J_alpha_p(U, alpha, p, method="heuristic", restarts=restarts, seed=5)
                assert h.gap == "unknown" and h.method == "heuristic"
                assert exact <= h.value + 1e-12
                assert h.value <= prev
                prev = h.value

    def test_infeasible(self):
        # a {0,1} graphon against a reference with no zero entries forces +inf
        U = graph_to_graphon(SimpleGraph.complete(2))
        r = J_alpha_p(U, [0.5, 0.5], [[0.0, 0.0], [0.0, 0.0]])
        assert r.value == math.inf and r.witness["plan"] == "infeasible"

    def test_infinite_cells_are_constraints(self):
        # color class 0 must avoid the 1-valued part pair, which is possible
        U = StepGraphon([0.5, 0.5], [[0.0, 0.0], [0.0, 1.0]])
        p = [[0.0, 0.0], [0.0, 1.0]]
        r = J_alpha_p(U, [0.5, 0.5], p)
        assert r.value == 0.0

    def test_permutation_invariance(self, rng):
        for _ in range(10):
            U = rand_graphon(rng, 3)
            alpha = rng.dirichlet(np.ones(2))
            p = 0.05 + 0.9 * sym(rng, 2)
            perm = rng.permutation(3)
            a = J_alpha_p(U, alpha, p).value
            b = J_alpha_p(U.permute(perm), alpha, p).value
            c = J_alpha_p(U, alpha[::-1], p[::-1, ::-1]).value
            assert b == pytest.approx(a, abs=1e-12)
            assert c == pytest.approx(a, abs=1e-12)

    def test_twin_columns_expand_to_full_plan(self):
        U = StepGraphon([0.2, 0.3, 0.5], [[0.1, 0.1, 0.6], [0.1, 0.1, 0.6], [0.6, 0.6, 0.9]])
        r = J_alpha_p(U, [0.5, 0.5], [[0.1, 0.6], [0.6, 0.9]])
        C = np.array(r.witness["plan"])
        assert C.shape == (2, 3)
        assert r.value <= 1e-12
        assert np.allclose(C.sum(0), U.measures)

    def test_bad_method(self):
        with pytest.raises(GraphonError):
            J_alpha_p(StepGraphon.constant(0.5), [0.5, 0.5], np.full((2, 2), 0.5), method="grid")

    def test_contraction_of_class_sizes(self, rng):
        """Rescaling class a by kappa_a / gamma_a inside each part gives a plan for kappa."""
        for _ in range(20):
            U = rand_graphon(rng, 3)
            gamma = rng.dirichlet(np.ones(2))
            eps = 0.1
            kappa = gamma * (1 + eps * rng.random(2))
            kappa /= kappa.sum()
            if np.any(kappa > (1 + eps) * gamma):
                continue
            p = 0.05 + 0.9 * sym(rng, 2)
            r = J_alpha_p(U, gamma, p, method="exact")
            C = np.array(r.witness["plan"])
            # V has one part per cell (a, c) of the plan, measure C[a, c] kappa_a / gamma_a, value u_c d
            scale = (kappa / gamma)[:, None]
            cols = np.repeat(np.arange(2), 3), np.tile(np.arange(3), 2)
            meas = (C * scale).ravel()
            V = StepGraphon(meas / meas.sum(), U.values[np.ix_(cols[1], cols[1])])
            jv = J_alpha_p(V, kappa, p, method="exact").value
            assert jv <= (1 + 3 * eps) * r.value + 1e-9


class TestR:
    def test_zero_on_matching(self, rng):
        for _ in range(20):
            k = int(rng.integers(1, 4))
            w = rng.dirichlet(np.ones(k))
            p = sym(rng, k)
            res = R_p(StepGraphon(w, p), p)
            assert res.value <= 1e-12
            assert np.allclose(res.witness["alpha"], w, atol=1e-9)

    def test_single_row_is_I_p(self, rng):
        for _ in range(100):
            U = rand_graphon(rng, int(rng.integers(1, 6)))
            p = float(rng.random())
            assert abs(R_p(U, [[p]]).value - I_p(U, p)) <= 1e-9

    def test_below_J_for_probed_alpha(self, rng):
        for _ in range(10):
            U = rand_graphon(rng, 3)
            p = 0.05 + 0.9 * sym(rng, 2)
            r = R_p(U, p).value
            for t in np.linspace(0, 1, 9):
                assert r <= J_alpha_p(U, [t, 1 - t] if 0 < t < 1 else [t + 1e-9, 1 - t + 1e-9], p).value + 1e-12

    def test_witness_alpha_attains(self, rng):
        U = rand_graphon(rng, 3)
        p = 0.05 + 0.9 * sym(rng, 2)
        res = R_p(U, p)
        assert J_alpha_p(U, res.witness["alpha"], p).value == pytest.approx(res.value, abs=1e-9)

    def test_heuristic_never_below_exact(self, rng):
        for _ in range(5):
            U = rand_graphon(rng, 4)
            p = 0.05 + 0.9 * sym(rng, 2)
            assert R_p(U, p, method="exact").value <= R_p(U, p, method="heuristic", restarts=3).value + 1e-12


class TestK:
    def test_identity(self, rng):
        W = rand_graphon(rng, 3)
        r = K_W_step(W, W)
        assert r.value == 0.0 and rn_member(W, W)

    def test_reweighted_example(self):
        W = StepGraphon([0.5, 0.5], [[0, 1], [1, 0]])
        U = StepGraphon([0.25, 0.75], [[0, 1], [1, 0]])
        expected = 0.25 * math.log(0.5) + 0.75 * math.log(1.5)
        assert K_W_step(W, U).value == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(0.130812, abs=1e-6)
        assert rn_member(W, reweight(W, [0.1, 0.9]))

    def test_foreign_value(self):
        W = StepGraphon([0.5, 0.5], [[0, 1], [1, 0]])
        U = StepGraphon([0.5, 0.5], [[0, 0.5], [0.5, 0]])
        assert K_W_step(W, U).value == math.inf
        assert not rn_member(W, U)

    def test_part_count_mismatch(self):
        assert K_W_step(StepGraphon.constant(0.3), StepGraphon([0.5, 0.5], [[0.3, 0.1], [0.1, 0.3]])).value == math.inf

    def test_sigma_witness(self):
        W = StepGraphon([0.4, 0.6], [[0.1, 0.5], [0.5, 0.9]])
        U = StepGraphon([0.7, 0.3], [[0.9, 0.5], [0.5, 0.1]])
        r = K_W_step(W, U)
        assert r.witness["sigma"] == [1, 0]
        assert r.value == pytest.approx(0.3 * math.log(0.3 / 0.4) + 0.7 * math.log(0.7 / 0.6), abs=1e-15)

    def test_permutation_invariance(self, rng):
        W = rand_graphon(rng, 4)
        U = reweight(W, rng.dirichlet(np.ones(4)))
        perm = rng.permutation(4)
        assert K_W_step(W, U.permute(perm)).value == pytest.approx(K_W_step(W, U).value, abs=1e-12)


class TestDiscrete:
    def test_examples(self):
        assert discrete_rel_entropy([3, 7], 10, [0.3, 0.7]) == pytest.approx(0.0, abs=1e-15)
        expected = 0.5 * math.log(0.5 / 0.3) + 0.5 * math.log(0.5 / 0.7)
        assert discrete_rel_entropy([5, 5], 10, [0.3, 0.7]) == pytest.approx(expected, abs=1e-15)
        assert discrete_rel_entropy([1, 1], 2, [1.0, 0.0]) == math.inf

    def test_errors(self):
        with pytest.raises(GraphonError):
            discrete_rel_entropy([5, 4], 10, [0.5, 0.5])
        with pytest.raises(GraphonError):
            discrete_rel_entropy([5, 5], 10, [0.5, 0.6])


class TestForb:
    def test_self(self, rng):
        W = rand_graphon(rng, 3)
        assert forb_consistent(W, W, 3)

    def test_positive_diagonal_admits_everything(self, rng):
        W = StepGraphon([0.5, 0.5], [[0.3, 0.0], [0.0, 0.0]])
        for _ in range(10):
            assert forb_consistent(W, rand_graphon(rng, 3), 3)

    def test_bipartite_excludes_triangle(self):
        W = StepGraphon([0.5, 0.5], [[0, 1], [1, 0]])
        assert not forb_consistent(W, graph_to_graphon(SimpleGraph.complete(3)), 3)
        assert forb_consistent(W, graph_to_graphon(SimpleGraph.complete(3)), 2)

    def test_guard(self):
        W = StepGraphon.constant(0.5)
        with pytest.raises(GuardError):
            forb_consistent(W, W, 5)


def test_rate_result_json():
    r = RateResult(math.inf, {"plan": "infeasible"}, "heuristic", "unknown")
    assert r.to_json() == {"value": "inf", "method": "heuristic", "gap": "unknown", "witness": {"plan": "infeasible"}}
    with pytest.raises(GraphonError):
        RateResult(-0.1)
    assert SimplexVector((2.0, 2.0)).normalized.tolist() == [0.5, 0.5]
    with pytest.raises(GraphonError):
        SimplexVector((0.0, 0.0))
