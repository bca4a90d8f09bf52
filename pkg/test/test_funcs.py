#!/usr/bin/python3
# -*- coding: utf-8 -*-
# vim: set ts=4
#
# Copyright 2024-present proxkit contributors
#
# SPDX-License-Identifier: MIT

import itertools
import math

import numpy as np
import pytest

from proxkit.exceptions import DomainError, ShapeMismatchError
from proxkit.fao import compose, dct_op, identity_op, idft_op, matrix_op, select_op, sigmoid_op
from proxkit.funcs import (
    Composition,
    affine_addition,
    affine_set,
    ball_l0,
    ball_l2,
    box,
    convex_conjugate,
    cross_entropy,
    halfspace_ge,
    halfspace_le,
    ind_zero,
    l0_pseudo_norm,
    l1_norm,
    l2_norm,
    least_squares,
    least_squares_quadratic,
    linear,
    mixed_l21_norm,
    moreau_envelope,
    nuclear_norm,
    postcompose,
    precompose_tight_frame,
    quadratic,
    rank_ball,
    regularize,
    separable_sum,
    sqr_norm,
    translate,
    zero,
)
from proxkit.tensor import COMPLEX, ProductSpace, SignalTuple, Space, inner, norm2

from test.oracles import finite_difference_gradient, prox_margin, relative_error

_rng = np.random.default_rng(2024)

# (id, function, argument space)
CATALOG = [
    ("zero", zero(), Space(5)),
    ("l1", l1_norm(0.7), Space(6)),
    ("l1-complex", l1_norm(0.5), Space(4, COMPLEX)),
    ("l0", l0_pseudo_norm(0.3), Space(6)),
    ("l2", l2_norm(1.5), Space(5)),
    ("nuclear", nuclear_norm(0.8), Space((3, 2))),
    ("lsq-quadratic", least_squares_quadratic(_rng.standard_normal((4, 3)), _rng.standard_normal(4)), Space(3)),
    ("l21", mixed_l21_norm(0.6), Space((4, 2))),
    ("ball-l0", ball_l0(2), Space(6)),
    ("ball-l2", ball_l2(0.9), Space(5)),
    ("box", box(-0.5, np.array([0.2, 0.4, 1.0, 2.0])), Space(4)),
    ("halfspace-ge", halfspace_ge(0.3), Space(5)),
    ("halfspace-le", halfspace_le(0.3), Space(5)),
    ("rank-ball", rank_ball(1), Space((3, 3))),
    ("affine-set", affine_set(_rng.standard_normal((2, 5)), _rng.standard_normal(2)), Space(5)),
    ("quadratic", quadratic(2.0, _rng.standard_normal(4), 1.0), Space(4)),
]

WRAPPERS = [
    ("separable-sum-tuple", separable_sum([l1_norm(0.5), rank_ball(1)]), ProductSpace([Space(3), Space((2, 2))])),
    ("separable-sum-flat", separable_sum([l1_norm(0.5), ball_l2(0.3)], [[0, 2], [1, 4]]), Space(5)),
    ("translate", translate(l1_norm(0.4), _rng.standard_normal(5)), Space(5)),
    ("affine-addition", affine_addition(l2_norm(0.5), _rng.standard_normal(4)), Space(4)),
    ("postcompose", postcompose(l1_norm(0.3), 2.5, -1.0), Space(5)),
    ("precompose-dct", precompose_tight_frame(l1_norm(0.5), dct_op(6)), Space(6)),
    ("precompose-select", precompose_tight_frame(l2_norm(0.5), select_op([0, 3], 5)), Space(5)),
    ("regularize", regularize(l1_norm(0.5), 1.5, _rng.standard_normal(5)), Space(5)),
    ("conjugate-ball-l2", convex_conjugate(ball_l2(0.7)), Space(5)),
    ("conjugate-l1", convex_conjugate(l1_norm(0.7)), Space(4)),
    ("conjugate-quadratic", convex_conjugate(sqr_norm(2.0)), Space(4)),
]

ALL_PROX = CATALOG + WRAPPERS


def _check_prox_margins(g, space, inputs, trials, seed):
    rng = np.random.default_rng(seed)
    for _ in range(inputs):
        x = 2.0 * space.random(rng)
        gamma = rng.uniform(0.1, 2.0)
        assert prox_margin(g, x, gamma, rng, trials) >= -1e-9


@pytest.mark.parametrize("name,g,space", ALL_PROX, ids=[p[0] for p in ALL_PROX])
def test_prox_optimality(name, g, space):
    _check_prox_margins(g, space, inputs=5, trials=300, seed=1)


@pytest.mark.slow
@pytest.mark.parametrize("name,g,space", ALL_PROX, ids=[p[0] for p in ALL_PROX])
def test_prox_optimality_full(name, g, space):
    _check_prox_margins(g, space, inputs=50, trials=1000, seed=2)


@pytest.mark.parametrize(
    "name,g,space",
    [p for p in ALL_PROX if p[1].is_convex],
    ids=[p[0] for p in ALL_PROX if p[1].is_convex],
)
def test_firm_nonexpansiveness(name, g, space):
    rng = np.random.default_rng(3)
    for _ in range(100):
        x, y = 2.0 * space.random(rng), 2.0 * space.random(rng)
        dp = g.prox(x, 0.7) - g.prox(y, 0.7)
        assert norm2(dp) ** 2 <= inner(dp, x - y) + 1e-10 * (1 + norm2(x - y) ** 2)


@pytest.mark.parametrize(
    "h", [l1_norm(0.8), l2_norm(1.3), box(-0.4, 0.6)], ids=["l1", "l2", "box"]
)
def test_moreau_decomposition(h):
    rng = np.random.default_rng(4)
    h_star = convex_conjugate(h)
    for _ in range(100):
        x = 3.0 * rng.standard_normal(6)
        gamma = rng.uniform(0.1, 3.0)
        recomposed = h_star.prox(x, gamma) + gamma * h.prox(x / gamma, 1.0 / gamma)
        assert norm2(recomposed - x) <= 1e-12 * (1 + norm2(x))


class TestCatalog:
    """Closed-form proximal mappings"""

    def test_l1_shrink(self):
        np.testing.assert_allclose(l1_norm(1.0).prox(np.array([2.0, -0.5, 1.0]), 1.0), [1, 0, 0])

    def test_l1_zero_input(self):
        assert norm2(l1_norm(2.0).prox(np.zeros(3), 1.0)) == 0.0

    def test_l1_zero_threshold(self):
        x = np.array([0.3, -2.0])
        np.testing.assert_array_equal(l1_norm(0.0).prox(x, 1.0), x)

    def test_l1_complex_keeps_phase(self):
        x = np.array([3.0 * np.exp(0.7j), 0.2j])
        z = l1_norm(1.0).prox(x, 1.0)
        assert abs(z[0]) == pytest.approx(2.0)
        assert np.angle(z[0]) == pytest.approx(0.7)
        assert z[1] == 0

    def test_negative_scale(self):
        for make in (l1_norm, l0_pseudo_norm, l2_norm, nuclear_norm, mixed_l21_norm):
            with pytest.raises(DomainError):
                make(-1.0)

    def test_nonpositive_gamma(self):
        with pytest.raises(DomainError):
            l1_norm().prox(np.ones(2), 0.0)

    def test_l0_hard_threshold(self):
        x = np.array([2.0, -0.5, 1.0])
        np.testing.assert_array_equal(l0_pseudo_norm(1.0).prox(x, 0.5), [2.0, 0.0, 0.0])

    def test_l0_keeps_large_entries(self):
        x = np.array([3.0, -4.0])
        np.testing.assert_array_equal(l0_pseudo_norm(1.0).prox(x, 0.5), x)

    def test_l0_support_enumeration(self):
        rng = np.random.default_rng(5)
        g, gamma = l0_pseudo_norm(0.4), 0.8
        for _ in range(20):
            x = rng.standard_normal(6)
            best = min(
                g.lam * len(S) + sum(x[i] ** 2 for i in range(6) if i not in S) / (2 * gamma)
                for r in range(7)
                for S in itertools.combinations(range(6), r)
            )
            z = g.prox(x, gamma)
            assert g(z) + norm2(z - x) ** 2 / (2 * gamma) == pytest.approx(best)

    def test_l2_block_threshold(self):
        assert norm2(l2_norm(5.0).prox(np.array([3.0, 4.0]), 1.0)) == 0.0
        np.testing.assert_allclose(l2_norm(1.0).prox(np.array([3.0, 4.0]), 1.0), [2.4, 3.2])

    def test_nuclear_diagonal(self):
        z = nuclear_norm(2.0).prox(np.diag([3.0, 1.0]), 1.0)
        np.testing.assert_allclose(z, np.diag([1.0, 0.0]), atol=1e-12)

    def test_least_squares_quadratic(self):
        x = np.array([1.0, -2.0, 4.0])
        np.testing.assert_allclose(
            least_squares_quadratic(np.eye(3), np.zeros(3)).prox(x, 0.5), x / 1.5
        )
        np.testing.assert_allclose(least_squares_quadratic(np.eye(3), x).prox(x, 2.0), x)
        z = least_squares_quadratic(np.eye(3), np.zeros(3)).prox(x, 1e-8)
        assert norm2(z - x) <= 1e-7 * norm2(x)

    def test_l21_single_row(self):
        x = np.array([[3.0, 4.0]])
        np.testing.assert_allclose(
            mixed_l21_norm(1.0).prox(x, 1.0)[0], l2_norm(1.0).prox(x[0], 1.0)
        )

    def test_l21_rows(self):
        x = np.array([[3.0, 4.0], [0.1, 0.0]])
        np.testing.assert_allclose(mixed_l21_norm(1.0).prox(x, 1.0), [[2.4, 3.2], [0.0, 0.0]])

    def test_ball_l0_tie_break(self):
        x = np.array([5.7, -2.4, 1.2, 1.2, 1.2])
        for _ in range(5):
            np.testing.assert_array_equal(ball_l0(3).prox(x, 1.0), [5.7, -2.4, 1.2, 0.0, 0.0])

    def test_ball_l0_edges(self):
        x = np.array([1.0, -2.0, 3.0])
        np.testing.assert_array_equal(ball_l0(5).prox(x, 1.0), x)
        np.testing.assert_array_equal(ball_l0(0).prox(x, 1.0), np.zeros(3))

    def test_ball_l2(self):
        np.testing.assert_allclose(ball_l2(1.0).prox(np.array([3.0, 4.0]), 1.0), [0.6, 0.8])
        x = np.array([0.1, 0.2])
        np.testing.assert_array_equal(ball_l2(1.0).prox(x, 1.0), x)
        assert norm2(ball_l2(1.0).prox(np.zeros(2), 1.0)) == 0.0
        assert norm2(ind_zero().prox(np.ones(3), 1.0)) == 0.0

    def test_box(self):
        np.testing.assert_array_equal(box(0.0, 1.0).prox(np.array([-2.0, 3.0]), 1.0), [0.0, 1.0])
        np.testing.assert_array_equal(box(0.5, 0.5).prox(np.array([-2.0, 3.0]), 1.0), [0.5, 0.5])
        with pytest.raises(DomainError):
            box(1.0, 0.0)

    def test_halfspaces(self):
        np.testing.assert_array_equal(halfspace_ge(1.0).prox(np.zeros(3), 1.0), np.ones(3))
        x = np.array([-1.0, 2.0])
        np.testing.assert_array_equal(halfspace_ge(0.0).prox(x, 1.0), np.maximum(x, 0))
        np.testing.assert_array_equal(halfspace_le(1.0).prox(np.zeros(2), 1.0), [-1.0, -1.0])
        assert halfspace_le(1.0)(np.array([-3.0])) == 0.0
        assert halfspace_le(1.0)(np.array([0.0])) == math.inf

    def test_rank_ball(self):
        z = rank_ball(1).prox(np.diag([3.0, 1.0]), 1.0)
        np.testing.assert_allclose(z, np.diag([3.0, 0.0]), atol=1e-12)
        x = np.outer([1.0, 2.0], [3.0, -1.0, 0.5])
        np.testing.assert_allclose(rank_ball(1).prox(x, 1.0), x, atol=1e-12)
        np.testing.assert_array_equal(rank_ball(2).prox(np.eye(2), 1.0), np.eye(2))

    def test_affine_set(self):
        np.testing.assert_allclose(
            affine_set(np.array([[1.0, 1.0]]), np.array([2.0])).prox(np.zeros(2), 1.0), [1.0, 1.0]
        )
        b = np.array([1.0, -3.0])
        np.testing.assert_allclose(affine_set(np.eye(2), b).prox(np.array([5.0, 5.0]), 1.0), b)
        np.testing.assert_allclose(affine_set(np.eye(2), b).prox(b, 1.0), b)

    def test_indicator_values(self):
        assert ball_l0(1)(np.array([0.0, 2.0])) == 0.0
        assert ball_l0(1)(np.array([1.0, 2.0])) == math.inf
        assert rank_ball(1)(np.eye(2)) == math.inf


class TestCalculus:
    """Calculus rules against the functions they build"""

    def test_separable_sum_of_l1_blocks(self):
        x = np.random.default_rng(6).standard_normal(6)
        g = separable_sum([l1_norm(0.4), l1_norm(0.4)], [np.arange(3), np.arange(3, 6)])
        np.testing.assert_allclose(g.prox(x, 1.3), l1_norm(0.4).prox(x, 1.3))
        assert g(x) == pytest.approx(l1_norm(0.4)(x))

    def test_separable_sum_robust_pca(self):
        rng = np.random.default_rng(7)
        g = separable_sum([l1_norm(0.1), rank_ball(1)])
        x = SignalTuple([rng.standard_normal((4, 3)), rng.standard_normal((4, 3))])
        z = g.prox(x, 1.0)
        np.testing.assert_allclose(z[0], l1_norm(0.1).prox(x[0], 1.0))
        assert np.linalg.matrix_rank(z[1]) == 1

    def test_separable_sum_overlap(self):
        with pytest.raises(DomainError):
            separable_sum([l1_norm(), l1_norm()], [[0, 1], [1, 2]])

    def test_translate(self):
        rng = np.random.default_rng(8)
        x, b = rng.standard_normal(4), rng.standard_normal(4)
        np.testing.assert_array_equal(translate(l1_norm(), np.zeros(4)).prox(x, 1.0), l1_norm().prox(x, 1.0))
        twice = translate(translate(l1_norm(), b), b)
        np.testing.assert_allclose(twice.prox(x, 0.5), translate(l1_norm(), 2 * b).prox(x, 0.5))

    def test_affine_addition(self):
        x, a = np.array([1.0, -1.0]), np.array([0.5, 2.0])
        np.testing.assert_array_equal(affine_addition(zero(), a).prox(x, 2.0), x - 2.0 * a)
        np.testing.assert_array_equal(affine_addition(l1_norm(), np.zeros(2)).prox(x, 1.0), l1_norm().prox(x, 1.0))

    def test_postcompose(self):
        x = np.random.default_rng(9).standard_normal(5)
        np.testing.assert_allclose(postcompose(l1_norm(0.5), 3.0).prox(x, 1.0), l1_norm(1.5).prox(x, 1.0))
        np.testing.assert_array_equal(postcompose(l1_norm(0.5)).prox(x, 1.0), l1_norm(0.5).prox(x, 1.0))
        with pytest.raises(DomainError):
            postcompose(l1_norm(), 0.0)

    def test_precompose_identity(self):
        x = np.random.default_rng(10).standard_normal(4)
        g = precompose_tight_frame(l1_norm(0.3), identity_op(4))
        np.testing.assert_allclose(g.prox(x, 1.0), l1_norm(0.3).prox(x, 1.0))

    def test_precompose_needs_certificate(self):
        with pytest.raises(DomainError):
            precompose_tight_frame(l1_norm(), matrix_op(np.eye(3)))

    def test_regularize(self):
        x = np.array([2.0, -4.0])
        np.testing.assert_allclose(regularize(zero(), 3.0).prox(x, 0.5), x / 2.5)
        np.testing.assert_array_equal(regularize(l1_norm(), 0.0).prox(x, 1.0), l1_norm().prox(x, 1.0))

    def test_conjugate_of_ball_is_norm(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            x = 2.0 * rng.standard_normal(5)
            np.testing.assert_allclose(
                convex_conjugate(ball_l2(0.8)).prox(x, 0.6), l2_norm(0.8).prox(x, 0.6), atol=1e-12
            )

    def test_conjugate_of_half_square(self):
        x = np.random.default_rng(12).standard_normal(4)
        np.testing.assert_allclose(convex_conjugate(sqr_norm()).prox(x, 0.7), sqr_norm().prox(x, 0.7))

    def test_conjugate_needs_convexity(self):
        with pytest.raises(DomainError):
            convex_conjugate(ball_l0(2))

    def test_conjugate_values(self):
        assert convex_conjugate(l1_norm(1.0))(np.array([0.5, -1.0])) == 0.0
        assert convex_conjugate(l1_norm(1.0))(np.array([1.5])) == math.inf
        assert convex_conjugate(ball_l2(2.0))(np.array([3.0, 4.0])) == pytest.approx(10.0)


SMOOTH = [
    ("quadratic", quadratic(1.5, np.array([1.0, -2.0, 0.5]), 0.3), Space(3)),
    ("least-squares-matrix", least_squares(matrix_op(np.arange(6.0).reshape(3, 2)), np.array([1.0, 0.0, -1.0])), Space(2)),
    ("least-squares-complex", least_squares(compose(select_op(np.arange(3), 8), idft_op(8, True)), np.array([1.0, 2.0, 0.5])), Space(8, COMPLEX)),
    ("cross-entropy", cross_entropy(np.array([0.0, 1.0, 1.0, 0.0])), None),
    ("moreau-l1", moreau_envelope(l1_norm(0.7), 0.5), Space(5)),
    ("moreau-ball", moreau_envelope(ball_l2(1.0), 0.3), Space(4)),
    ("sigmoid-composition", Composition(least_squares(None, np.array([0.2, 0.9])), compose(sigmoid_op(2), matrix_op(np.array([[1.0, -1.0, 2.0], [0.5, 0.5, 0.0]])))), Space(3)),
    ("linear", linear(np.array([1.0, 2.0])), Space(2)),
]


@pytest.mark.parametrize("name,f,space", SMOOTH, ids=[s[0] for s in SMOOTH])
def test_smooth_gradients(name, f, space):
    rng = np.random.default_rng(13)
    for _ in range(5):
        if space is None:
            x = rng.uniform(0.05, 0.95, 4)
        else:
            x = space.random(rng)
        fd = finite_difference_gradient(f, x)
        grad = f.gradient(x)
        assert norm2(grad - fd) <= 1e-5 * max(1.0, norm2(fd))
        value, grad2 = f.value_and_gradient(x)
        assert value == pytest.approx(f(x))
        assert relative_error(grad2, grad) <= 1e-12


class TestSmooth:
    """Smooth function library"""

    def test_least_squares_identity(self):
        x = np.array([1.0, -2.0])
        np.testing.assert_array_equal(least_squares(None, np.zeros(2)).gradient(x), x)
        assert least_squares(None, np.zeros(2)).lipschitz == 1.0

    def test_least_squares_dense(self):
        rng = np.random.default_rng(14)
        A, y, x = rng.standard_normal((3, 2)), rng.standard_normal(3), rng.standard_normal(2)
        f = least_squares(matrix_op(A), y)
        np.testing.assert_allclose(f.gradient(x), A.T @ (A @ x - y))
        assert f(x) == pytest.approx(0.5 * np.sum((A @ x - y) ** 2))

    def test_least_squares_zero_residual(self):
        A = np.array([[1.0, 2.0], [0.0, 1.0]])
        x = np.array([1.0, 1.0])
        assert norm2(least_squares(matrix_op(A), A @ x).gradient(x)) == 0.0

    def test_cross_entropy_half(self):
        f = cross_entropy(np.full(6, 0.5))
        assert f(np.full(6, 0.5)) == pytest.approx(6 * math.log(2))

    def test_cross_entropy_saturated(self):
        f = cross_entropy(np.array([1.0, 0.0]))
        assert math.isfinite(f(np.array([0.0, 1.0])))
        assert math.isfinite(norm2(f.gradient(np.array([0.0, 1.0]))))

    def test_cross_entropy_flat_where_clipped(self):
        f = cross_entropy(np.array([1.0, 0.0, 1.0]))
        y = np.array([0.0, 1.0, 0.3])
        grad = f.gradient(y)
        np.testing.assert_array_equal(grad[:2], [0.0, 0.0])
        assert grad[2] == pytest.approx(-1.0 / 0.3)
        assert f(np.array([-0.5, 1.5, 0.3])) == f(y)

    def test_cross_entropy_shape(self):
        with pytest.raises(ShapeMismatchError):
            cross_entropy(np.zeros(3))(np.zeros(4))

    def test_moreau_envelope_huber(self):
        beta, f = 0.5, moreau_envelope(l1_norm(1.0), 0.5)
        assert f(np.array([3.0])) == pytest.approx(3.0 - beta / 2)
        assert f(np.array([0.2])) == pytest.approx(0.2**2 / (2 * beta))

    def test_moreau_envelope_below_function(self):
        rng = np.random.default_rng(15)
        h = l2_norm(0.9)
        f = moreau_envelope(h, 0.4)
        for _ in range(20):
            x = rng.standard_normal(4)
            assert f(x) <= h(x) + 1e-12

    def test_moreau_envelope_beta(self):
        with pytest.raises(DomainError):
            moreau_envelope(l1_norm(), 0.0)

    def test_quadratic_conjugate(self):
        q = quadratic(2.0, np.array([1.0, -1.0]), 0.5)
        conj = q.conjugate()
        u = np.array([0.3, 0.7])
        # f*(u) = sup_x <u, x> - f(x), attained at x = (u - q) / rho
        x = (u - q.q) / q.rho
        assert conj(u) == pytest.approx(u @ x - q(x))
