#!/usr/bin/python3
# -*- coding: utf-8 -*-
# vim: set ts=4
#
# Copyright 2024-present proxkit contributors
#
# SPDX-License-Identifier: MIT

import numpy as np
import pytest
import scipy.special

from proxkit.exceptions import DomainError, ShapeMismatchError, StaleCacheError
from proxkit.fao import (
    OpDag,
    broadcast_op,
    compose,
    conv_op,
    dag_backward,
    dag_forward,
    dct_op,
    dft_op,
    diag_op,
    hcat,
    identity_op,
    idct_op,
    idft_op,
    inputs,
    matrix_op,
    node,
    output_mul,
    rmatmul_op,
    scale_op,
    select_op,
    sigmoid_op,
    variation_op,
    zero_op,
)
from proxkit.tensor import COMPLEX, SignalTuple, Space, inner, norm2

from test.oracles import adjoint_gap, dense_matrix, finite_difference_gradient


def _random_composites(rng):
    A = matrix_op(rng.standard_normal((6, 5)))
    B = matrix_op(rng.standard_normal((5, 5)))
    C = matrix_op(rng.standard_normal((6, 4)))
    return [
        compose(A, B),
        compose(A, dct_op(5)),
        compose(dct_op(6), A),
        compose(select_op([0, 2, 3], 6), A),
        compose(scale_op(-2.0, 6), compose(A, idct_op(5))),
        hcat([A, C]),
        hcat([A, compose(A, B)]),
        hcat([identity_op(6), A, C]),
        compose(diag_op(rng.standard_normal(6)), hcat([A, C])),
        compose(conv_op(rng.standard_normal(3), 4), compose(select_op([1, 2, 3, 4], 6), A)),
    ]


def _linear_ops():
    rng = np.random.default_rng(7)
    return [
        matrix_op(rng.standard_normal((4, 6))),
        matrix_op(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))),
        conv_op(rng.standard_normal(5), 9),
        conv_op(rng.standard_normal(3), 6, COMPLEX),
        dft_op(8),
        idft_op(8),
        idft_op(8, real_output=True),
        dct_op(7),
        idct_op(7),
        select_op([4, 0, 2], 6),
        variation_op(5, 4),
        diag_op(rng.standard_normal(6)),
        rmatmul_op(rng.standard_normal((2, 7)), 3),
        broadcast_op(3, 5),
        scale_op(3.0, (2, 2)),
        zero_op(3, 4),
    ] + _random_composites(rng)


@pytest.mark.parametrize("op", _linear_ops(), ids=repr)
def test_adjoint_consistency(op):
    rng = np.random.default_rng(11)
    for _ in range(20):
        gap, scale = adjoint_gap(op, rng)
        assert gap <= 1e-10 * scale


@pytest.mark.parametrize(
    "op",
    [dft_op(16), idft_op(16), idft_op(16, real_output=True), dct_op(9), idct_op(9),
     select_op([1, 5, 2], 8), compose(select_op(np.arange(8), 48), idft_op(48, True))],
    ids=repr,
)
def test_tight_frames(op):
    rng = np.random.default_rng(12)
    y = op.codomain.random(rng)
    assert norm2(op(op.adjoint(y)) - op.tight_frame_mu * y) <= 1e-12 * (1 + norm2(y))


class TestConstructors:
    """Concrete operators against direct oracles"""

    def test_conv_matches_naive(self):
        rng = np.random.default_rng(0)
        for n, m in ((1, 1), (10, 3), (64, 64), (17, 40)):
            h, x = rng.standard_normal(m), rng.standard_normal(n)
            naive = np.zeros(n + m - 1)
            for i in range(n):
                for j in range(m):
                    naive[i + j] += x[i] * h[j]
            assert norm2(conv_op(h, n)(x) - naive) <= 1e-10 * (1 + norm2(naive))

    def test_conv_small(self):
        y = conv_op([1.0, 1.0], 3)(np.array([1.0, 0.0, 0.0]))
        np.testing.assert_allclose(y, [1.0, 1.0, 0.0, 0.0], atol=1e-14)

    def test_dft_unitary_scaling(self):
        x = np.zeros(4, dtype=complex)
        x[0] = 1.0
        np.testing.assert_allclose(dft_op(4)(x), np.full(4, 0.5))

    def test_dct_inverse(self):
        x = np.random.default_rng(1).standard_normal(10)
        np.testing.assert_allclose(idct_op(10)(dct_op(10)(x)), x, atol=1e-12)

    def test_select_adjoint_zero_pads(self):
        S = select_op([3, 1], 5)
        np.testing.assert_array_equal(S(np.arange(5.0)), [3.0, 1.0])
        np.testing.assert_array_equal(S.adjoint(np.array([7.0, 8.0])), [0, 8, 0, 7, 0])

    def test_select_rejects_bad_indices(self):
        with pytest.raises(DomainError):
            select_op([0, 0], 3)
        with pytest.raises(DomainError):
            select_op([3], 3)

    def test_variation_constant_image(self):
        y = variation_op(6, 4)(np.full((6, 4), 2.5))
        assert y.shape == (24, 2)
        assert norm2(y) == 0.0

    def test_variation_differences(self):
        x = np.array([[0.0, 1.0], [2.0, 4.0]])
        y = variation_op(2, 2)(x)
        np.testing.assert_array_equal(y[:, 0], [2.0, 3.0, 0.0, 0.0])
        np.testing.assert_array_equal(y[:, 1], [1.0, 0.0, 2.0, 0.0])

    def test_diag_tight_frame_certificate(self):
        assert diag_op(np.array([2.0, -2.0])).tight_frame_mu == 4.0
        assert diag_op(np.array([1.0, 2.0])).tight_frame_mu is None

    def test_line_spectra_mapping_shapes(self):
        A = compose(select_op(np.arange(8), 48), idft_op(48, real_output=True))
        assert A.domain == Space(48, COMPLEX)
        assert A.codomain == Space(8)

    def test_line_spectra_mapping_on_exponential(self):
        sn, n, k = 32, 8, 3
        x = np.zeros(sn, dtype=complex)
        x[k] = 1.0
        A = compose(select_op(np.arange(n), sn), idft_op(sn, real_output=True))
        direct = np.array(
            [sum(x[j] * np.exp(2j * np.pi * j * t / sn) for j in range(sn)) for t in range(n)]
        ).real / np.sqrt(sn)
        np.testing.assert_allclose(A(x), direct, atol=1e-12)

    def test_adjoint_operator_zero_pads(self):
        pad = select_op(np.arange(3), 6, COMPLEX).H
        assert pad.domain == Space(3, COMPLEX)
        assert pad.codomain == Space(6, COMPLEX)
        x = np.array([1.0 + 2.0j, -1.0, 3.0j])
        np.testing.assert_array_equal(pad(x), [1.0 + 2.0j, -1.0, 3.0j, 0.0, 0.0, 0.0])
        np.testing.assert_array_equal(pad.adjoint(pad(x)), x)

    def test_sigmoid_real_only(self):
        with pytest.raises(DomainError):
            sigmoid_op(Space(3, COMPLEX))


class TestCalculus:
    """compose, hcat and output_mul"""

    def test_compose_identity(self):
        rng = np.random.default_rng(2)
        A = matrix_op(rng.standard_normal((3, 4)))
        x = rng.standard_normal(4)
        np.testing.assert_array_equal(compose(identity_op(3), A)(x), A(x))

    def test_compose_adjoint_dense(self):
        rng = np.random.default_rng(3)
        A, B = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
        y = rng.standard_normal(3)
        AB = compose(matrix_op(A), matrix_op(B))
        np.testing.assert_allclose(AB.adjoint(y), B.T @ A.T @ y, atol=1e-12)
        np.testing.assert_allclose(dense_matrix(AB), A @ B, atol=1e-12)

    def test_compose_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            compose(matrix_op(np.ones((2, 3))), matrix_op(np.ones((2, 2))))

    def test_compose_tight_frames(self):
        assert compose(dct_op(4), scale_op(2.0, 4)).tight_frame_mu == 4.0

    def test_matmul_operator(self):
        rng = np.random.default_rng(4)
        A = matrix_op(rng.standard_normal((2, 3)))
        B = matrix_op(rng.standard_normal((3, 3)))
        x = rng.standard_normal(3)
        np.testing.assert_allclose((A @ B)(x), A(B(x)))

    def test_hcat_sum(self):
        x1, x2 = np.array([1.0, 2.0]), np.array([3.0, -1.0])
        op = hcat([identity_op(2), identity_op(2)])
        np.testing.assert_array_equal(op(SignalTuple([x1, x2])), x1 + x2)
        assert op.tight_frame_mu == 2.0

    def test_hcat_singleton(self):
        A = matrix_op(np.arange(6.0).reshape(2, 3))
        assert hcat([A]) is A

    def test_hcat_adjoint_stacks_transposes(self):
        rng = np.random.default_rng(5)
        A, B = rng.standard_normal((3, 2)), rng.standard_normal((3, 4))
        y = rng.standard_normal(3)
        g = hcat([matrix_op(A), matrix_op(B)]).adjoint(y)
        np.testing.assert_allclose(np.concatenate(list(g)), np.hstack([A, B]).T @ y)

    def test_hcat_codomain_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            hcat([identity_op(2), identity_op(3)])

    def test_output_mul_scalar(self):
        op = output_mul(identity_op((1, 1)), identity_op((1, 1)))
        x = SignalTuple([np.array([[2.0]]), np.array([[3.0]])])
        y, pullback = op.linearize(x)
        np.testing.assert_array_equal(y, [[6.0]])
        g = pullback(np.array([[1.0]]))
        np.testing.assert_array_equal(g[0], [[3.0]])
        np.testing.assert_array_equal(g[1], [[2.0]])

    def test_output_mul_zero_input(self):
        op = output_mul(identity_op((2, 3)), identity_op((3, 2)))
        x = SignalTuple([np.zeros((2, 3)), np.ones((3, 2))])
        assert norm2(op(x)) == 0.0

    def test_output_mul_inner_dimension(self):
        with pytest.raises(ShapeMismatchError):
            output_mul(identity_op((2, 3)), identity_op((2, 2)))

    def test_output_mul_jacobian_linear_in_gradient(self):
        rng = np.random.default_rng(6)
        op = output_mul(identity_op((2, 3)), identity_op((3, 4)))
        x = op.domain.random(rng)
        _, pullback = op.linearize(x)
        g1, g2 = rng.standard_normal((2, 4)), rng.standard_normal((2, 4))
        lhs = pullback(2.0 * g1 + g2)
        rhs = 2.0 * pullback(g1) + pullback(g2)
        assert norm2(lhs - rhs) <= 1e-12 * (1 + norm2(rhs))

    def test_output_mul_real_only(self):
        with pytest.raises(DomainError):
            output_mul(identity_op(Space((2, 2), COMPLEX)), identity_op((2, 2)))


class TestDag:
    """Forward evaluation and back-propagation"""

    def test_identity_dag(self):
        dag = OpDag.from_operator(identity_op(3))
        x = np.array([1.0, 2.0, 3.0])
        evaluation = dag_forward(dag, x)
        np.testing.assert_array_equal(evaluation.output, x)
        np.testing.assert_array_equal(dag_backward(dag, x, evaluation)[0], x)

    def test_conv_dag(self):
        dag = OpDag.from_operator(conv_op([1.0, 1.0], 3))
        np.testing.assert_allclose(dag(np.array([1.0, 0.0, 0.0])), [1, 1, 0, 0], atol=1e-14)

    def test_linear_chain_backward(self):
        rng = np.random.default_rng(8)
        A, B = rng.standard_normal((3, 4)), rng.standard_normal((4, 5))
        (x_in,) = slots = inputs(5)
        dag = OpDag(node(matrix_op(A), node(matrix_op(B), x_in)), slots)
        x, g = rng.standard_normal(5), rng.standard_normal(3)
        grad = dag_backward(dag, g, dag_forward(dag, x))
        np.testing.assert_allclose(grad[0], B.T @ A.T @ g, atol=1e-12)

    def test_sigmoid_affine_chain(self):
        rng = np.random.default_rng(9)
        W = rng.standard_normal((3, 4))
        dag = OpDag.from_operator(compose(sigmoid_op(3), matrix_op(W)))
        x, g = rng.standard_normal(4), rng.standard_normal(3)
        grad = dag_backward(dag, g, dag_forward(dag, x))[0]
        fd = finite_difference_gradient(lambda z: inner(g, dag(z)), x)
        assert norm2(grad - fd) <= 1e-6 * max(1.0, norm2(fd))

    def test_sigmoid_jacobian(self):
        x = np.array([0.0, 1.0, -2.0])
        s = scipy.special.expit(x)
        np.testing.assert_allclose(
            sigmoid_op(3).jacobian_adjoint(x, np.ones(3)), s * (1 - s)
        )

    def test_shared_intermediate(self):
        # the same node feeds both factors of the product
        rng = np.random.default_rng(10)
        (x_in,) = slots = inputs((2, 2))
        s = node(sigmoid_op((2, 2)), x_in)
        prod = node(output_mul(identity_op((2, 2)), identity_op((2, 2))), s, s)
        dag = OpDag(prod, slots)
        x, g = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
        grad = dag_backward(dag, g, dag_forward(dag, x))[0]
        fd = finite_difference_gradient(lambda z: inner(g, dag(z)), x)
        assert norm2(grad - fd) <= 1e-5 * max(1.0, norm2(fd))

    def test_multi_input_dag(self):
        rng = np.random.default_rng(13)
        W_in, b_in = slots = inputs((3, 2), (3,))
        D = rng.standard_normal((2, 5))
        z = node(hcat([rmatmul_op(D, 3), broadcast_op(3, 5)]), W_in, b_in)
        dag = OpDag(node(sigmoid_op((3, 5)), z), slots)
        x = dag.domain.random(rng)
        g = rng.standard_normal((3, 5))
        grad = dag_backward(dag, g, dag_forward(dag, x))
        fd = finite_difference_gradient(lambda v: inner(g, dag(v)), x)
        assert norm2(grad - fd) <= 1e-5 * max(1.0, norm2(fd))

    def test_unused_input_gets_zero(self):
        a, b = slots = inputs(2, 3)
        dag = OpDag(node(identity_op(2), a), slots)
        x = SignalTuple([np.ones(2), np.ones(3)])
        grad = dag_backward(dag, np.ones(2), dag_forward(dag, x))
        np.testing.assert_array_equal(grad[1], np.zeros(3))

    def test_backward_without_forward(self):
        dag = OpDag.from_operator(identity_op(2))
        with pytest.raises(StaleCacheError):
            dag_backward(dag, np.ones(2), None)

    def test_backward_with_foreign_evaluation(self):
        dag = OpDag.from_operator(identity_op(2))
        other = OpDag.from_operator(identity_op(2))
        with pytest.raises(StaleCacheError):
            dag_backward(dag, np.ones(2), dag_forward(other, np.ones(2)))

    def test_node_shape_mismatch(self):
        (x_in,) = inputs(3)
        with pytest.raises(ShapeMismatchError):
            node(identity_op(4), x_in)

    def test_input_shape_mismatch(self):
        dag = OpDag.from_operator(identity_op(3))
        with pytest.raises(ShapeMismatchError):
            dag_forward(dag, np.ones(4))

    def test_is_linear(self):
        assert OpDag.from_operator(dct_op(3)).is_linear
        assert not OpDag.from_operator(sigmoid_op(3)).is_linear
