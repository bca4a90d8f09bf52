#!/usr/bin/python3
# -*- coding: utf-8 -*-
# vim: set ts=4
#
# Copyright 2024-present proxkit contributors
#
# SPDX-License-Identifier: MIT

"""
Forward-adjoint oracles.

Linear mappings expose ``forward`` and ``adjoint``; nonlinear mappings
expose ``forward`` and the adjoint of their Jacobian at a linearization
point. Every operator can be linearized, ``y, pullback = op.linearize(x)``,
where ``pullback`` applies the (Jacobian) adjoint at ``x`` without
recomputing the forward pass. Operators are combined with ``compose``,
``hcat`` and ``output_mul`` and wired into an ``OpDag`` when a model
reuses intermediate results.
"""

import logging

import numpy as np
import scipy.fft
import scipy.signal
import scipy.special

from proxkit.exceptions import DomainError, ShapeMismatchError, StaleCacheError
from proxkit.tensor import (
    COMPLEX,
    REAL,
    ProductSpace,
    SignalTuple,
    Space,
    as_signal,
)

logger = logging.getLogger(__name__)


def _as_space(space):
    if isinstance(space, (Space, ProductSpace)):
        return space
    return Space(space)


class Operator:
    """Mapping between two spaces."""

    is_linear = False

    def __init__(self, domain, codomain, name=None):
        self.domain = _as_space(domain)
        self.codomain = _as_space(codomain)
        self.name = name or type(self).__name__

    def __repr__(self):
        return f"{self.name}({self.domain} -> {self.codomain})"

    def __call__(self, x):
        x = as_signal(x)
        self.domain.check(x, f"{self.name} input")
        return self._forward(x)

    forward = __call__

    def _forward(self, x):
        raise NotImplementedError

    def linearize(self, x):
        raise NotImplementedError

    def jacobian_adjoint(self, x, g):
        """Apply the adjoint of the Jacobian at ``x`` to ``g``."""
        _, pullback = self.linearize(x)
        return pullback(g)

    def __matmul__(self, other):
        return compose(self, other)


class LinearOp(Operator):
    """Linear mapping given by a pair of forward/adjoint callables.

    ``tight_frame_mu`` certifies ``A A* = mu Id`` when known.
    """

    is_linear = True

    def __init__(
        self, domain, codomain, forward, adjoint, tight_frame_mu=None, name=None
    ):
        super().__init__(domain, codomain, name)
        self._fwd = forward
        self._adj = adjoint
        if tight_frame_mu is not None and tight_frame_mu < 0:
            raise DomainError("tight_frame_mu must be nonnegative")
        self.tight_frame_mu = tight_frame_mu

    def _forward(self, x):
        return self._fwd(x)

    def adjoint(self, y):
        y = as_signal(y)
        self.codomain.check(y, f"{self.name} adjoint input")
        return self._adj(y)

    def linearize(self, x):
        return self(x), self.adjoint

    def jacobian_adjoint(self, x, g):
        return self.adjoint(g)

    @property
    def H(self):
        return LinearOp(
            self.codomain, self.domain, self._adj, self._fwd, name=f"{self.name}'"
        )


class NonlinearOp(Operator):
    """Nonlinear mapping given by a forward callable and a callable
    ``jacobian_adjoint(x, g)``.

    Subclasses that can reuse forward intermediates override
    ``linearize``.
    """

    def __init__(self, domain, codomain, forward, jacobian_adjoint, name=None):
        super().__init__(domain, codomain, name)
        self._fwd = forward
        self._jac_adj = jacobian_adjoint

    def _forward(self, x):
        return self._fwd(x)

    def linearize(self, x):
        y = self(x)

        def pullback(g):
            self.codomain.check(as_signal(g), f"{self.name} gradient")
            return self._jac_adj(x, g)

        return y, pullback


class IdentityOp(LinearOp):
    def __init__(self, space):
        super().__init__(space, space, _identity, _identity, 1.0, name="Id")


def _identity(x):
    return x


class ZeroOp(LinearOp):
    def __init__(self, domain, codomain):
        domain, codomain = _as_space(domain), _as_space(codomain)
        super().__init__(
            domain,
            codomain,
            lambda x: codomain.zeros(),
            lambda y: domain.zeros(),
            0.0,
            name="Zero",
        )


class MatrixOp(LinearOp):
    """Explicit (dense or ``scipy.sparse``) matrix acting on vectors."""

    def __init__(self, matrix, field=None):
        if not hasattr(matrix, "tocsr"):
            matrix = as_signal(matrix)
        if matrix.ndim != 2:
            raise DomainError("matrix_op needs a two-dimensional matrix")
        self.matrix = matrix
        m, n = matrix.shape
        complex_matrix = np.issubdtype(matrix.dtype, np.complexfloating)
        field = field or (COMPLEX if complex_matrix else REAL)
        out_field = COMPLEX if complex_matrix or field == COMPLEX else REAL
        matrix_h = matrix.conj().T
        super().__init__(
            Space((n,), field),
            Space((m,), out_field),
            lambda x: np.asarray(matrix @ x),
            lambda y: self._cast(np.asarray(matrix_h @ y)),
            name="Matrix",
        )

    def _cast(self, x):
        if self.domain.field == REAL:
            return x.real.astype(np.float64)
        return x


class SelectOp(LinearOp):
    """Row selection; the adjoint zero-pads. ``S S* = Id``."""

    def __init__(self, indices, n, field=REAL):
        indices = np.asarray(indices, dtype=np.intp).ravel()
        if len(np.unique(indices)) != len(indices):
            raise DomainError("select_op indices must be unique")
        if len(indices) and (indices.min() < 0 or indices.max() >= n):
            raise DomainError(f"select_op indices out of range [0, {n})")
        self.indices = indices
        domain = Space((n,), field)

        def adjoint(y):
            x = domain.zeros()
            x[indices] = y
            return x

        super().__init__(
            domain,
            Space((len(indices),), field),
            lambda x: x[indices],
            adjoint,
            1.0,
            name="Select",
        )


def identity_op(space):
    return IdentityOp(_as_space(space))


def zero_op(domain, codomain):
    return ZeroOp(domain, codomain)


def scale_op(alpha, space):
    space = _as_space(space)
    return LinearOp(
        space,
        space,
        lambda x: alpha * x,
        lambda y: np.conj(alpha) * y,
        abs(alpha) ** 2,
        name="Scale",
    )


def matrix_op(matrix, field=None):
    return MatrixOp(matrix, field)


def conv_op(h, n, field=REAL):
    """Full discrete convolution with the FIR ``h`` (output length
    ``n + len(h) - 1``); the adjoint is a cross-correlation."""
    h = as_signal(h).ravel()
    m = len(h)
    if m == 0:
        raise DomainError("conv_op needs a non-empty filter")
    out_field = COMPLEX if field == COMPLEX or np.iscomplexobj(h) else REAL
    h_flip = np.conj(h[::-1])

    def adjoint(y):
        x = scipy.signal.fftconvolve(y, h_flip, mode="valid")
        return x if field == COMPLEX else x.real

    return LinearOp(
        Space((n,), field),
        Space((n + m - 1,), out_field),
        lambda x: scipy.signal.fftconvolve(x, h, mode="full"),
        adjoint,
        name="Conv",
    )


def dft_op(n):
    """Unitary DFT (scaled by 1/sqrt(n)); its adjoint is its inverse."""
    return LinearOp(
        Space((n,), COMPLEX),
        Space((n,), COMPLEX),
        lambda x: scipy.fft.fft(x, norm="ortho"),
        lambda y: scipy.fft.ifft(y, norm="ortho"),
        1.0,
        name="DFT",
    )


def idft_op(n, real_output=False):
    """Unitary inverse DFT.

    With ``real_output`` the mapping keeps the real part of the inverse
    transform, C^n -> R^n; its adjoint (for the real inner product) is the
    forward DFT of a real signal and ``A A* = Id`` still holds.
    """
    if real_output:
        return LinearOp(
            Space((n,), COMPLEX),
            Space((n,), REAL),
            lambda x: scipy.fft.ifft(x, norm="ortho").real,
            lambda y: scipy.fft.fft(y, norm="ortho"),
            1.0,
            name="IDFT",
        )
    return LinearOp(
        Space((n,), COMPLEX),
        Space((n,), COMPLEX),
        lambda x: scipy.fft.ifft(x, norm="ortho"),
        lambda y: scipy.fft.fft(y, norm="ortho"),
        1.0,
        name="IDFT",
    )


def dct_op(n):
    """Orthonormal DCT-II; the adjoint is the orthonormal DCT-III."""
    return LinearOp(
        Space((n,)),
        Space((n,)),
        lambda x: scipy.fft.dct(x, type=2, norm="ortho"),
        lambda y: scipy.fft.idct(y, type=2, norm="ortho"),
        1.0,
        name="DCT",
    )


def idct_op(n):
    return LinearOp(
        Space((n,)),
        Space((n,)),
        lambda x: scipy.fft.idct(x, type=2, norm="ortho"),
        lambda y: scipy.fft.dct(y, type=2, norm="ortho"),
        1.0,
        name="IDCT",
    )


def select_op(indices, n, field=REAL):
    return SelectOp(indices, n, field)


def _forward_diff(x, axis):
    # last difference against a replicated edge is zero
    d = np.zeros_like(x)
    if axis == 0:
        d[:-1, :] = x[1:, :] - x[:-1, :]
    else:
        d[:, :-1] = x[:, 1:] - x[:, :-1]
    return d


def _forward_diff_adjoint(p, axis):
    x = np.zeros_like(p)
    if axis == 0:
        x[1:, :] += p[:-1, :]
        x[:-1, :] -= p[:-1, :]
    else:
        x[:, 1:] += p[:, :-1]
        x[:, :-1] -= p[:, :-1]
    return x


def variation_op(n, m):
    """Forward finite differences of an ``n x m`` image, stacked as the two
    columns of an ``nm x 2`` signal (vertical, horizontal). The adjoint is
    the negative divergence."""

    def forward(x):
        return np.stack(
            [_forward_diff(x, 0).ravel(), _forward_diff(x, 1).ravel()], axis=1
        )

    def adjoint(y):
        return _forward_diff_adjoint(
            y[:, 0].reshape(n, m), 0
        ) + _forward_diff_adjoint(y[:, 1].reshape(n, m), 1)

    return LinearOp(
        Space((n, m)), Space((n * m, 2)), forward, adjoint, name="Variation"
    )


def diag_op(d, field=None):
    d = as_signal(d)
    field = field or (COMPLEX if np.iscomplexobj(d) else REAL)
    out_field = COMPLEX if np.iscomplexobj(d) or field == COMPLEX else REAL
    modulus = np.abs(d)
    mu = None
    if d.size and np.allclose(modulus, modulus.flat[0], rtol=0, atol=0):
        mu = float(modulus.flat[0]) ** 2

    def adjoint(y):
        x = np.conj(d) * y
        return x if field == COMPLEX else x.real

    return LinearOp(
        Space(d.shape, field), Space(d.shape, out_field), lambda x: d * x, adjoint,
        mu, name="Diag",
    )


def rmatmul_op(D, rows):
    """``X -> X D`` for ``X`` with ``rows`` rows; adjoint ``G -> G D*``."""
    D = as_signal(D)
    k, m = D.shape
    D_h = D.conj().T
    return LinearOp(
        Space((rows, k)),
        Space((rows, m)),
        lambda x: x @ D,
        lambda y: (y @ D_h).real,
        name="RMatMul",
    )


def broadcast_op(n, m):
    """``b -> b 1^T``, repeating a length-``n`` vector over ``m`` columns;
    the adjoint sums columns."""
    return LinearOp(
        Space((n,)),
        Space((n, m)),
        lambda b: np.repeat(b[:, None], m, axis=1),
        lambda y: y.sum(axis=1),
        name="Broadcast",
    )


class SigmoidOp(NonlinearOp):
    """Elementwise logistic function."""

    def __init__(self, space):
        space = _as_space(space)
        if space.field != REAL:
            raise DomainError("sigmoid_op is defined on real signals only")
        super().__init__(space, space, scipy.special.expit, None, name="Sigmoid")

    def linearize(self, x):
        s = self(x)
        slope = s * (1.0 - s)

        def pullback(g):
            return as_signal(g) * slope

        return s, pullback

    def jacobian_adjoint(self, x, g):
        s = scipy.special.expit(as_signal(x))
        return as_signal(g) * s * (1.0 - s)


def sigmoid_op(space):
    return SigmoidOp(space)


class ComposedOp(NonlinearOp):
    """``a o b`` with at least one nonlinear factor; ``a`` is linearized at
    ``b(x)``."""

    def __init__(self, a, b):
        self.a, self.b = a, b
        super().__init__(b.domain, a.codomain, None, None, name=f"{a.name}*{b.name}")

    def _forward(self, x):
        return self.a(self.b(x))

    def linearize(self, x):
        x = as_signal(x)
        self.domain.check(x, f"{self.name} input")
        bx, pull_b = self.b.linearize(x)
        y, pull_a = self.a.linearize(bx)
        return y, lambda g: pull_b(pull_a(g))


def compose(a, b):
    """Return the mapping ``x -> a(b(x))``."""
    if a.domain != b.codomain:
        raise ShapeMismatchError(
            f"cannot compose {a!r} after {b!r}: {a.domain} != {b.codomain}"
        )
    if isinstance(a, IdentityOp):
        return b
    if isinstance(b, IdentityOp):
        return a
    if a.is_linear and b.is_linear:
        mu = None
        if a.tight_frame_mu is not None and b.tight_frame_mu is not None:
            mu = a.tight_frame_mu * b.tight_frame_mu
        return LinearOp(
            b.domain,
            a.codomain,
            lambda x: a(b(x)),
            lambda y: b.adjoint(a.adjoint(y)),
            mu,
            name=f"{a.name}*{b.name}",
        )
    return ComposedOp(a, b)


class HCatOp(NonlinearOp):
    """``[A_1, ..., A_k]`` with at least one nonlinear block."""

    def __init__(self, ops):
        self.ops = tuple(ops)
        super().__init__(
            ProductSpace(op.domain for op in self.ops),
            self.ops[0].codomain,
            None,
            None,
            name="HCat",
        )

    def _forward(self, x):
        return sum(op(c) for op, c in zip(self.ops, x))

    def linearize(self, x):
        self.domain.check(x, "HCat input")
        parts = [op.linearize(c) for op, c in zip(self.ops, x)]
        y = sum(p[0] for p in parts)
        return y, lambda g: SignalTuple(p[1](g) for p in parts)


def hcat(ops):
    """Horizontal concatenation: ``(x_1, ..., x_k) -> sum_j A_j x_j``."""
    ops = list(ops)
    if not ops:
        raise DomainError("hcat needs at least one operator")
    if len(ops) == 1:
        return ops[0]
    codomain = ops[0].codomain
    for op in ops[1:]:
        if op.codomain != codomain:
            raise ShapeMismatchError(
                f"hcat codomains differ: {codomain} != {op.codomain}"
            )
    if not all(op.is_linear for op in ops):
        return HCatOp(ops)
    mus = [op.tight_frame_mu for op in ops]
    mu = None if any(m is None for m in mus) else float(sum(mus))
    op = LinearOp(
        ProductSpace(op.domain for op in ops),
        codomain,
        lambda x: sum(op(c) for op, c in zip(ops, x)),
        lambda y: SignalTuple(op.adjoint(y) for op in ops),
        mu,
        name="HCat",
    )
    op.ops = tuple(ops)
    return op


class OutputMulOp(NonlinearOp):
    """``(X_1, X_2) -> (A X_1)(B X_2)``, always nonlinear."""

    def __init__(self, a, b):
        for op in (a, b):
            if op.domain.field != REAL or op.codomain.field != REAL:
                raise DomainError("output_mul is defined on real signals only")
        if len(a.codomain.shape) != 2 or len(b.codomain.shape) != 2:
            raise ShapeMismatchError("output_mul needs matrix-valued operators")
        n, l = a.codomain.shape
        l2, m = b.codomain.shape
        if l != l2:
            raise ShapeMismatchError(
                f"output_mul inner dimensions differ: {l} != {l2}"
            )
        self.a, self.b = a, b
        super().__init__(
            ProductSpace([a.domain, b.domain]),
            Space((n, m)),
            None,
            None,
            name="OutputMul",
        )

    def _forward(self, x):
        return self.a(x[0]) @ self.b(x[1])

    def linearize(self, x):
        self.domain.check(x, "OutputMul input")
        ax, pull_a = self.a.linearize(x[0])
        bx, pull_b = self.b.linearize(x[1])

        def pullback(g):
            g = as_signal(g)
            return SignalTuple([pull_a(g @ bx.T), pull_b(ax.T @ g)])

        return ax @ bx, pullback


def output_mul(a, b):
    return OutputMulOp(a, b)


# DAG


class Node:
    """A vertex of an ``OpDag``: either an input slot or an operator
    applied to the outputs of its children."""

    __slots__ = ("op", "children", "index", "space")

    def __init__(self, op=None, children=(), index=None, space=None):
        self.op = op
        self.children = tuple(children)
        self.index = index
        self.space = space if op is None else op.codomain

    @property
    def is_input(self):
        return self.op is None

    def __repr__(self):
        if self.is_input:
            return f"Input[{self.index}]({self.space})"
        return f"Node({self.op.name})"


def inputs(*spaces):
    """Create the input slots of a DAG, one per variable space."""
    return [Node(index=i, space=_as_space(s)) for i, s in enumerate(spaces)]


def node(op, *children):
    """Apply ``op`` to the outputs of ``children``; several children are
    passed to ``op`` as a ``SignalTuple``."""
    if not children:
        raise DomainError("node needs at least one child")
    if len(children) == 1:
        expected = children[0].space
    else:
        expected = ProductSpace(c.space for c in children)
    if op.domain != expected:
        raise ShapeMismatchError(
            f"{op!r} cannot take children producing {expected}"
        )
    return Node(op=op, children=children)


class OpDag:
    """Directed acyclic graph of operators with a single output."""

    def __init__(self, root, inputs):
        self.root = root
        self.inputs = list(inputs)
        for i, slot in enumerate(self.inputs):
            if not slot.is_input or slot.index != i:
                raise DomainError(f"input slot {i} is not an input node")
        self.domain = ProductSpace(slot.space for slot in self.inputs)
        self.codomain = root.space
        self.nodes = self._toposort(root)
        for n in self.nodes:
            if n.is_input and (
                n.index >= len(self.inputs) or self.inputs[n.index] is not n
            ):
                raise DomainError(f"{n!r} is not one of the DAG inputs")

    @classmethod
    def from_operator(cls, op):
        if isinstance(op.domain, ProductSpace):
            slots = inputs(*op.domain)
            return cls(node(op, *slots), slots)
        slots = inputs(op.domain)
        return cls(node(op, slots[0]), slots)

    @staticmethod
    def _toposort(root):
        order, state = [], {}

        def visit(n):
            mark = state.get(id(n))
            if mark == "done":
                return
            if mark == "active":
                raise DomainError("operator graph contains a cycle")
            state[id(n)] = "active"
            for c in n.children:
                visit(c)
            state[id(n)] = "done"
            order.append(n)

        visit(root)
        return order

    @property
    def is_linear(self):
        return all(n.is_input or n.op.is_linear for n in self.nodes)

    def __call__(self, x):
        return dag_forward(self, x).output

    def forward(self, x):
        return dag_forward(self, x)


class DagEvaluation:
    """Forward values and pullbacks of one DAG evaluation; owned by a
    single solve."""

    def __init__(self, dag, output, pullbacks):
        self.dag = dag
        self.output = output
        self.pullbacks = pullbacks

    def backward(self, g_out):
        return dag_backward(self.dag, g_out, self)


def dag_forward(dag, x):
    """Evaluate every node of ``dag`` at ``x`` (a ``SignalTuple`` with one
    entry per input) and keep the pullbacks for ``dag_backward``."""
    if not isinstance(x, SignalTuple):
        x = SignalTuple([x])
    dag.domain.check(x, "DAG input")
    values, pullbacks = {}, {}
    for n in dag.nodes:
        if n.is_input:
            values[id(n)] = x[n.index]
            continue
        if len(n.children) == 1:
            arg = values[id(n.children[0])]
        else:
            arg = SignalTuple(values[id(c)] for c in n.children)
        values[id(n)], pullbacks[id(n)] = n.op.linearize(arg)
    return DagEvaluation(dag, values[id(dag.root)], pullbacks)


def _accumulate(grads, key, g):
    if key in grads:
        grads[key] = grads[key] + g
    else:
        grads[key] = g


def dag_backward(dag, g_out, evaluation):
    """Propagate ``g_out`` back through ``dag`` using the pullbacks stored
    by ``dag_forward``; returns one gradient per DAG input."""
    if evaluation is None:
        raise StaleCacheError("backward pass without a forward evaluation")
    if evaluation.dag is not dag:
        raise StaleCacheError("forward evaluation belongs to another DAG")
    g_out = as_signal(g_out)
    dag.codomain.check(g_out, "DAG output gradient")
    grads = {id(dag.root): g_out}
    result = [None] * len(dag.inputs)
    for n in reversed(dag.nodes):
        g = grads.pop(id(n), None)
        if g is None:
            continue
        if n.is_input:
            result[n.index] = g
            continue
        gi = evaluation.pullbacks[id(n)](g)
        if len(n.children) == 1:
            _accumulate(grads, id(n.children[0]), gi)
        else:
            for c, gc in zip(n.children, gi):
                _accumulate(grads, id(c), gc)
    return SignalTuple(
        g if g is not None else slot.space.zeros()
        for g, slot in zip(result, dag.inputs)
    )
